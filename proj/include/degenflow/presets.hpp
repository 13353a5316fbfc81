#pragma once

#include "degenflow/model_spec.hpp"

#include <limits>
#include <string>
#include <vector>

namespace degenflow {

struct PresetInfo {
    std::string name;
    int dim = 2;
    double noise = 0.5;      ///< default reduced noise amplitude
    std::string summary;
};

const std::vector<PresetInfo>& presets();
const PresetInfo& preset_info(const std::string& name);

/// Named model; NaN noise keeps the preset default. Throws ValidationError for
/// unknown names.
ModelSpec preset_model(const std::string& name, double noise = std::numeric_limits<double>::quiet_NaN());

} // namespace degenflow
