#include "degenflow/parallel.hpp"

namespace degenflow {

int& default_threads() {
    static int n = 0;
    return n;
}

} // namespace degenflow
