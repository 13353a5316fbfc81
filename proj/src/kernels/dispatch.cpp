#include "degenflow/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace degenflow::kernels {

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa detect() {
    const char* env = std::getenv("DEGENFLOW_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (cpu_has_avx2()) return Isa::Avx2;
#if defined(__aarch64__) && defined(__ARM_NEON)
    return Isa::Neon;
#else
    return Isa::Scalar;
#endif
}

struct Table {
    decltype(&scalar::advance_drifted) advance;
    decltype(&scalar::horner2) horner;
    Isa isa;
};

const Table& table() {
    static const Table t = [] {
        switch (detect()) {
        case Isa::Avx2: return Table{&avx2::advance_drifted, &avx2::horner2, Isa::Avx2};
        case Isa::Neon: return Table{&neon::advance_drifted, &neon::horner2, Isa::Neon};
        default: return Table{&scalar::advance_drifted, &scalar::horner2, Isa::Scalar};
        }
    }();
    return t;
}

} // namespace

void advance_drifted(std::size_t n, double* z, const double* normals, const double* exp_up,
                     const double* exp_low, const DriftedStep& p, std::uint8_t* hit) {
    table().advance(n, z, normals, exp_up, exp_low, p, hit);
}

void horner2(const double* c, int n1, int n2, std::size_t n, const double* x1, const double* x2, double* out) {
    table().horner(c, n1, n2, n, x1, x2, out);
}

Isa active_isa() { return table().isa; }

const char* isa_name(Isa isa) {
    switch (isa) {
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
    default: return "scalar";
    }
}

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2: return cpu_has_avx2();
#if defined(__aarch64__) && defined(__ARM_NEON)
    case Isa::Neon: return true;
#endif
    default: return false;
    }
}

} // namespace degenflow::kernels
