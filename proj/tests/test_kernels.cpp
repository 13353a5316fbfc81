#include "doctest.h"

#include "degenflow/kernels.hpp"
#include "degenflow/poly.hpp"
#include "degenflow/rng.hpp"

#include <cstring>
#include <vector>

using namespace degenflow;
using namespace degenflow::kernels;

namespace {

struct Batch {
    std::vector<double> z, normals, eu, el;
    explicit Batch(std::size_t n, std::uint64_t seed) : z(n), normals(n), eu(n), el(n) {
        Rng r(seed, 0);
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = 2 * r.uniform() - 1;
            normals[i] = r.normal();
            eu[i] = r.exponential();
            el[i] = r.exponential();
        }
    }
};

} // namespace

TEST_CASE("kernels: active isa is reported") {
    CHECK(isa_available(active_isa()));
    CHECK(std::strlen(isa_name(active_isa())) > 0);
}

TEST_CASE("kernels: drifted advance is bit-identical across variants") {
    const DriftedStep p{0.013, 0.1, 0.005, 1.0, -1.0};
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 64u, 1027u}) {
        Batch a(n, 100 + n), b(n, 100 + n);
        std::vector<std::uint8_t> ha(n), hb(n);
        scalar::advance_drifted(n, a.z.data(), a.normals.data(), a.eu.data(), a.el.data(), p, ha.data());
        if (isa_available(Isa::Avx2))
            avx2::advance_drifted(n, b.z.data(), b.normals.data(), b.eu.data(), b.el.data(), p, hb.data());
        else
            advance_drifted(n, b.z.data(), b.normals.data(), b.eu.data(), b.el.data(), p, hb.data());
        CHECK(std::memcmp(a.z.data(), b.z.data(), n * sizeof(double)) == 0);
        CHECK(ha == hb);
    }
}

TEST_CASE("kernels: barrier classification rules") {
    const DriftedStep p{0.0, 1.0, 0.5, 1.0, -1.0};
    double z[4] = {0.9, -0.9, 0.0, 0.95};
    const double nrm[4] = {0.2, -0.2, 0.0, 0.0};
    const double eu[4] = {10, 10, 10, 0.0};
    const double el[4] = {10, 10, 10, 10};
    std::uint8_t hit[4];
    scalar::advance_drifted(4, z, nrm, eu, el, p, hit);
    CHECK(hit[0] == kHitUpper);  // endpoint beyond the upper barrier
    CHECK(hit[1] == kHitLower);
    // bridge from 0 to 0: d0*d1 = 1 < 0.5*10 = 5, so an upper bridge crossing wins
    CHECK(hit[2] == kHitUpper);
    // d0*d1 = 0.0025 vs 0: no upper crossing; lower: 1.95^2 < 5 -> lower
    CHECK(hit[3] == kHitLower);
}

TEST_CASE("kernels: Horner batch is bit-identical across variants") {
    const Poly2 p({{0.25, -1.5, 3.0, 0.1}, {2.0, 0.125, -0.75, 0.0}, {1.0, 1.0, 4.0, -2.0}});
    const auto t = p.table();
    std::vector<double> c;
    for (const auto& row : t) c.insert(c.end(), row.begin(), row.end());
    Rng r(5, 5);
    const std::size_t n = 1001;
    std::vector<double> x1(n), x2(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        x1[i] = r.uniform();
        x2[i] = r.uniform();
    }
    scalar::horner2(c.data(), p.deg1(), p.deg2(), n, x1.data(), x2.data(), a.data());
    if (isa_available(Isa::Avx2))
        avx2::horner2(c.data(), p.deg1(), p.deg2(), n, x1.data(), x2.data(), b.data());
    else
        horner2(c.data(), p.deg1(), p.deg2(), n, x1.data(), x2.data(), b.data());
    CHECK(std::memcmp(a.data(), b.data(), n * sizeof(double)) == 0);
    for (std::size_t i = 0; i < n; ++i) CHECK(a[i] == p(x1[i], x2[i]));
}
