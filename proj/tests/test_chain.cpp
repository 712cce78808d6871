#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "bethelab/chain.hpp"
#include "doctest.h"

using bethelab::Cplx;
using bethelab::PI;
using namespace bethelab::lattice;

namespace {

bool set_close(std::vector<Cplx> a, std::vector<Cplx> b, double tol)
{
    if (a.size() != b.size()) return false;
    for (const Cplx& x : a) {
        auto it = std::min_element(b.begin(), b.end(), [&](const Cplx& u, const Cplx& v) {
            return std::abs(u - x) < std::abs(v - x);
        });
        if (it == b.end() || std::abs(*it - x) > tol) return false;
        b.erase(it);
    }
    return true;
}

Cplx power_sum(const std::vector<Cplx>& eta, int s)
{
    Cplx acc(0.0, 0.0);
    for (const Cplx& e : eta) acc += std::pow(e, -s);
    return acc;
}

} // namespace

TEST_CASE("symmetric inhomogeneity pattern has the expected power sums")
{
    for (int r = 1; r <= 8; ++r) {
        const std::vector<Cplx> eta = z_r_inhomogeneities(r);
        REQUIRE(eta.size() == static_cast<std::size_t>(r));
        for (const Cplx& e : eta) CHECK(std::abs(std::abs(e) - 1.0) < 1e-14);
        for (int s = 1; s < r; ++s) CHECK(std::abs(power_sum(eta, s)) < 1e-12);
        const double want = (r % 2 == 0) ? -static_cast<double>(r) : static_cast<double>(r);
        CHECK(std::abs(power_sum(eta, r) - want) < 1e-12);
    }
}

TEST_CASE("chain constants")
{
    ChainSpec spec;
    spec.r = 3;
    spec.A = 1;
    spec.n = 3.0;
    spec.k = 0.05;
    spec.N = 24;
    CHECK(spec.gamma() == doctest::Approx(PI / 2).epsilon(1e-14));
    CHECK(spec.N0() == doctest::Approx(PI / 6).epsilon(1e-13));
    CHECK(spec.zeta_to_E() == doctest::Approx(std::cbrt(2.0 * 24 / PI)).epsilon(1e-13));
    CHECK(spec.nu() == doctest::Approx(1.0).epsilon(1e-14));

    ChainSpec gen;
    gen.r = 5;
    gen.A = 2;
    gen.n = 7.0;
    gen.N = 200;
    CHECK(gen.gamma() == doctest::Approx(2 * PI / 5 + PI / 12).epsilon(1e-14));
    CHECK(gen.d_odd(3) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("vanishing invariants reproduce the symmetric point")
{
    for (int r : {3, 5, 7}) {
        ChainSpec spec;
        spec.r = r;
        spec.A = (r - 1) / 2;
        spec.n = 2.5 * r;
        spec.N = 8 * r;
        const std::vector<double> zero((r - 1) / 2, 0.0);
        const std::vector<Cplx> eta = build_inhomogeneities(spec, zero);
        CHECK(set_close(eta, z_r_inhomogeneities(r), 1e-10));
    }
}

TEST_CASE("constructed inhomogeneities carry the requested invariants")
{
    ChainSpec spec;
    spec.r = 5;
    spec.A = 2;
    spec.n = 7.0;
    spec.k = 0.03;
    spec.N = 200;
    const std::vector<double> a = {0.3, -0.2};
    const std::vector<Cplx> eta = build_inhomogeneities(spec, a);
    REQUIRE(eta.size() == 5);

    const double base = spec.N / (spec.r * spec.N0());
    for (int j = 0; j <= 1; ++j) {
        const int s = 2 * j + 1;
        const Cplx val = std::pow(base, 1.0 - static_cast<double>(s) / spec.r) *
                         power_sum(eta, s) / (static_cast<double>(s) * spec.r);
        CHECK(std::abs(val - a[j]) < 1e-9);
    }
    // even power sums vanish, and the r-th one is pinned
    CHECK(std::abs(power_sum(eta, 2)) < 1e-9);
    CHECK(std::abs(power_sum(eta, 4)) < 1e-9);
    CHECK(std::abs(power_sum(eta, 5) - 5.0) < 1e-9);
}

TEST_CASE("canonical ordering tracks the symmetric pattern")
{
    ChainSpec spec;
    spec.r = 5;
    spec.A = 2;
    spec.n = 7.0;
    spec.N = 200;
    std::vector<Cplx> eta = build_inhomogeneities(spec, {0.25, 0.1});
    std::vector<Cplx> shuffled = {eta[3], eta[0], eta[4], eta[2], eta[1]};
    canonical_order(shuffled, spec.r);
    for (int l = 0; l < 5; ++l) CHECK(std::abs(shuffled[l] - eta[l]) < 1e-14);
}
