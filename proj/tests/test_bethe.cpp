#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "bethelab/bethe.hpp"
#include "bethelab/chain.hpp"
#include "bethelab/quadrature.hpp"
#include "doctest.h"

using bethelab::Cplx;
using bethelab::I;
using bethelab::PI;
using namespace bethelab::lattice;

namespace {

ChainSpec make_spec(int r, int A, double n, double k, int N)
{
    ChainSpec s;
    s.r = r;
    s.A = A;
    s.n = n;
    s.k = k;
    s.N = N;
    return s;
}

double max_diff(const std::vector<Cplx>& a, const std::vector<Cplx>& b)
{
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// angular distance to the nearest ray of the root pattern
double ray_deviation(const ChainSpec& spec, Cplx z)
{
    double best = 1e300;
    for (int a = 1; a <= spec.r; ++a) {
        const double target = PI * (2.0 * a - 2.0 - spec.A) / spec.r;
        best = std::min(best, std::abs(std::remainder(std::arg(z) - target, 2.0 * PI)));
    }
    return best;
}

} // namespace

TEST_CASE("tangent seeds solve the single-site chain at the decoupling point")
{
    const ChainSpec spec = make_spec(1, 0, 1.0, 0.07, 16);
    const BetheState st = ground_state(spec, EtaPath{});
    CHECK(st.residual < 1e-12);
    const std::vector<double> xx = xx_chain_roots(spec.N, spec.k);
    for (std::size_t m = 0; m < xx.size(); ++m) {
        CHECK(std::abs(st.roots[m] - xx[m]) < 1e-12);
        CHECK(st.ray[m] == 1);
    }
}

TEST_CASE("anisotropy continuation reaches the XXZ chain with real ordered roots")
{
    // gamma = pi/3 single-site chain: ground-state roots are real, positive,
    // strictly increasing
    const ChainSpec spec = make_spec(1, 0, 2.0, 0.05, 8);
    CHECK(spec.gamma() == doctest::Approx(PI / 3.0).epsilon(1e-14));
    const BetheState st = ground_state(spec, EtaPath{});
    CHECK(st.residual < 1e-12);
    REQUIRE(st.roots.size() == 4);
    for (std::size_t m = 0; m < st.roots.size(); ++m) {
        CHECK(std::abs(st.roots[m].imag()) < 1e-12);
        CHECK(st.roots[m].real() > 0.0);
        if (m > 0) CHECK(st.roots[m].real() > st.roots[m - 1].real());
    }
    const RayAssignment ra = classify_rays(spec, st.roots);
    for (std::size_t m = 0; m < st.roots.size(); ++m) {
        CHECK(ra.ray[m] == 1);
        CHECK(!ra.ambiguous[m]);
    }
}

TEST_CASE("reduction lift solves the full equations")
{
    // Solve the sigma = r reduced chain (single site, anisotropy r*gamma_red)
    // and lift each reduced root onto r rays; the lifted set must solve the
    // full symmetric-point equations.
    const int r = 3, N = 36;
    const double n = 5.0;
    const ChainSpec red = make_spec(1, 0, n / r, 0.05, N / r);
    const BetheState rst = ground_state(red, EtaPath{});
    CHECK(rst.residual < 1e-12);

    const ChainSpec full = make_spec(r, 1, n, 0.05, N);
    std::vector<Cplx> lifted;
    for (const Cplx& zr : rst.roots) {
        const Cplx w = (std::log(zr) + Cplx(0.0, PI * full.A)) / static_cast<double>(r);
        for (int ap = 0; ap < r; ++ap)
            lifted.push_back(std::exp(w + Cplx(0.0, 2.0 * PI * ap / r)));
    }
    CHECK(bethe_residual(full, z_r_inhomogeneities(r), lifted) < 1e-10);
}

TEST_CASE("per-root and vector solvers agree at the decoupling point")
{
    const ChainSpec spec = make_spec(3, 1, 3.0, 0.05, 24);
    SUBCASE("symmetric pattern")
    {
        const BetheState ff = free_fermion_ground_state(spec, z_r_inhomogeneities(3));
        const BetheState nt = ground_state(spec, EtaPath{});
        CHECK(ff.residual < 1e-12);
        CHECK(nt.residual < 1e-12);
        CHECK(max_diff(ff.roots, nt.roots) < 1e-10);
    }
    SUBCASE("deformed pattern")
    {
        const std::vector<Cplx> eta = build_inhomogeneities(spec, {0.4});
        const BetheState ff = free_fermion_ground_state(spec, eta);
        const BetheState nt = ground_state(spec, std::vector<double>{0.4});
        CHECK(ff.residual < 1e-12);
        CHECK(nt.residual < 1e-12);
        CHECK(max_diff(ff.roots, nt.roots) < 1e-10);
    }
}

TEST_CASE("scaled levels obey the algebraic quantization condition")
{
    SUBCASE("closed form moduli and phases")
    {
        const ChainSpec spec = make_spec(3, 1, 3.0, 0.0, 24);
        const auto levels = ff_scaled_levels(spec, {}, 3);
        for (int a = 1; a <= 3; ++a) {
            CHECK(std::abs(levels[a - 1][0]) == doctest::Approx(std::cbrt(3.0)).epsilon(1e-13));
            for (int m = 1; m <= 3; ++m)
                CHECK(std::abs(levels[a - 1][m - 1]) ==
                      doctest::Approx(std::cbrt(3.0 * (2.0 * m - 1.0))).epsilon(1e-13));
        }
    }
    SUBCASE("phases sit on the odd-sixth rays at nonzero twist")
    {
        const ChainSpec spec = make_spec(3, 1, 3.0, 0.05, 24);
        const auto levels = ff_scaled_levels(spec, {}, 4);
        for (const auto& ray : levels)
            for (const Cplx& E : ray) {
                // arg E = pi (2a-1)/3 for some integer a, exactly
                const double x = std::arg(E) / (PI / 3.0);
                CHECK(std::abs(x - 2.0 * std::round((x - 1.0) / 2.0) - 1.0) < 1e-13);
            }
    }
    SUBCASE("complex couplings")
    {
        const ChainSpec spec = make_spec(5, 2, 5.0, 0.05, 40);
        const Cplx a1(0.1, 0.2);
        const auto levels = ff_scaled_levels(spec, {a1}, 6);
        for (int a = 1; a <= 5; ++a)
            for (int m = 1; m <= 6; ++m) {
                const Cplx E = levels[a - 1][m - 1];
                const Cplx lhs = std::pow(E, 5) / 5.0 + a1 * E;
                const double target = 2.0 * m - 1.0 + 2.0 * spec.k;
                CHECK(std::abs(lhs - target) < 1e-12);
            }
    }
    SUBCASE("lattice estimates converge to the closed form")
    {
        // |E_1| -> 3^{1/3} for the undeformed pattern at r = n = 3
        std::vector<double> sizes = {24.0, 48.0, 96.0, 192.0};
        std::vector<Cplx> vals;
        for (double N : sizes) {
            const ChainSpec spec = make_spec(3, 1, 3.0, 0.0, static_cast<int>(N));
            const BetheState st =
                free_fermion_ground_state(spec, z_r_inhomogeneities(3));
            vals.push_back(std::abs(scaled_roots(st)[0][0]));
        }
        const Extrapolated ex = extrapolate(sizes, vals);
        CHECK(std::abs(ex.value - std::cbrt(3.0)) < 1e-9);
    }
}

TEST_CASE("per-root solver accepts complex coupling patterns")
{
    // inhomogeneities carrying a_1 = 0.1 + 0.2i at r = n = 5, built from the
    // power sums P_1 = 5 (2N/pi)^{-4/5} a_1, P_2 = P_3 = P_4 = 0, P_5 = 5
    const ChainSpec spec = make_spec(5, 2, 5.0, 0.05, 40);
    const Cplx a1(0.1, 0.2);
    std::vector<Cplx> P(5, Cplx(0.0, 0.0));
    P[0] = 5.0 * std::pow(2.0 * spec.N / PI, -0.8) * a1;
    P[4] = 5.0;
    const std::vector<Cplx> eta = inhomogeneities_from_power_sums(P);
    REQUIRE(eta.size() == 5);
    // round-trip check of the power sums
    for (int s = 1; s <= 5; ++s) {
        Cplx ps(0.0, 0.0);
        for (const Cplx& e : eta) ps += std::pow(e, -s);
        CHECK(std::abs(ps - P[s - 1]) < 1e-9);
    }
    const BetheState st = free_fermion_ground_state(spec, eta);
    CHECK(st.residual < 1e-12);
    int count = 0;
    for (int a = 1; a <= 5; ++a) count += static_cast<int>(scaled_roots(st)[a - 1].size());
    CHECK(count == spec.N / 2);
}

TEST_CASE("ground state at generic anisotropy")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, 24);
    const BetheState st = ground_state(spec, std::vector<double>{0.4});
    CHECK(st.residual < 1e-11);

    SUBCASE("equal ray occupation")
    {
        const RayAssignment ra = classify_rays(spec, st.roots);
        std::vector<int> counts(3, 0);
        for (int a : ra.ray) ++counts[a - 1];
        CHECK(counts[0] == 4);
        CHECK(counts[1] == 4);
        CHECK(counts[2] == 4);
    }
    SUBCASE("translation eigenvalue is one")
    {
        CHECK(std::abs(quasi_shift_total(st) - 1.0) < 1e-9);
    }
    SUBCASE("energy is real for a self-conjugate pattern")
    {
        CHECK(std::abs(energy(st).imag()) < 1e-9);
    }
    SUBCASE("residual evaluators agree in reverse order")
    {
        const double fwd = bethe_residual(spec, st.eta, st.roots);
        const double rev = bethe_residual_reversed(spec, st.eta, st.roots);
        CHECK(fwd < 1e-12);
        CHECK(rev < 1e-12);
        CHECK(std::abs(fwd - rev) < 1e-13);
    }
    SUBCASE("inversion covariance")
    {
        ChainSpec flipped = spec;
        flipped.k = -spec.k;
        std::vector<Cplx> inv_roots(st.roots.size()), inv_eta(st.eta.size());
        for (std::size_t m = 0; m < st.roots.size(); ++m) inv_roots[m] = 1.0 / st.roots[m];
        for (std::size_t l = 0; l < st.eta.size(); ++l) inv_eta[l] = 1.0 / st.eta[l];
        CHECK(bethe_residual(flipped, inv_eta, inv_roots) < 1e-10);
    }
}

TEST_CASE("quasi-shift factors coincide at the symmetric point")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, 24);
    const BetheState st = ground_state(spec, EtaPath{});
    const Cplx k1 = quasi_shift(st, 1);
    const Cplx k2 = quasi_shift(st, 2);
    const Cplx k3 = quasi_shift(st, 3);
    CHECK(std::abs(k1 - k2) < 1e-10);
    CHECK(std::abs(k2 - k3) < 1e-10);
    CHECK(std::abs(k1 * k2 * k3 - 1.0) < 1e-10);
}

TEST_CASE("root pattern deviates from the rays only at the small-root edge")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, 120);
    const BetheState st = ground_state(spec, std::vector<double>{0.4});
    CHECK(st.residual < 1e-11);
    const auto groups = scaled_roots(st);
    const double scale = spec.zeta_to_E();
    for (int a = 1; a <= spec.r; ++a) {
        const auto& g = groups[a - 1];
        REQUIRE(g.size() >= 2);
        const double target = PI * (2.0 * a - 2.0 - spec.A) / spec.r;
        if (std::abs(std::remainder(target - PI, 2.0 * PI)) < 1e-12) {
            // the real-axis ray is pinned exactly by self-conjugacy of the set
            for (const Cplx& z : g) CHECK(ray_deviation(spec, z / scale) < 1e-12);
            continue;
        }
        // within-ray ordering is by modulus: front = smallest, back = largest
        const double dev_small = ray_deviation(spec, g.front() / scale);
        const double dev_large = ray_deviation(spec, g.back() / scale);
        CHECK(dev_large < 0.05);
        CHECK(dev_large < dev_small);
    }
}

TEST_CASE("ray classification flags bisector roots")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.0, 24);
    // rays at -pi/3, pi/3, pi; the positive real axis is a boundary bisector
    const std::vector<Cplx> probes = {Cplx(1.0, 0.0), std::polar(1.0, PI / 3.0),
                                      std::polar(1.0, PI / 3.0 + 0.2)};
    const RayAssignment ra = classify_rays(spec, probes);
    CHECK(ra.ambiguous[0]);
    CHECK(!ra.ambiguous[1]);
    CHECK(!ra.ambiguous[2]);
    CHECK(ra.ray[1] == 2);
    CHECK(ra.ray[2] == 2);
}

TEST_CASE("energy conjugates when roots conjugate and the pattern inverts")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, 24);
    const BetheState st = ground_state(spec, EtaPath{});
    BetheState mirrored = st;
    for (Cplx& z : mirrored.roots) z = std::conj(z);
    for (Cplx& e : mirrored.eta) e = 1.0 / e;  // unimodular pattern: 1/eta = conj(eta)
    CHECK(std::abs(energy(mirrored) - std::conj(energy(st))) < 1e-12);
}

TEST_CASE("finite-size energy matches the bulk and central-charge terms")
{
    const int r = 3;
    const double n = 5.0, k = 0.04;
    const double vf = r * (n + r) / n;
    // specific bulk energy, by quadrature
    const auto integrand = [&](double t) {
        if (t == 0.0) return r / (n + r);
        return std::sinh(r * t / n) / (std::sinh((n + r) * t / n) * std::cosh(t));
    };
    const double e_inf = -2.0 * vf / PI * bethelab::quad::integrate(integrand, 0.0, 40.0, 1e-13, 1e-13);

    const ChainSpec spec = make_spec(r, 1, n, k, 480);
    const BetheState st = ground_state(spec, EtaPath{});
    const Cplx en = energy(st);
    CHECK(std::abs(en.real() / spec.N - e_inf) < 1e-3);

    const double coef = (en.real() - spec.N * e_inf) * spec.N / (2.0 * PI * r * vf);
    const double expected = (n + r) * k * k / 2.0 - r / 12.0;
    CHECK(std::abs(coef - expected) < 0.01 * std::abs(expected));
}

TEST_CASE("regularized sums")
{
    const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, 48);
    const BetheState st = ground_state(spec, std::vector<double>{0.4});

    SUBCASE("even order carries no counterterm under this scheme")
    {
        Cplx plain(0.0, 0.0);
        for (const Cplx& z : st.roots) plain += std::pow(z, -2);
        plain /= 2.0;
        CHECK(std::abs(sum_rule_reg(st, 2) - plain) < 1e-12);
    }
    SUBCASE("reversed-order summation agrees")
    {
        Cplx root_sum(0.0, 0.0), eta_sum(0.0, 0.0);
        for (std::size_t m = st.roots.size(); m-- > 0;) root_sum += std::pow(st.roots[m], -1);
        for (std::size_t l = st.eta.size(); l-- > 0;) eta_sum += std::pow(st.eta[l], -1);
        const Cplx reg =
            root_sum + static_cast<double>(spec.N) / (2.0 * spec.r * std::cos(spec.gamma())) * eta_sum;
        CHECK(std::abs(sum_rule_reg(st, 1) - reg) < 1e-12);
    }
    SUBCASE("counterterm pole raises a domain error")
    {
        const ChainSpec ff = make_spec(3, 1, 3.0, 0.05, 24);
        const BetheState stf = free_fermion_ground_state(ff, z_r_inhomogeneities(3));
        CHECK_THROWS_AS((void)sum_rule_reg(stf, 1), bethelab::domain_error);
    }
    SUBCASE("scaled sums approach a limit under N-doubling")
    {
        std::vector<Cplx> vals;
        for (int N : {24, 48, 96}) {
            ChainSpec sp = spec;
            sp.N = N;
            vals.push_back(sum_rule_scaled(ground_state(sp, std::vector<double>{0.4}), 1));
        }
        CHECK(std::abs(vals[2] - vals[1]) < std::abs(vals[1] - vals[0]));
    }
}

TEST_CASE("scaled root estimates form a Cauchy sequence under N-doubling")
{
    std::vector<Cplx> first;
    for (int N : {120, 240, 480}) {
        const ChainSpec spec = make_spec(3, 1, 5.0, 0.05, N);
        const BetheState st = ground_state(spec, std::vector<double>{0.4});
        first.push_back(scaled_roots(st)[0][0]);
    }
    CHECK(std::abs(first[2] - first[1]) < std::abs(first[1] - first[0]));
}

TEST_CASE("barred estimates recover the mirrored tail spectrum")
{
    // single-site decoupling point: the reciprocal of the m-th largest root,
    // rescaled, tends to 2m - 1 - 2k
    const double k = 0.03;
    std::vector<double> sizes = {64.0, 128.0, 256.0, 512.0};
    for (int m = 1; m <= 2; ++m) {
        std::vector<Cplx> vals;
        for (double N : sizes) {
            const ChainSpec spec = make_spec(1, 0, 1.0, k, static_cast<int>(N));
            const BetheState st = ground_state(spec, EtaPath{});
            vals.push_back(scaled_roots_barred(st)[0][m - 1]);
        }
        const Extrapolated ex = extrapolate(sizes, vals);
        CHECK(std::abs(ex.value - (2.0 * m - 1.0 - 2.0 * k)) < 1e-8);
    }
}

TEST_CASE("polynomial sequences extrapolate exactly")
{
    std::vector<double> sizes = {8.0, 12.0, 16.0, 24.0, 32.0};
    std::vector<Cplx> vals;
    for (double N : sizes) vals.push_back(2.5 - 3.0 / (N * N) + 7.0 / (N * N * N * N));
    const Extrapolated ex = extrapolate(sizes, vals);
    CHECK(std::abs(ex.value - 2.5) < 1e-12);
}

TEST_CASE("power-law fits recover exponents and flag unstable tails")
{
    const std::vector<double> sizes = {8.0, 16.0, 32.0, 64.0, 128.0};
    SUBCASE("exact synthetic data, free exponent")
    {
        std::vector<Cplx> vals;
        for (double N : sizes) vals.push_back(2.0 + 3.0 / (N * N));
        const PowerLawFit fit = fit_power_law(sizes, vals);
        CHECK(std::abs(fit.limit - 2.0) < 1e-9);
        CHECK(fit.delta == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(fit.residual < 1e-10);
        CHECK(!fit.unstable);
    }
    SUBCASE("pinned exponent")
    {
        std::vector<Cplx> vals;
        for (double N : sizes) vals.push_back(Cplx(1.0, -0.5) + Cplx(0.2, 0.1) * std::pow(N, -0.75));
        const PowerLawFit fit = fit_power_law(sizes, vals, 0.75);
        CHECK(std::abs(fit.limit - Cplx(1.0, -0.5)) < 1e-12);
        CHECK(fit.delta == doctest::Approx(0.75));
        CHECK(!fit.unstable);
    }
    SUBCASE("non-monotone tail is flagged")
    {
        const std::vector<double> ns = {8.0, 16.0, 32.0, 64.0};
        const std::vector<Cplx> vals = {Cplx(2.1, 0.0), Cplx(2.01, 0.0), Cplx(2.012, 0.0),
                                        Cplx(2.02, 0.0)};
        CHECK(fit_power_law(ns, vals).unstable);
    }
}
