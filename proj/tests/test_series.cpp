#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bethelab/complex_poly.hpp"
#include "bethelab/series.hpp"

using bethelab::Cplx;
namespace ser = bethelab::series;
namespace poly = bethelab::poly;

namespace {

// Independent closed-form evaluation of the inversion coefficients:
//   R_k = (1/r) sum over {alpha_m >= 0 : sum_m m alpha_m = (k+1)/2}
//         (-1)^{sum alpha} / prod alpha_m! * (1 - k/r)_{sum alpha - 1}
//         * prod G_m^{alpha_m},
// with (x)_j the rising factorial, enumerated by explicit recursion over
// restricted partitions. Exercised only in tests; the library uses
// fixed-point series inversion instead.
double rising_factorial(double x, int j) {
    double v = 1.0;
    for (int i = 0; i < j; ++i) v *= (x + i);
    return v;
}

void enumerate(int remaining, std::size_t m, const std::vector<double>& G,
               std::vector<int>& alpha, double& sum, int k, int r) {
    if (remaining == 0) {
        int total = 0;
        double prod = 1.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            total += alpha[i];
            double fact = 1.0;
            for (int j = 2; j <= alpha[i]; ++j) fact *= j;
            prod *= std::pow(G[i], alpha[i]) / fact;
        }
        if (total == 0) return;
        const double sign = (total % 2 == 0) ? 1.0 : -1.0;
        sum += sign * prod * rising_factorial(1.0 - static_cast<double>(k) / r, total - 1);
        return;
    }
    if (m > G.size()) return;
    for (int a = 0; a * static_cast<int>(m) <= remaining; ++a) {
        alpha[m - 1] = a;
        enumerate(remaining - a * static_cast<int>(m), m + 1, G, alpha, sum, k, r);
    }
    alpha[m - 1] = 0;
}

double closed_form_R(int r, const std::vector<double>& G, int k) {
    // k odd; constraint sum_m m alpha_m = (k+1)/2
    std::vector<int> alpha(G.size(), 0);
    double sum = 0.0;
    enumerate((k + 1) / 2, 1, G, alpha, sum, k, r);
    return sum / r;
}

} // namespace

TEST_CASE("series algebra round-trips") {
    ser::Series a = {1.0, 0.7, -0.3, 0.05, 0.2};
    ser::Series l = ser::log(a, 8);
    ser::Series back = ser::exp(l, 8);
    for (std::size_t k = 0; k < 8; ++k) {
        const double want = (k < a.size()) ? a[k] : 0.0;
        CHECK(back[k] == doctest::Approx(want).epsilon(1e-13));
    }
    // pow via repeated multiplication
    ser::Series p3 = ser::pow(a, 3.0, 8);
    ser::Series m3 = ser::mul(ser::mul(a, a, 8), a, 8);
    for (std::size_t k = 0; k < 8; ++k)
        CHECK(p3[k] == doctest::Approx(m3[k]).epsilon(1e-12));
}

TEST_CASE("lagrange_series matches the quadratic closed form") {
    // X^2 + g = Y^2  =>  X = Y sqrt(1 - g Y^{-2}), so the leading tail
    // coefficient is -g/2 and the next is -g^2/8.
    const double g = 0.83;
    auto R = ser::lagrange_series(2, std::vector<double>{g}, 3);
    CHECK(R[0] == doctest::Approx(-g / 2.0).epsilon(1e-14));
    CHECK(R[1] == doctest::Approx(-g * g / 8.0).epsilon(1e-13));
    CHECK(R[2] == doctest::Approx(-g * g * g / 16.0).epsilon(1e-13));
}

TEST_CASE("lagrange_series agrees with the partition-sum closed form") {
    const int r = 5;
    const std::vector<double> G = {0.42, -0.17};
    auto R = ser::lagrange_series(r, G, 6);
    for (int j = 1; j <= 6; ++j) {
        const int k = 2 * j - 1;
        CAPTURE(k);
        CHECK(R[j - 1] == doctest::Approx(closed_form_R(r, G, k)).epsilon(1e-11));
    }
}

TEST_CASE("lagrange_series leaves a small defining-equation residual") {
    const int r = 7;
    const std::vector<double> G = {0.3, -0.8, 0.11};
    auto R = ser::lagrange_series(r, G, 10);
    for (double Y : {6.0, 10.0, 20.0}) {
        double X = Y;
        for (std::size_t j = 1; j <= R.size(); ++j)
            X += R[j - 1] * std::pow(Y, 1.0 - 2.0 * static_cast<double>(j));
        double lhs = std::pow(X, r);
        for (std::size_t m = 1; m <= G.size(); ++m)
            lhs += G[m - 1] * std::pow(X, r - 2.0 * static_cast<double>(m));
        const double resid = std::abs(lhs - std::pow(Y, r)) / std::pow(Y, r);
        CAPTURE(Y);
        CHECK(resid < 1e-9);
    }
}

TEST_CASE("q_expansion reduces to binomial coefficients for one term") {
    // (1 + R u^2)^z: coefficient of u^{2k} is C(z, k) R^k
    const double R1 = 0.37, z = -1.6;
    auto Q = ser::q_expansion(std::vector<double>{R1}, z, 4);
    double binom = 1.0;
    for (int k = 1; k <= 4; ++k) {
        binom *= (z - (k - 1)) / k;
        CHECK(Q[k - 1] == doctest::Approx(binom * std::pow(R1, k)).epsilon(1e-12));
    }
}

TEST_CASE("q_expansion at z=1 returns the input tail") {
    auto Q = ser::q_expansion(std::vector<double>{0.5, -0.25, 0.125}, 1.0, 5);
    CHECK(Q[0] == doctest::Approx(0.5));
    CHECK(Q[1] == doctest::Approx(-0.25));
    CHECK(Q[2] == doctest::Approx(0.125));
    CHECK(Q[3] == doctest::Approx(0.0));
    CHECK(Q[4] == doctest::Approx(0.0));
}

TEST_CASE("monic_roots recovers planted roots") {
    // (z - z1)(z - z2)(z - z3) with complex roots
    const Cplx z1{1.5, 0.5}, z2{-0.3, 2.0}, z3{0.0, -1.2};
    std::vector<Cplx> c = {
        -z1 * z2 * z3,
        z1 * z2 + z1 * z3 + z2 * z3,
        -(z1 + z2 + z3),
    };
    auto roots = poly::monic_roots(c);
    REQUIRE(roots.size() == 3);
    for (const Cplx& want : {z1, z2, z3}) {
        double best = 1e9;
        for (const Cplx& got : roots) best = std::min(best, std::abs(got - want));
        CHECK(best < 1e-12);
    }
}

TEST_CASE("elementary_from_power_sums inverts power sums") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Cplx> roots(6);
    for (auto& z : roots) z = Cplx(dist(rng), dist(rng));
    std::vector<Cplx> p(roots.size(), 0.0);
    for (std::size_t s = 1; s <= roots.size(); ++s)
        for (const Cplx& z : roots) p[s - 1] += std::pow(z, static_cast<double>(s));
    auto e = poly::elementary_from_power_sums(p);
    // rebuild the monic polynomial and check all planted roots are zeros
    std::vector<Cplx> c(roots.size());
    for (std::size_t k = 1; k <= roots.size(); ++k) {
        const double sign = (k % 2 == 1) ? -1.0 : 1.0;
        c[roots.size() - k] = sign * e[k - 1];
    }
    for (const Cplx& z : roots) CHECK(std::abs(poly::monic_eval(c, z)) < 1e-12);
}
