#include "bethelab/chain.hpp"

#include <algorithm>
#include <cmath>

#include "bethelab/complex_poly.hpp"
#include "bethelab/specfun.hpp"

namespace bethelab::lattice {

double ChainSpec::N0() const {
    const double x = 0.5 * r / n;
    const double num[] = {1.0 + x};
    const double den[] = {1.5 + x};
    return std::sqrt(PI) * specfun::gamma_ratio(num, den) / r;
}

double ChainSpec::zeta_to_E() const {
    return std::pow(N / (r * N0()), 2.0 * n / (r * (n + r)));
}

std::vector<Cplx> z_r_inhomogeneities(int r) {
    if (r < 1) throw domain_error("z_r_inhomogeneities: r must be positive");
    std::vector<Cplx> eta(r);
    const double sign = (r % 2 == 0) ? 1.0 : -1.0;
    for (int l = 1; l <= r; ++l)
        eta[l - 1] = sign * std::polar(1.0, PI * (2.0 * l - 1.0) / r);
    return eta;
}

std::vector<Cplx> inhomogeneities_from_power_sums(const std::vector<Cplx>& P) {
    const std::size_t r = P.size();
    const std::vector<Cplx> e = poly::elementary_from_power_sums(P);
    // x^r - e_1 x^{r-1} + e_2 x^{r-2} - ... ; coefficients ascending in x
    std::vector<Cplx> coeff(r);
    for (std::size_t j = 1; j <= r; ++j) {
        const double sign = (j % 2 == 1) ? -1.0 : 1.0;
        coeff[r - j] = sign * e[j - 1];
    }
    std::vector<Cplx> x = poly::monic_roots(coeff);
    std::vector<Cplx> eta(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (std::abs(x[i]) < 1e-14)
            throw numeric_error("inhomogeneities_from_power_sums: zero root", std::abs(x[i]));
        eta[i] = 1.0 / x[i];
    }
    return eta;
}

void canonical_order(std::vector<Cplx>& eta, int r) {
    const std::vector<Cplx> target = z_r_inhomogeneities(r);
    std::vector<Cplx> ordered(eta.size());
    std::vector<bool> used(eta.size(), false);
    for (std::size_t l = 0; l < target.size(); ++l) {
        double best = 1e300;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < eta.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(eta[i] - target[l]);
            if (d < best) {
                best = d;
                pick = i;
            }
        }
        used[pick] = true;
        ordered[l] = eta[pick];
    }
    eta = ordered;
}

std::vector<Cplx> build_inhomogeneities(const ChainSpec& spec,
                                        const std::vector<double>& a_odd) {
    const int r = spec.r;
    if (r % 2 == 0 || spec.A != (r - 1) / 2)
        throw domain_error("build_inhomogeneities: scheme requires odd r and A=(r-1)/2");
    if (static_cast<int>(a_odd.size()) != spec.A)
        throw domain_error("build_inhomogeneities: need one invariant per odd power below r");
    const double base = r * spec.N0() / spec.N; // (r N_0 / N)
    std::vector<Cplx> P(r, Cplx(0.0, 0.0));
    for (int j = 0; j < spec.A; ++j) {
        const int s = 2 * j + 1;
        P[s - 1] = static_cast<double>(s) * r * std::pow(base, spec.d_odd(s)) * a_odd[j];
    }
    P[r - 1] = r * ((r % 2 == 1) ? 1.0 : -1.0); // r * (-1)^{r-1}
    std::vector<Cplx> eta = inhomogeneities_from_power_sums(P);
    canonical_order(eta, r);
    return eta;
}

} // namespace bethelab::lattice
