#pragma once

#include <vector>

#include "bethelab/types.hpp"

namespace bethelab::lattice {

// Parameters of the r-site periodic spin chain. The anisotropy phase is
// gamma = pi A / r + pi/(n+r) with integer 0 <= A <= r-1 and continuous
// n > 0; the twist enters the Bethe equations through omega = e^{i pi k}.
struct ChainSpec {
    int r = 3;
    int A = 1;
    double n = 5.0;
    double k = 0.0;
    int N = 12; // sites; ground-state runs need N divisible by 2r

    double gamma() const { return PI * A / r + PI / (n + r); }
    Cplx q() const { return std::polar(1.0, gamma()); }
    double p() const { return 0.5 * (n + r) * k; }
    double nu() const { return 2.0 * n / (n + r); }

    // Normalization constant of the scaling maps:
    //   N_0 = sqrt(pi) Gamma(1 + r/(2n)) / (r Gamma(3/2 + r/(2n)))
    double N0() const;

    // Multiplying a Bethe root zeta by this factor gives the scaled root:
    //   E = (N/(r N_0))^{2n/(r(n+r))} zeta
    double zeta_to_E() const;

    // Scaling exponent d_s of the odd invariants in the half-filling scheme
    double d_odd(int s) const { return 1.0 - static_cast<double>(s) / r; }
};

// Symmetric-point inhomogeneities eta_l = (-1)^r e^{i pi (2l-1)/r}.
std::vector<Cplx> z_r_inhomogeneities(int r);

// Inhomogeneities for the half-filling scheme (odd r, A = (r-1)/2):
// a_odd[j] holds the invariant multiplying zeta^{-(2j+1)} sums,
// j = 0..A-1. The eta are fixed by the power sums of eta^{-1}:
//   sum_l eta_l^{-(2j+1)} = (2j+1) r (r N_0/N)^{1-(2j+1)/r} a_odd[j],
//   sum_l eta_l^{-2j} = 0,   (1/r) sum_l eta_l^{-r} = (-1)^{r-1}.
// Ordered canonically (nearest phase to the symmetric pattern).
std::vector<Cplx> build_inhomogeneities(const ChainSpec& spec,
                                        const std::vector<double>& a_odd);

// Generic construction: given all r power sums P[s-1] = sum_l eta_l^{-s}
// for s = 1..r, recover {eta_l} as reciprocal roots of the monic polynomial
// with those power sums.
std::vector<Cplx> inhomogeneities_from_power_sums(const std::vector<Cplx>& P);

// Orders eta in place so that eta[l-1] is nearest in phase to the
// symmetric-point value with the same index.
void canonical_order(std::vector<Cplx>& eta, int r);

} // namespace bethelab::lattice
