#pragma once

#include <vector>

#include "bethelab/types.hpp"

namespace bethelab::poly {

// All roots of the monic polynomial z^n + c[n-1] z^{n-1} + ... + c[0]
// (coefficients ascending: c[k] multiplies z^k). Companion-matrix
// eigenvalues polished by a few Newton steps.
std::vector<Cplx> monic_roots(const std::vector<Cplx>& c);

// Elementary symmetric polynomials e_1..e_n from power sums p_1..p_n via the
// Newton identities: e_k = (1/k) sum_{i=1}^{k} (-1)^{i-1} e_{k-i} p_i.
std::vector<Cplx> elementary_from_power_sums(const std::vector<Cplx>& p);

// Horner evaluation of the monic polynomial above and its derivative.
Cplx monic_eval(const std::vector<Cplx>& c, Cplx z);
Cplx monic_eval_derivative(const std::vector<Cplx>& c, Cplx z);

} // namespace bethelab::poly
