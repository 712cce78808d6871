#pragma once

#include <span>

#include "bethelab/types.hpp"

namespace bethelab::specfun {

// Principal branch of log Gamma(z), analytic on the plane cut along (-inf, 0].
// Relative accuracy ~1e-13 for |z| <= 50. Throws domain_error at poles and on
// the cut (real z <= 0); real-axis ratios with negative arguments should go
// through gamma_ratio() below, which tracks signs instead of branches.
Cplx log_gamma(Cplx z);

// Gamma(z) for complex z. Uses the Lanczos sum for Re z >= 1/2 and the
// reflection formula (value level, no branch bookkeeping needed) otherwise.
// Real negative non-integer arguments are allowed and give the signed value.
Cplx gamma(Cplx z);

// log |Gamma(x)| with the sign of Gamma(x) reported separately; x may be any
// real number that is not a pole.
double ln_abs_gamma(double x, int& sign);

// prod Gamma(num[i]) / prod Gamma(den[j]) for real arguments, evaluated in
// log space so that individually huge factors cannot overflow. Signs of
// negative-argument Gammas are tracked exactly.
double gamma_ratio(std::span<const double> num, std::span<const double> den);

// Kummer's confluent hypergeometric function 1F1(a; b; z).
// Taylor series for moderate |z|, the Kummer transformation for Re z < 0 and
// the large-|z| asymptotic expansion beyond. Relative accuracy ~1e-11 for
// |z| <= 100 and parameters of moderate size.
Cplx kummer_1f1(Cplx a, Cplx b, Cplx z);

// Bernoulli number B_m (B_1 = -1/2 convention).
double bernoulli_number(int m);

// Bernoulli polynomial B_m(x), m <= 64.
Cplx bernoulli_poly(int m, Cplx x);

// ---------------------------------------------------------------------------
// Perturbative expansion kernels. f1 is closed form; f2 and f3 are one- and
// two-dimensional integrals of products of Gamma functions over the real
// line, with analytic-continuation terms switching on at g = 1/2 (f2) and
// g = 1/2, 2/3 (f3). All three are real for real (h, g) in domain.
// ---------------------------------------------------------------------------

// f1(h,g) = pi Gamma(1-2g)/sin(pi g) * Gamma(g+2h)/Gamma(1-g+2h)
double f1(double h, double g);

// One-integral kernel, g in (0,1/2) u (1/2,1), Re h > 0.
double f2(double h, double g);

// Two-integral kernel with principal-value prescription,
// g in (0,1/3) u (1/3,1/2) u (1/2,2/3) u (2/3,1).
double f3(double h, double g);

} // namespace bethelab::specfun
