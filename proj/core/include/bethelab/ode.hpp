#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "bethelab/types.hpp"

namespace bethelab::ode {

// ---------------------------------------------------------------------------
// Problem description
//
// The module studies the second-order equation on the real line
//
//   [ -d^2/dy^2 + p^2 + e^{(n+r)y} - (-1)^A E^r e^{ry}
//       - sum_{(mu,j)} c_{mu,j} E^mu e^{((A mu - r j)(n+r)/r + mu) y} ] psi = 0,
//
// where the coupling exponents (mu, j) run over the admissible set returned by
// xi_set(r, A).  Admissibility means the extra terms are subleading both as
// y -> +inf (relative to e^{(n+r)y}) and as y -> -inf (relative to p^2), so
// the scattering data below is well defined for arbitrary coupling constants.
// ---------------------------------------------------------------------------

// Admissible coupling exponent pairs (mu, j), sorted by mu.
//  * A = 0:            {(mu, 0) : mu = 1..r-1}
//  * 1 <= A <= r-2:    integer mu with  r j / A < mu < r (j+1)/(A+1),  j = 0..A-1
//  * A = r-1:          {(j+1, j) : j = 0..r-2}
std::vector<std::pair<int, int>> xi_set(int r, int A);

// Growth bookkeeping for a single coupling term:
//   M = (j+1) r - (A+1) mu   (decay rate index of the WKB correction series)
//   L = A mu - r j           (power of the large-E scale carried by the term)
// Admissible pairs have M > 0 except in the marginal A = r-1 family (M = 0),
// and L > 0 except at A = 0 where L = 0.
struct CouplingExponents {
    int M = 0;
    int L = 0;
};
CouplingExponents coupling_exponents(int r, int A, int mu, int j);

// True when n sits (within rel_tol) on the discrete set where the large-E
// expansion coefficients of the connection data develop poles:
//   n = r (2j+1) / (2j+1 + 2 w r),  j = 0..A-1,  w >= 0,
// together with the poles of the leading term, n = r / (1 + 2w), w >= 0.
// The spectral determinant acquires log E terms at these points and the
// generic normalization below breaks down.
bool is_exceptional_n(int r, int A, double n, double rel_tol = 1e-6);

struct OdeSpec {
    int r = 1;
    int A = 0;
    double n = 2.0;
    Cplx p{0.25, 0.0};            // momentum-like parameter (Re p >= 0 preferred)
    std::map<std::pair<int, int>, Cplx> coeffs;  // (mu, j) -> c_{mu,j}

    // Elementary rotation of the E-plane associated with the discrete symmetry
    // of the equation: q = exp(i pi A / r + i pi / (n+r)).
    Cplx q() const;

    // Throws domain_error when r, A, n, or a coupling key is out of range.
    void validate() const;

    // Symmetric family with r odd, A = (r-1)/2 and couplings on the odd
    // exponents: c_odd[j] multiplies E^{2j+1}, j = 0..A-1.
    static OdeSpec odd_family(int r, double n, Cplx p, std::vector<Cplx> c_odd = {});

    bool is_odd_family() const;

    // c_{2j+1} for j = 0..A-1 (zero-filled); requires the odd family shape.
    std::vector<Cplx> odd_couplings() const;
};

// Potential term evaluation U(y) = p^2 + e^{(n+r)y} - ... at one point.
Cplx potential(const OdeSpec& spec, Cplx E, double y);

struct SolutionValue {
    Cplx value;
    Cplx derivative;  // d/dy
};

// Recessive solution at y -> -inf normalized to e^{sigma p y} (sigma = +1/-1).
// Values are obtained by series initialization deep in the flat region
// followed by adaptive integration; y may not exceed a window-dependent cap
// where the true solution overflows double range.
SolutionValue jost_solution(const OdeSpec& spec, Cplx E, int sigma, double y);

// Solution recessive as y -> +inf, normalized so that the generalized-WKB
// logarithm has no constant term:
//   log chi(y) = -(1/4) log U(y) - int sqrt(U) dy  (all antiderivative
// constants fixed to zero term by term).  This normalization makes both
// spectral determinants equal 1 at E = 0.
SolutionValue subdominant_solution(const OdeSpec& spec, Cplx E, double y);

// Spectral determinants D_+ (sigma = +1) and D_- (sigma = -1):
//   D_sigma(E) = sqrt(pi) Gamma(1 + 2 sigma p/(n+r))^{-1}
//                (n+r)^{-1/2 - 2 sigma p/(n+r)} W[chi, psi_{sigma p}].
// Entire in E, D_sigma(0) = 1.  The log variant returns log D with the
// imaginary part reduced to (-pi, pi]; use it when |D| overflows.
Cplx spectral_determinant(const OdeSpec& spec, Cplx E, int sigma);
Cplx log_spectral_determinant(const OdeSpec& spec, Cplx E, int sigma);

// Closed form at the decoupling point n = r of the odd family: with
//   lambda(E) = [ (-1)^A E^r + sum_j c_{2j+1} E^{2j+1} ] / r,
//   D_sigma = Gamma(1/2 + sigma p/r) / Gamma(1/2 + sigma p/r - lambda/2).
Cplx free_fermion_determinant(const OdeSpec& spec, Cplx E, int sigma);

// Relative defect of the bilinear functional identity coupling the four
// determinants at rotated arguments:
//   e^{2 i pi p/(n+r)} D_+(qE) D_-(q^{-1}E)
//     - e^{-2 i pi p/(n+r)} D_+(q^{-1}E) D_-(qE) = 2 i sin(2 pi p/(n+r)).
double quantum_wronskian_residual(const OdeSpec& spec, Cplx E);

// Relative difference between D_+ computed from the equation with y shifted
// by -2 pi i/(n+r) (weights rotated, normalizations transported) and D_+ at
// the rotated argument q^{-2} E.  Exercises the covariance of the whole
// pipeline under the discrete symmetry.
double omega_covariance_residual(const OdeSpec& spec, Cplx E);

// Wronskian of the subdominant solution with its image under the discrete
// shift y -> y + 2 pi i/(n+r), E -> q^{-2} E, assembled from the two
// exponential branches of the large-y expansion at the same argument.
// Equals 2i exactly for admissible specs; evaluated by a second, growing-
// branch series solve rather than by rotating the first.
Cplx omega_shift_wronskian(const OdeSpec& spec, Cplx E);

// Large-|E| expansion data for the determinants.
//   N0   amplitude of the leading scale, sqrt(pi) Gamma(1 + r/2n) /
//        (r Gamma(3/2 + r/2n));
//   C_p  constant term, sqrt(r/(n+r)) r^{2p/r} (n+r)^{-2p/(n+r)}
//        Gamma(1 + 2p/r) / Gamma(1 + 2p/(n+r));
//   G    counting-function polynomial coefficients: G[m-1] multiplies
//        X^{r-2m} in  X^r + sum_m G_{2m} X^{r-2m} = Y^r  (in the phase
//        convention of the family; zero when absent);
//   D    exponential correction amplitudes D_{2j+1}, j = 0..A-1 (odd family);
//   R    reversion tail:  X(Y) = Y (1 + sum_k R[k-1] Y^{-2k});
//   M, L growth indices of the single-coupling family (0 otherwise).
struct AsymptoticData {
    double N0 = 0.0;
    Cplx C_p{1.0, 0.0};
    int M = 0;
    int L = 0;
    std::vector<Cplx> G;
    std::vector<Cplx> D;
    std::vector<Cplx> R;
};

// Supported families: r odd with A = (r-1)/2 (any coupling content), pure
// Z_r spec (no couplings), and single-coupling specs.  Throws domain_error
// otherwise.
AsymptoticData asymptotic_data(const OdeSpec& spec, std::size_t tail_count = 8);

// log D_+ along the a-th zero ray wedge, parametrized by
//   E = (-1)^{r-1} e^{i pi (2a-1-A)/r} e^{2 n theta/(r(n+r))}:
// leading exponential scale + power corrections + linear term + constant.
// Valid for |Im theta| < pi (n+r)/(2n).
Cplx wkb_log_asymptotic(const OdeSpec& spec, Cplx theta, int a);

// Quantization-rule approximation to the zeros E_m^{(a)} of D_+, m_min..m_max:
//   phase_a(theta_m) = pi (m - 1/2), inverted through the reversion series.
std::vector<Cplx> bohr_sommerfeld_zeros(const OdeSpec& spec, int a, int m_min, int m_max);

struct ZeroTable {
    int a = 1;
    std::vector<Cplx> zeros;       // E_m^{(a)}, ordered by m
    std::vector<Cplx> theta;       // ray parameter of each zero
    std::vector<double> residual;  // locally rescaled |D_+| at the accepted zero
};

// Newton-refined zeros of D_+ near the a-th ray, seeded by the quantization
// rule and tracked in the ray parameter theta.
ZeroTable find_zeros(const OdeSpec& spec, int a, int m_max);

// Coefficients J_s of  log D_+(E) = - sum_{s>=1} J_s E^s  computed from the
// zero set:  J_s = s^{-1} sum_{a,m<=Lambda} (E_m^{(a)})^{-s} + Xi_s(Lambda),
// where Xi_s is the analytic tail of the mode sum (Hurwitz-zeta resummation
// of the quantization-rule asymptotics), followed by a power-law fit over a
// ladder of cutoffs to remove the residual drift.  Requires the odd family.
std::vector<Cplx> j_coefficients(const OdeSpec& spec, int s_max, int lambda_cutoff);

// Same coefficients from a Cauchy integral of log D_+ over the circle
// |E| = rho inside the zero-free disk (rho = 0 picks a safe default).
// Independent of the zero set; used for cross-validation.
std::vector<Cplx> j_from_taylor(const OdeSpec& spec, int s_max, double rho = 0.0);

// Closed forms for J_1, J_2, J_3 of the odd family in terms of the couplings:
//   J_1 = c_1 rho_1 f_1(h, g_0),  J_2 = (c_1 rho_1)^2 f_2(h, g_0),
//   J_3 = (c_1 rho_1)^3 f_3(h, g_0) + c_3 rho_3 f_1(h, g_1),
// with h = p/(n+r), g_j = 1/2 - (2j+1)(n-r)/(2r(n+r)),
// rho_{2j+1} = (n+r)^{2 g_j - 2} / Gamma(1 - g_j)^2, and c_{2A+1} := (-1)^A
// standing in for the E^r term when the index reaches the top of the family.
std::array<Cplx, 3> j_analytic_123(const OdeSpec& spec);

} // namespace bethelab::ode
