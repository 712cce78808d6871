#pragma once

#include <functional>
#include <vector>

#include "bethelab/chain.hpp"
#include "bethelab/types.hpp"

namespace bethelab::lattice {

struct SolveOptions {
    double tol = 1e-12;      // absolute infinity-norm target for the log form
    int max_newton = 40;     // Newton iterations per continuation step
    int max_halvings = 20;   // step-damping budget inside Newton
    int max_substeps = 64;   // continuation step-halving budget
    double gamma_step = 0.04;     // initial anisotropy continuation step
    double coupling_step = 0.125; // initial inhomogeneity continuation step
};

struct BetheState {
    ChainSpec spec;
    std::vector<Cplx> eta;   // r inhomogeneities used in the solve
    std::vector<Cplx> roots; // N/2 ground-state Bethe roots
    std::vector<int> ray;    // ray label a = 1..r per root, inherited from the seed
    double residual;         // max multiplicative equation residual
};

// Path of inhomogeneity sets: t in [0,1], with t=0 the symmetric point and
// t=1 the target chain.
using EtaPath = std::function<std::vector<Cplx>(double t)>;

// Multiplicative residual of the Bethe equations: max_j |LHS_j/RHS_j - 1|
// on the product form (branch-free).
double bethe_residual(const ChainSpec& spec, const std::vector<Cplx>& eta,
                      const std::vector<Cplx>& roots);

// Same quantity with every sum and product accumulated in reverse index
// order: an independent check that the residual is not an artifact of
// accumulation order.
double bethe_residual_reversed(const ChainSpec& spec, const std::vector<Cplx>& eta,
                               const std::vector<Cplx>& roots);

// Exact ground-state roots of the single-site chain at the free-fermion
// anisotropy (q = i, eta = 1):
//   zeta_m = tan(pi (2m - 1 + 2k) / (2 N)),  m = 1..N/2.
std::vector<double> xx_chain_roots(int N, double k);

// Scaled levels at the decoupling point: per ray a = 1..r, the first mmax
// solutions of
//   (-1)^A E^r / r + sum_j (-1)^j a_odd[j] E^{2j+1} = 2m - 1 + 2k,
// continued in the couplings from the closed form at a_odd = 0. Couplings
// may be complex. These are the algebraic seeds of the per-root scalar
// solver and the exact spectra of the decoupled-point determinants.
std::vector<std::vector<Cplx>> ff_scaled_levels(const ChainSpec& spec,
                                                const std::vector<Cplx>& a_odd, int mmax);

// Per-root scalar solve of the decoupled equations at q = i (odd r,
// A = (r-1)/2, n = r), seeded by the scaled algebraic levels. Independent
// of the vector Newton path.
BetheState free_fermion_ground_state(const ChainSpec& spec, const std::vector<Cplx>& eta);

// Damped Newton solution of the logarithmic Bethe equations starting from
// `seed` (a valid solution for nearby parameters). Branch integers and ray
// labels are inherited from the seed; residual infinity-norm < opts.tol on
// success, solver error on stagnation, degeneracy error on root collision.
BetheState solve_ground_state(const ChainSpec& spec, const std::vector<Cplx>& eta,
                              const std::vector<Cplx>& seed, const SolveOptions& opts = {});

// Full ground-state pipeline for arbitrary (r, A, n, k): reduction to the
// single-site chain, anisotropy continuation, lift onto r rays, then
// inhomogeneity continuation along eta_path (may be empty for the
// symmetric point).
BetheState ground_state(const ChainSpec& spec, const EtaPath& eta_path,
                        const SolveOptions& opts = {});

// Convenience overload for the half-filling scheme (odd r, A=(r-1)/2):
// the path scales all invariants linearly to a_odd.
BetheState ground_state(const ChainSpec& spec, const std::vector<double>& a_odd,
                        const SolveOptions& opts = {});

// Ray label a = 1..r for each root (nearest ray phase
// arg zeta ~ (pi/r)(2a - 2 - A) mod 2pi), with a per-root flag for roots
// within 1e-6 rad of a ray-boundary bisector (ambiguous assignment).
struct RayAssignment {
    std::vector<int> ray;
    std::vector<bool> ambiguous;
};
RayAssignment classify_rays(const ChainSpec& spec, const std::vector<Cplx>& roots);

// Scaled roots grouped by the state's ray labels: E[a-1][m-1] =
// (N/(r N_0))^{2n/(r(n+r))} * zeta_m^{(a)}, modulus-ascending per ray.
std::vector<std::vector<Cplx>> scaled_roots(const BetheState& st);

// Barred variant: the m-th largest root per ray, reciprocated and scaled,
// estimating the spectral data accumulating near zeta = infinity.
std::vector<std::vector<Cplx>> scaled_roots_barred(const BetheState& st);

// Regularized root sums (raw, N-dependent):
//   h_s^reg = s^{-1} sum_m zeta_m^{-s}
//           + (-1)^{s-1} N/(2 s r cos(s gamma)) sum_l eta_l^{-s}.
// Domain error when cos(s gamma) vanishes (counterterm pole).
Cplx sum_rule_reg(const BetheState& st, int s);

// (r N_0/N)^{2 s n/(r(n+r))} * sum_rule_reg: the quantity with a finite
// large-N limit.
Cplx sum_rule_scaled(const BetheState& st, int s);

// Energy eigenvalue of the chain Hamiltonian on this state.
Cplx energy(const BetheState& st);

// Per-inhomogeneity quasi-shift eigenvalue (ell = 1..r):
//   K^(l) = e^{i pi k} q^{-N/2} prod_m (zeta_m + eta_l q)/(zeta_m + eta_l/q).
Cplx quasi_shift(const BetheState& st, int ell);

// Product over all ell: eigenvalue of the r-site translation operator.
Cplx quasi_shift_total(const BetheState& st);

// Polynomial (Neville) extrapolation of a sequence f(N_i) to N = infinity
// in the variable N^{-2}: for data with pure 1/N^2 correction ladders.
struct Extrapolated {
    Cplx value;
    double error_estimate;
};
Extrapolated extrapolate(const std::vector<double>& N, const std::vector<Cplx>& values);

// Least-squares fit of values ~ limit + amplitude * N^{-delta}, with delta
// free (pinned_delta = 0) or pinned. Needs >= 4 points. `unstable` is set
// when the design matrix is ill-conditioned, the exponent search hits its
// bounds, or the tail of the data is non-monotone.
struct PowerLawFit {
    Cplx limit;
    Cplx amplitude;
    double delta;
    double residual;
    bool unstable;
};
PowerLawFit fit_power_law(const std::vector<double>& N, const std::vector<Cplx>& values,
                          double pinned_delta = 0.0);

} // namespace bethelab::lattice
