#include "bethelab/bethe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace bethelab::lattice {

namespace {

// Internal chain description: N sites, anisotropy angle, twist, and an
// inhomogeneity pattern of arbitrary period (the reduced chains have
// period 1). Ground-state sector: N/2 roots.
struct Lattice {
    int N;
    double gamma;
    double k;
    std::vector<Cplx> eta;

    Cplx q() const { return std::polar(1.0, gamma); }
};

double wrap_angle(double x) { return std::remainder(x, 2.0 * PI); }

// The log form carries a term of size O(N); evaluating it in extended
// precision keeps the folded residual meaningful down to 1e-12 even for
// chains of a few thousand sites.
using CplxL = std::complex<long double>;
const long double PI_L = 3.14159265358979323846264338327950288L;

CplxL widen(const Cplx& z) { return CplxL(z.real(), z.imag()); }

Cplx narrow(const CplxL& z)
{
    return Cplx(static_cast<double>(z.real()), static_cast<double>(z.imag()));
}

// Principal-branch logarithmic form of the Bethe equations,
//   F_j = (N/r) sum_l [Log(eta_l + q z_j) - Log(eta_l + z_j/q)]
//         - sum_{i != j} Log[(z_i - q^2 z_j)/(z_i - q^{-2} z_j)]
//         - 2 pi i k - 2 i gamma,
// zero (mod 2 pi i) at a ground-state solution.
void eval_logform(const Lattice& lat, const std::vector<Cplx>& z, std::vector<Cplx>& F,
                  bool reversed = false)
{
    const int M = static_cast<int>(z.size());
    const int rp = static_cast<int>(lat.eta.size());
    const long double g = lat.gamma;
    const CplxL q = CplxL(std::cos(g), std::sin(g));
    const CplxL qi = CplxL(1.0L, 0.0L) / q;
    const CplxL q2 = q * q;
    const CplxL qi2 = qi * qi;
    const long double pref = static_cast<long double>(lat.N) / rp;
    F.assign(M, Cplx(0.0, 0.0));
    const CplxL cst(0.0L, 2.0L * PI_L * static_cast<long double>(lat.k) + 2.0L * g);
    for (int j = 0; j < M; ++j) {
        const CplxL zj = widen(z[j]);
        CplxL src(0.0L, 0.0L);
        for (int t = 0; t < rp; ++t) {
            const int l = reversed ? rp - 1 - t : t;
            const CplxL el = widen(lat.eta[l]);
            src += std::log(el + q * zj) - std::log(el + qi * zj);
        }
        CplxL inter(0.0L, 0.0L);
        for (int t = 0; t < M; ++t) {
            const int i = reversed ? M - 1 - t : t;
            if (i == j) continue;
            const CplxL zi = widen(z[i]);
            inter += std::log((zi - q2 * zj) / (zi - qi2 * zj));
        }
        // fold before narrowing: the unfolded value is O(N) and would lose
        // the last digits in double precision
        CplxL f = pref * src - inter - cst;
        f -= CplxL(0.0L, 2.0L * PI_L * std::round(f.imag() / (2.0L * PI_L)));
        F[j] = narrow(f);
    }
}

void eval_jacobian(const Lattice& lat, const std::vector<Cplx>& z, Eigen::MatrixXcd& J)
{
    const int M = static_cast<int>(z.size());
    const int rp = static_cast<int>(lat.eta.size());
    const Cplx q = lat.q();
    const Cplx qi = 1.0 / q;
    const Cplx q2 = q * q;
    const Cplx qi2 = qi * qi;
    const double pref = static_cast<double>(lat.N) / rp;
    J.resize(M, M);
    for (int j = 0; j < M; ++j) {
        Cplx diag(0.0, 0.0);
        for (int l = 0; l < rp; ++l)
            diag += q / (lat.eta[l] + q * z[j]) - qi / (lat.eta[l] + qi * z[j]);
        diag *= pref;
        for (int i = 0; i < M; ++i) {
            if (i == j) continue;
            const Cplx a = z[i] - q2 * z[j];
            const Cplx b = z[i] - qi2 * z[j];
            diag += q2 / a - qi2 / b;
            J(j, i) = -(1.0 / a - 1.0 / b);
        }
        J(j, j) = diag;
    }
}

// Imaginary part folded to (-pi, pi]: the physical content of F_j, since
// every principal-branch jump of the log form is an integer multiple of
// 2 pi i (the source terms carry integer weight N/r).
void fold_windings(std::vector<Cplx>& F)
{
    for (Cplx& f : F)
        f -= Cplx(0.0, 2.0 * PI * std::round(f.imag() / (2.0 * PI)));
}

// F at z, with every logarithm taken relative to its value at the
// reference configuration zs (where the folded form equals R). Continuous
// in z near zs no matter how the principal cuts fall — a root sitting
// exactly on a cut would make the plain log form discontinuous at the
// solution itself.
void eval_logform_rel(const Lattice& lat, const std::vector<Cplx>& z,
                      const std::vector<Cplx>& zs, const std::vector<Cplx>& R,
                      std::vector<Cplx>& F)
{
    const int M = static_cast<int>(z.size());
    const int rp = static_cast<int>(lat.eta.size());
    const long double g = lat.gamma;
    const CplxL q = CplxL(std::cos(g), std::sin(g));
    const CplxL qi = CplxL(1.0L, 0.0L) / q;
    const CplxL q2 = q * q;
    const CplxL qi2 = qi * qi;
    const long double pref = static_cast<long double>(lat.N) / rp;
    F.assign(M, Cplx(0.0, 0.0));
    for (int j = 0; j < M; ++j) {
        const CplxL zj = widen(z[j]);
        const CplxL zsj = widen(zs[j]);
        CplxL src(0.0L, 0.0L);
        for (int l = 0; l < rp; ++l) {
            const CplxL el = widen(lat.eta[l]);
            src += std::log((el + q * zj) / (el + q * zsj)) -
                   std::log((el + qi * zj) / (el + qi * zsj));
        }
        CplxL inter(0.0L, 0.0L);
        for (int i = 0; i < M; ++i) {
            if (i == j) continue;
            const CplxL zi = widen(z[i]);
            const CplxL zsi = widen(zs[i]);
            inter += std::log((zi - q2 * zj) / (zsi - q2 * zsj)) -
                     std::log((zi - qi2 * zj) / (zsi - qi2 * zsj));
        }
        F[j] = narrow(widen(R[j]) + pref * src - inter);
    }
}

double inf_norm(const std::vector<Cplx>& v)
{
    double m = 0.0;
    for (const Cplx& x : v) m = std::max(m, std::abs(x));
    return m;
}

struct NewtonReport {
    bool ok;
    double fnorm;
    int iters;
};

// Damped Newton iteration. Each iteration re-references the logarithms at
// the current iterate; the fold cannot increase the norm, so acceptance
// stays monotone across re-referencing.
NewtonReport newton_core(const Lattice& lat, std::vector<Cplx>& z, const SolveOptions& opts)
{
    const int M = static_cast<int>(z.size());
    std::vector<Cplx> R, Ftry;
    eval_logform(lat, z, R);
    fold_windings(R);
    double fn = inf_norm(R);
    const double ftol = opts.tol;
    Eigen::MatrixXcd J;
    Eigen::VectorXcd rhs(M), dz(M);
    std::vector<Cplx> ztry(M);
    int it = 0;
    for (; it < opts.max_newton && fn > ftol; ++it) {
        eval_jacobian(lat, z, J);
        for (int j = 0; j < M; ++j) rhs(j) = -R[j];
        dz = J.partialPivLu().solve(rhs);
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
            for (int j = 0; j < M; ++j) ztry[j] = z[j] + scale * dz(j);
            eval_logform_rel(lat, ztry, z, R, Ftry);
            const double fn2 = inf_norm(Ftry);
            if (std::isfinite(fn2) && fn2 < fn) {
                z = ztry;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        eval_logform(lat, z, R);
        fold_windings(R);
        fn = inf_norm(R);
    }
    return {fn <= ftol, fn, it};
}

// Drive the lattice along a one-parameter family set(s), s: 0 -> 1, with
// adaptive step halving on Newton failure.
void continue_path(Lattice& lat, std::vector<Cplx>& z,
                   const std::function<void(double)>& set, double step0,
                   const SolveOptions& opts, const char* what)
{
    step0 = std::min(1.0, std::max(1e-6, step0));
    double s = 0.0;
    double step = step0;
    int halvings = 0;
    while (s < 1.0 - 1e-14) {
        const double s2 = std::min(1.0, s + step);
        set(s2);
        std::vector<Cplx> ztry = z;
        const NewtonReport rep = newton_core(lat, ztry, opts);
        if (rep.ok) {
            z = std::move(ztry);
            s = s2;
            step = std::min(step * 1.6, step0);
        } else {
            step *= 0.5;
            if (++halvings > opts.max_substeps)
                throw numeric_error(std::string("continuation stalled in ") + what, rep.fnorm);
        }
    }
}

void check_distinct(const std::vector<Cplx>& z)
{
    double scale = 0.0;
    for (const Cplx& x : z) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = i + 1; j < z.size(); ++j)
            if (std::abs(z[i] - z[j]) < 1e-10 * scale)
                throw numeric_error("degenerate root pair", std::abs(z[i] - z[j]));
}

double residual_of(const Lattice& lat, const std::vector<Cplx>& z, bool reversed = false)
{
    std::vector<Cplx> F;
    eval_logform(lat, z, F, reversed);
    double worst = 0.0;
    for (Cplx d : F) {
        d -= Cplx(0.0, 2.0 * PI * std::round(d.imag() / (2.0 * PI)));
        worst = std::max(worst, std::abs(std::exp(d) - 1.0));
    }
    return worst;
}

Lattice lattice_of(const ChainSpec& spec, const std::vector<Cplx>& eta)
{
    if (static_cast<int>(eta.size()) != spec.r)
        throw domain_error("inhomogeneity pattern must have length r");
    return Lattice{spec.N, spec.gamma(), spec.k, eta};
}

// Sort roots ray-major, modulus-ascending within a ray, permuting the
// labels alongside.
void canonicalize(std::vector<Cplx>& roots, std::vector<int>& ray)
{
    std::vector<std::size_t> idx(roots.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (ray[a] != ray[b]) return ray[a] < ray[b];
        return std::abs(roots[a]) < std::abs(roots[b]);
    });
    std::vector<Cplx> zs;
    std::vector<int> rs;
    zs.reserve(roots.size());
    rs.reserve(roots.size());
    for (std::size_t i : idx) {
        zs.push_back(roots[i]);
        rs.push_back(ray[i]);
    }
    roots = std::move(zs);
    ray = std::move(rs);
}

BetheState make_state(const ChainSpec& spec, const Lattice& lat, std::vector<Cplx> roots,
                      std::vector<int> ray)
{
    check_distinct(roots);
    canonicalize(roots, ray);
    BetheState st;
    st.spec = spec;
    st.eta = lat.eta;
    st.roots = std::move(roots);
    st.ray = std::move(ray);
    st.residual = residual_of(lat, st.roots);
    return st;
}

} // namespace

double bethe_residual(const ChainSpec& spec, const std::vector<Cplx>& eta,
                      const std::vector<Cplx>& roots)
{
    return residual_of(lattice_of(spec, eta), roots);
}

double bethe_residual_reversed(const ChainSpec& spec, const std::vector<Cplx>& eta,
                               const std::vector<Cplx>& roots)
{
    return residual_of(lattice_of(spec, eta), roots, true);
}

std::vector<double> xx_chain_roots(int N, double k)
{
    if (N <= 0 || N % 2 != 0) throw domain_error("xx_chain_roots: N must be even");
    std::vector<double> z(N / 2);
    for (int m = 1; m <= N / 2; ++m)
        z[m - 1] = std::tan(PI * (2.0 * m - 1.0 + 2.0 * k) / (2.0 * N));
    return z;
}

std::vector<std::vector<Cplx>> ff_scaled_levels(const ChainSpec& spec,
                                                const std::vector<Cplx>& a_odd, int mmax)
{
    const int r = spec.r;
    if (r % 2 == 0 || spec.A != (r - 1) / 2)
        throw domain_error("scaled levels require odd r with A = (r-1)/2");
    if (static_cast<int>(a_odd.size()) > (r - 1) / 2)
        throw domain_error("too many couplings for this r");
    if (mmax < 1) throw domain_error("mmax must be positive");

    const double sA = (spec.A % 2 == 0) ? 1.0 : -1.0;
    auto lambda = [&](Cplx E, double t) {
        Cplx v = sA * std::pow(E, r) / static_cast<double>(r);
        double sj = 1.0;
        for (std::size_t j = 0; j < a_odd.size(); ++j, sj = -sj)
            v += sj * t * a_odd[j] * std::pow(E, 2.0 * j + 1.0);
        return v;
    };
    auto lambda_prime = [&](Cplx E, double t) {
        Cplx v = sA * std::pow(E, r - 1);
        double sj = 1.0;
        for (std::size_t j = 0; j < a_odd.size(); ++j, sj = -sj)
            v += sj * t * a_odd[j] * (2.0 * j + 1.0) * std::pow(E, 2.0 * j);
        return v;
    };

    std::vector<std::vector<Cplx>> levels(r);
    const int steps = 8;
    for (int a = 1; a <= r; ++a) {
        levels[a - 1].reserve(mmax);
        for (int m = 1; m <= mmax; ++m) {
            const double target = 2.0 * m - 1.0 + 2.0 * spec.k;
            Cplx E = std::pow(Cplx(r * target, 0.0), 1.0 / r) *
                     std::exp(Cplx(0.0, PI * (2.0 * a - spec.A) / r));
            for (int s = (a_odd.empty() ? steps : 0); s < steps; ++s) {
                const double t = static_cast<double>(s + 1) / steps;
                Cplx f = lambda(E, t) - target;
                for (int it = 0; it < 60 && std::abs(f) > 1e-13 * (1.0 + target); ++it) {
                    E -= f / lambda_prime(E, t);
                    f = lambda(E, t) - target;
                }
                if (std::abs(f) > 1e-10 * (1.0 + target))
                    throw numeric_error("scaled level continuation failed at (a=" +
                                            std::to_string(a) + ", m=" + std::to_string(m) + ")",
                                        std::abs(f));
            }
            levels[a - 1].push_back(E);
        }
    }
    return levels;
}

BetheState free_fermion_ground_state(const ChainSpec& spec, const std::vector<Cplx>& eta)
{
    const int r = spec.r;
    const int N = spec.N;
    if (r % 2 == 0 || spec.A != (r - 1) / 2)
        throw domain_error("free-fermion solver requires odd r with A = (r-1)/2");
    if (std::abs(spec.n - r) > 1e-12)
        throw domain_error("free-fermion solver requires n = r");
    if (N % (2 * r) != 0) throw domain_error("N must be a multiple of 2r");
    if (static_cast<int>(eta.size()) != r) throw domain_error("eta must have length r");

    const int mray = N / (2 * r);
    const std::vector<Cplx> eta0 = z_r_inhomogeneities(r);
    auto eta_at = [&](double t) {
        std::vector<Cplx> e(r);
        for (int l = 0; l < r; ++l) e[l] = (1.0 - t) * eta0[l] + t * eta[l];
        return e;
    };

    // couplings carried by this pattern, for the algebraic seeds
    std::vector<Cplx> a_odd((r - 1) / 2, Cplx(0.0, 0.0));
    for (std::size_t j = 0; j < a_odd.size(); ++j) {
        const int s = 2 * static_cast<int>(j) + 1;
        Cplx ps(0.0, 0.0);
        for (const Cplx& el : eta) ps += std::pow(el, -s);
        a_odd[j] = std::pow(2.0 * N / PI, 1.0 - static_cast<double>(s) / r) * ps /
                   (static_cast<double>(s) * static_cast<double>(r));
    }
    double coupling_size = 0.0;
    for (const Cplx& a : a_odd) coupling_size = std::max(coupling_size, std::abs(a));
    const std::vector<std::vector<Cplx>> seeds =
        coupling_size > 1e-14
            ? ff_scaled_levels(spec, a_odd, mray)
            : ff_scaled_levels(spec, std::vector<Cplx>{}, mray);
    const double to_zeta = std::pow(PI / (2.0 * N), 1.0 / r);

    // Scalar equation for one root:
    //   G(zeta) = N/(i pi r) sum_l [Log(1 + i zeta/eta_l) - Log(1 - i zeta/eta_l)]
    //           - (2m - 1 + 2k) = 0  (mod 2N/r),
    // evaluated in extended precision for the same reason as the log form.
    auto g_fun = [&](Cplx zeta, const std::vector<Cplx>& e, double target) {
        const CplxL z = widen(zeta);
        const CplxL iL(0.0L, 1.0L);
        CplxL s(0.0L, 0.0L);
        for (const Cplx& el : e) {
            const CplxL elL = widen(el);
            s += std::log(CplxL(1.0L, 0.0L) + iL * z / elL) -
                 std::log(CplxL(1.0L, 0.0L) - iL * z / elL);
        }
        return narrow(static_cast<long double>(N) / (iL * PI_L * static_cast<long double>(r)) * s -
                      static_cast<long double>(target));
    };
    auto g_prime = [&](Cplx zeta, const std::vector<Cplx>& e) {
        Cplx s(0.0, 0.0);
        for (const Cplx& el : e) {
            const Cplx w = I / el;
            s += w / (1.0 + I * zeta / el) + w / (1.0 - I * zeta / el);
        }
        return static_cast<double>(N) / (I * PI * static_cast<double>(r)) * s;
    };

    SolveOptions opts;
    // |e^F - 1| = pi |G - target| near a root, so a quarter of the vector
    // tolerance on G keeps the folded residual inside it
    const double gtol = opts.tol / 4.0;
    const double jump = 2.0 * static_cast<double>(N) / r;

    auto scalar_newton = [&](Cplx zeta, const std::vector<Cplx>& e, double target) {
        const double offset = jump * std::round(g_fun(zeta, e, target).real() / jump);
        Cplx g = g_fun(zeta, e, target) - offset;
        double gn = std::abs(g);
        for (int it = 0; it < opts.max_newton && gn > gtol; ++it) {
            const Cplx dz = -g / g_prime(zeta, e);
            double scale = 1.0;
            bool accepted = false;
            for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
                const Cplx ztry = zeta + scale * dz;
                const Cplx gtry = g_fun(ztry, e, target) - offset;
                if (std::isfinite(std::abs(gtry)) && std::abs(gtry) < gn) {
                    zeta = ztry;
                    g = gtry;
                    gn = std::abs(g);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
        }
        if (gn > gtol) throw numeric_error("scalar branch selection failed", gn);
        return zeta;
    };

    std::vector<Cplx> roots;
    std::vector<int> ray;
    roots.reserve(N / 2);
    ray.reserve(N / 2);
    for (int a = 1; a <= r; ++a) {
        for (int m = 1; m <= mray; ++m) {
            const double target = 2.0 * m - 1.0 + 2.0 * spec.k;
            // Symmetric-point closed form (i zeta)^r = i tan(pi r (2m-1+2k)/(2N)),
            // on the branch whose phase matches the level's ray, plus the
            // coupling shift of the algebraic level.
            const Cplx u = I * std::tan(PI * r * target / (2.0 * N));
            const Cplx zeta0 =
                -I * std::exp((std::log(u) + Cplx(0.0, 2.0 * PI * a)) / static_cast<double>(r));
            const Cplx e_pure = std::pow(Cplx(r * target, 0.0), 1.0 / r) *
                                std::exp(Cplx(0.0, PI * (2.0 * a - spec.A) / r));
            const Cplx seed = zeta0 + to_zeta * (seeds[a - 1][m - 1] - e_pure);
            Cplx zeta;
            try {
                zeta = scalar_newton(seed, eta, target);
            } catch (const numeric_error&) {
                // homotopy fallback from the symmetric point
                zeta = zeta0;
                const int steps = 8;
                try {
                    for (int s = 1; s <= steps; ++s)
                        zeta = scalar_newton(zeta, eta_at(static_cast<double>(s) / steps), target);
                } catch (const numeric_error& ex) {
                    throw numeric_error("branch selection failed at (a=" + std::to_string(a) +
                                            ", m=" + std::to_string(m) + "): " + ex.what(),
                                        ex.diagnostic());
                }
            }
            roots.push_back(zeta);
            ray.push_back(a % r + 1);
        }
    }
    return make_state(spec, lattice_of(spec, eta), std::move(roots), std::move(ray));
}

BetheState solve_ground_state(const ChainSpec& spec, const std::vector<Cplx>& eta,
                              const std::vector<Cplx>& seed, const SolveOptions& opts)
{
    if (static_cast<int>(seed.size()) != spec.N / 2)
        throw domain_error("seed must contain N/2 roots");
    Lattice lat = lattice_of(spec, eta);
    std::vector<int> ray = classify_rays(spec, seed).ray;
    std::vector<Cplx> z = seed;
    const NewtonReport rep = newton_core(lat, z, opts);
    if (!rep.ok) throw numeric_error("Newton stagnation", rep.fnorm);
    return make_state(spec, lat, std::move(z), std::move(ray));
}

BetheState ground_state(const ChainSpec& spec, const EtaPath& eta_path, const SolveOptions& opts)
{
    const int r = spec.r;
    const int N = spec.N;
    if (r < 1) throw domain_error("r must be positive");
    if (N <= 0 || N % (2 * r) != 0) throw domain_error("N must be a positive multiple of 2r");

    // Stage 1: single-site reduced chain, exactly solvable at gamma = pi/2,
    // then anisotropy continuation to gamma_red = pi r/(n+r).
    const int nred = N / r;
    const double gred = PI * r / (spec.n + r);
    if (!(gred > 0.0 && gred < PI))
        throw domain_error("reduced anisotropy outside the critical window");
    Lattice red{nred, PI / 2.0, spec.k, {Cplx(1.0, 0.0)}};
    std::vector<Cplx> zred;
    zred.reserve(nred / 2);
    for (double x : xx_chain_roots(nred, spec.k)) zred.emplace_back(x, 0.0);
    {
        const NewtonReport rep = newton_core(red, zred, opts);
        if (!rep.ok) throw numeric_error("reduced free-fermion seed rejected", rep.fnorm);
    }
    if (std::abs(gred - PI / 2.0) > 1e-15) {
        const double g0 = PI / 2.0;
        const double frac = opts.gamma_step / std::abs(gred - g0);
        continue_path(red, zred, [&](double s) { red.gamma = g0 + s * (gred - g0); }, frac, opts,
                      "anisotropy continuation");
    }

    // Stage 2: lift each reduced root onto r rays, zeta^r = (-1)^A zeta_red.
    std::vector<Cplx> z;
    z.reserve(N / 2);
    for (const Cplx& zr : zred) {
        const Cplx w = (std::log(zr) + Cplx(0.0, PI * spec.A)) / static_cast<double>(r);
        for (int ap = 0; ap < r; ++ap)
            z.push_back(std::exp(w + Cplx(0.0, 2.0 * PI * ap / r)));
    }
    std::vector<int> ray = classify_rays(spec, z).ray;

    Lattice full{N, spec.gamma(), spec.k, z_r_inhomogeneities(r)};
    {
        const NewtonReport rep = newton_core(full, z, opts);
        if (!rep.ok)
            throw numeric_error("lifted roots rejected at the symmetric point", rep.fnorm);
    }

    // Stage 3: inhomogeneity continuation toward the target pattern.
    if (eta_path) {
        continue_path(full, z, [&](double s) { full.eta = eta_path(s); }, opts.coupling_step,
                      opts, "inhomogeneity continuation");
    }

    return make_state(spec, full, std::move(z), std::move(ray));
}

BetheState ground_state(const ChainSpec& spec, const std::vector<double>& a_odd,
                        const SolveOptions& opts)
{
    if (a_odd.empty() ||
        std::all_of(a_odd.begin(), a_odd.end(), [](double a) { return a == 0.0; }))
        return ground_state(spec, EtaPath{}, opts);
    EtaPath path = [spec, a_odd](double t) {
        std::vector<double> at(a_odd.size());
        for (std::size_t i = 0; i < a_odd.size(); ++i) at[i] = t * a_odd[i];
        return build_inhomogeneities(spec, at);
    };
    return ground_state(spec, path, opts);
}

RayAssignment classify_rays(const ChainSpec& spec, const std::vector<Cplx>& roots)
{
    RayAssignment out;
    out.ray.assign(roots.size(), 1);
    out.ambiguous.assign(roots.size(), false);
    for (std::size_t j = 0; j < roots.size(); ++j) {
        const double phi = std::arg(roots[j]);
        double best = 1e300, second = 1e300;
        for (int a = 1; a <= spec.r; ++a) {
            const double target = PI * (2.0 * a - 2.0 - spec.A) / spec.r;
            const double d = std::abs(wrap_angle(phi - target));
            if (d < best) {
                second = best;
                best = d;
                out.ray[j] = a;
            } else if (d < second) {
                second = d;
            }
        }
        // distance to the bisector between the two closest rays
        if (spec.r > 1 && (second - best) / 2.0 < 1e-6) out.ambiguous[j] = true;
    }
    return out;
}

namespace {

std::vector<std::vector<Cplx>> group_by_ray(const BetheState& st)
{
    if (st.ray.size() != st.roots.size())
        throw domain_error("state carries no ray labels");
    std::vector<std::vector<Cplx>> groups(st.spec.r);
    for (std::size_t j = 0; j < st.roots.size(); ++j)
        groups[st.ray[j] - 1].push_back(st.roots[j]);
    for (auto& g : groups)
        std::sort(g.begin(), g.end(),
                  [](const Cplx& a, const Cplx& b) { return std::abs(a) < std::abs(b); });
    return groups;
}

} // namespace

std::vector<std::vector<Cplx>> scaled_roots(const BetheState& st)
{
    std::vector<std::vector<Cplx>> groups = group_by_ray(st);
    const double scale = st.spec.zeta_to_E();
    for (auto& g : groups)
        for (Cplx& z : g) z *= scale;
    return groups;
}

std::vector<std::vector<Cplx>> scaled_roots_barred(const BetheState& st)
{
    std::vector<std::vector<Cplx>> groups = group_by_ray(st);
    const double scale = st.spec.zeta_to_E();
    for (auto& g : groups) {
        std::vector<Cplx> barred;
        barred.reserve(g.size());
        for (std::size_t m = 1; m <= g.size(); ++m) barred.push_back(scale / g[g.size() - m]);
        g = std::move(barred);
    }
    return groups;
}

Cplx sum_rule_reg(const BetheState& st, int s)
{
    if (s < 1) throw domain_error("sum_rule_reg: s must be >= 1");
    const ChainSpec& sp = st.spec;
    const double cs = std::cos(s * sp.gamma());
    if (std::abs(cs) < 1e-9)
        throw domain_error("sum_rule_reg: counterterm pole, cos(s gamma) = 0");
    Cplx eta_sum(0.0, 0.0);
    for (const Cplx& e : st.eta) eta_sum += std::pow(e, -s);
    Cplx root_sum(0.0, 0.0);
    for (const Cplx& z : st.roots) root_sum += std::pow(z, -s);
    const double sign = (s % 2 == 1) ? 1.0 : -1.0;
    return root_sum / static_cast<double>(s) +
           sign * static_cast<double>(sp.N) / (2.0 * s * sp.r * cs) * eta_sum;
}

Cplx sum_rule_scaled(const BetheState& st, int s)
{
    const ChainSpec& sp = st.spec;
    const double expo = 2.0 * s * sp.n / (sp.r * (sp.n + sp.r));
    return std::pow(sp.r * sp.N0() / sp.N, expo) * sum_rule_reg(st, s);
}

Cplx energy(const BetheState& st)
{
    const Cplx q = st.spec.q();
    const Cplx qi = 1.0 / q;
    Cplx e(0.0, 0.0);
    for (const Cplx& el : st.eta)
        for (const Cplx& z : st.roots) {
            const Cplx da = 1.0 + z * qi / el;
            const Cplx db = 1.0 + z * q / el;
            if (std::abs(da) < 1e-12 || std::abs(db) < 1e-12)
                throw numeric_error("energy summand pole", std::min(std::abs(da), std::abs(db)));
            e += 1.0 / da - 1.0 / db;
        }
    return 2.0 * I * e;
}

Cplx quasi_shift(const BetheState& st, int ell)
{
    if (ell < 1 || ell > st.spec.r) throw domain_error("quasi_shift: ell out of range");
    const Cplx q = st.spec.q();
    const Cplx el = st.eta[ell - 1];
    Cplx s(0.0, PI * st.spec.k - st.spec.gamma() * st.spec.N / 2.0);
    for (const Cplx& z : st.roots) {
        const Cplx num = z + el * q;
        const Cplx den = z + el / q;
        if (std::abs(den) < 1e-14 * (1.0 + std::abs(z)))
            throw numeric_error("quasi-shift pole", std::abs(den));
        s += std::log(num) - std::log(den);
    }
    return std::exp(s);
}

Cplx quasi_shift_total(const BetheState& st)
{
    Cplx k(1.0, 0.0);
    for (int ell = 1; ell <= st.spec.r; ++ell) k *= quasi_shift(st, ell);
    return k;
}

Extrapolated extrapolate(const std::vector<double>& N, const std::vector<Cplx>& values)
{
    if (N.size() != values.size() || N.empty())
        throw domain_error("extrapolate: need matching nonempty inputs");
    const std::size_t m = N.size();
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = 1.0 / (N[i] * N[i]);
    std::vector<Cplx> t = values;
    Cplx prev = t[0];
    double err = 0.0;
    for (std::size_t k = 1; k < m; ++k) {
        for (std::size_t i = 0; i + k < m; ++i)
            t[i] = (x[i + k] * t[i] - x[i] * t[i + 1]) / (x[i + k] - x[i]);
        err = std::abs(t[0] - prev);
        prev = t[0];
    }
    return {t[0], m > 1 ? err : std::abs(t[0])};
}

PowerLawFit fit_power_law(const std::vector<double>& N, const std::vector<Cplx>& values,
                          double pinned_delta)
{
    if (N.size() != values.size() || N.size() < 4)
        throw domain_error("fit_power_law: need at least 4 matched points");
    const std::size_t m = N.size();

    struct Ls {
        Cplx b1, b2;
        double sse, cond;
    };
    auto solve_at = [&](double delta) {
        Ls ls{};
        double sx = 0.0, sxx = 0.0;
        Cplx sv(0.0, 0.0), sxv(0.0, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double x = std::pow(N[i], -delta);
            sx += x;
            sxx += x * x;
            sv += values[i];
            sxv += x * values[i];
        }
        const double nn = static_cast<double>(m);
        const double det = nn * sxx - sx * sx;
        ls.b2 = (nn * sxv - sx * sv) / det;
        ls.b1 = (sv - ls.b2 * sx) / nn;
        ls.sse = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = std::pow(N[i], -delta);
            ls.sse += std::norm(values[i] - ls.b1 - ls.b2 * x);
        }
        const double tr = nn + sxx;
        const double disc = std::sqrt(0.25 * (nn - sxx) * (nn - sxx) + sx * sx);
        const double lmin = 0.5 * tr - disc;
        ls.cond = lmin > 0.0 ? (0.5 * tr + disc) / lmin : 1e300;
        return ls;
    };

    const double dlo = 0.05, dhi = 8.0;
    double delta = pinned_delta;
    bool at_bound = false;
    if (pinned_delta <= 0.0) {
        // coarse log-spaced scan, then golden-section refinement
        const int ngrid = 160;
        double best_d = dlo, best_sse = 1e300;
        for (int i = 0; i <= ngrid; ++i) {
            const double d = dlo * std::pow(dhi / dlo, static_cast<double>(i) / ngrid);
            const double sse = solve_at(d).sse;
            if (sse < best_sse) {
                best_sse = sse;
                best_d = d;
            }
        }
        double a = best_d / std::pow(dhi / dlo, 1.0 / ngrid);
        double b = best_d * std::pow(dhi / dlo, 1.0 / ngrid);
        a = std::max(a, dlo);
        b = std::min(b, dhi);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d2 = a + gr * (b - a);
        double fc = solve_at(c).sse, fd = solve_at(d2).sse;
        for (int it = 0; it < 200 && (b - a) > 1e-10 * b; ++it) {
            if (fc < fd) {
                b = d2;
                d2 = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = solve_at(c).sse;
            } else {
                a = c;
                c = d2;
                fc = fd;
                d2 = a + gr * (b - a);
                fd = solve_at(d2).sse;
            }
        }
        delta = 0.5 * (a + b);
        at_bound = delta < dlo * 1.01 || delta > dhi * 0.99;
    }

    const Ls ls = solve_at(delta);
    // non-monotone tail: successive increments must keep shrinking
    bool tail_bad = false;
    if (m >= 3) {
        const double d1 = std::abs(values[m - 2] - values[m - 3]);
        const double d2 = std::abs(values[m - 1] - values[m - 2]);
        tail_bad = d2 > d1;
    }
    PowerLawFit fit;
    fit.limit = ls.b1;
    fit.amplitude = ls.b2;
    fit.delta = delta;
    fit.residual = std::sqrt(ls.sse / static_cast<double>(m));
    fit.unstable = ls.cond > 1e8 || at_bound || tail_bad;
    return fit;
}

} // namespace bethelab::lattice
