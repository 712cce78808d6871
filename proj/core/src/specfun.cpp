#include "bethelab/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "bethelab/quadrature.hpp"

namespace bethelab::specfun {

namespace {

// Lanczos sum, g = 607/128, 15 terms. Valid for Re z >= 1/2; accuracy ~1e-14.
constexpr double kLanczosG = 607.0 / 128.0;
constexpr std::array<double, 15> kLanczosC = {
    0.99999999999999709182,     57.156235665862923517,
    -59.597960355475491248,     14.136097974741747174,
    -0.49191381609762019978,    0.33994649984811888699e-4,
    0.46523628927048575665e-4,  -0.98374475304879564677e-4,
    0.15808870322491248884e-3,  -0.21026444172410488319e-3,
    0.21743961811521264320e-3,  -0.16431810653676389022e-3,
    0.84418223983852743293e-4,  -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
};

// log Gamma(z) for Re z >= 1/2 (principal branch follows automatically:
// the shifted base point has positive real part and the Lanczos sum stays
// in the right half plane there).
Cplx log_gamma_lanczos(Cplx z) {
    Cplx sum = kLanczosC[0];
    for (std::size_t k = 1; k < kLanczosC.size(); ++k)
        sum += kLanczosC[k] / (z - 1.0 + static_cast<double>(k));
    const Cplx t = z + (kLanczosG - 0.5);
    return 0.5 * std::log(2.0 * PI) + (z - 0.5) * std::log(t) - t + std::log(sum);
}

bool is_nonpositive_integer(double x, double tol = 1e-12) {
    return x <= 0.5 && std::abs(x - std::round(x)) < tol;
}

} // namespace

Cplx log_gamma(Cplx z) {
    if (!is_finite(z)) throw domain_error("log_gamma: non-finite argument");
    if (z.imag() == 0.0) {
        if (z.real() <= 0.0) {
            std::ostringstream msg;
            msg << "log_gamma: argument " << z.real()
                << " lies on the cut (-inf,0]; use gamma_ratio for signed real ratios";
            throw domain_error(msg.str());
        }
        // Real positive axis: keep the result exactly real.
        int sign = 0;
        return Cplx(ln_abs_gamma(z.real(), sign), 0.0);
    }
    if (z.real() >= 0.5) return log_gamma_lanczos(z);
    // Push the argument to Re >= 1/2 with the recurrence
    // log Gamma(z) = log Gamma(z+m) - sum_k Log(z+k),
    // exact for the principal branch off the cut (all shifts stay off it,
    // since Im z != 0 here).
    const int m = static_cast<int>(std::ceil(0.5 - z.real()));
    Cplx shift_log = 0.0;
    for (int k = 0; k < m; ++k) shift_log += std::log(z + static_cast<double>(k));
    return log_gamma_lanczos(z + static_cast<double>(m)) - shift_log;
}

Cplx gamma(Cplx z) {
    if (z.imag() == 0.0) {
        const double x = z.real();
        if (is_nonpositive_integer(x))
            throw domain_error("gamma: pole at non-positive integer argument");
        return Cplx(std::tgamma(x), 0.0);
    }
    if (z.real() >= 0.5) return std::exp(log_gamma_lanczos(z));
    // Value-level reflection needs no branch tracking.
    return PI / (std::sin(PI * z) * std::exp(log_gamma_lanczos(1.0 - z)));
}

double ln_abs_gamma(double x, int& sign) {
    if (is_nonpositive_integer(x)) {
        std::ostringstream msg;
        msg << "ln_abs_gamma: pole of Gamma at " << x;
        throw domain_error(msg.str());
    }
    return ::lgamma_r(x, &sign);
}

double gamma_ratio(std::span<const double> num, std::span<const double> den) {
    double log_sum = 0.0;
    int sign = 1;
    for (double a : num) {
        int s = 0;
        log_sum += ln_abs_gamma(a, s);
        sign *= s;
    }
    for (double b : den) {
        if (is_nonpositive_integer(b)) return 0.0; // 1/Gamma vanishes at poles
        int s = 0;
        log_sum -= ln_abs_gamma(b, s);
        sign *= s;
    }
    return sign * std::exp(log_sum);
}

namespace {

// Reciprocal Gamma, entire in z; returns 0 at the poles of Gamma.
Cplx rgamma(Cplx z) {
    if (z.imag() == 0.0 && is_nonpositive_integer(z.real())) return 0.0;
    if (z.imag() == 0.0 && z.real() > 0.0) {
        int s = 0;
        const double l = ln_abs_gamma(z.real(), s);
        return Cplx(s * std::exp(-l), 0.0);
    }
    if (z.imag() == 0.0) {
        // negative real non-integer
        int s = 0;
        const double l = ln_abs_gamma(z.real(), s);
        return Cplx(s * std::exp(-l), 0.0);
    }
    return std::exp(-log_gamma(z));
}

Cplx kummer_taylor(Cplx a, Cplx b, Cplx z) {
    Cplx term = 1.0, sum = 1.0;
    int quiet = 0;
    for (int k = 0; k < 4000; ++k) {
        term *= (a + static_cast<double>(k)) * z /
                ((b + static_cast<double>(k)) * static_cast<double>(k + 1));
        sum += term;
        if (std::abs(term) < 1e-17 * (1.0 + std::abs(sum))) {
            if (++quiet >= 2) return sum;
        } else {
            quiet = 0;
        }
    }
    throw numeric_error("kummer_1f1: Taylor series did not converge", std::abs(term));
}

// Large-|z| asymptotic expansion:
//   M(a,b,z) ~ Gamma(b) [ e^{+-i pi a} z^{-a}/Gamma(b-a) * sum_k (a)_k (a-b+1)_k / (k! (-z)^k)
//              + e^z z^{a-b}/Gamma(a)   * sum_k (b-a)_k (1-a)_k / (k! z^k) ],
// the sign in e^{+-i pi a} following the sign of Im z.
Cplx kummer_asymptotic(Cplx a, Cplx b, Cplx z) {
    auto optimal_sum = [](Cplx p, Cplx q, Cplx w) {
        // sum_k (p)_k (q)_k / (k! w^k), truncated at the smallest term
        Cplx term = 1.0, sum = 1.0;
        double best = 1.0;
        for (int k = 0; k < 120; ++k) {
            term *= (p + static_cast<double>(k)) * (q + static_cast<double>(k)) /
                    (static_cast<double>(k + 1) * w);
            const double mag = std::abs(term);
            if (mag > best) break; // divergent tail reached
            sum += term;
            best = mag;
            if (mag < 1e-17) break;
        }
        return sum;
    };
    const double eps_sign = (z.imag() >= 0.0) ? 1.0 : -1.0;
    const Cplx log_z = std::log(z);
    // recessive piece ~ z^{-a}
    const Cplx rec = std::exp(Cplx(0.0, eps_sign * PI) * a - a * log_z) * rgamma(b - a) *
                     optimal_sum(a, a - b + 1.0, -z);
    // dominant piece ~ e^z z^{a-b}
    const Cplx dom = std::exp(z + (a - b) * log_z) * rgamma(a) *
                     optimal_sum(b - a, 1.0 - a, z);
    return gamma(b) * (rec + dom);
}

} // namespace

Cplx kummer_1f1(Cplx a, Cplx b, Cplx z) {
    if (b.imag() == 0.0 && is_nonpositive_integer(b.real()))
        throw domain_error("kummer_1f1: parameter b is a non-positive integer");
    if (z == Cplx(0.0)) return 1.0;
    if (z.real() < 0.0) {
        // Kummer transformation keeps the Taylor series cancellation-free.
        return std::exp(z) * kummer_1f1(b - a, b, -z);
    }
    const double cancellation = std::abs(z) - z.real(); // log of term/result ratio
    if (std::abs(z) <= 60.0 && cancellation <= 12.0) return kummer_taylor(a, b, z);
    return kummer_asymptotic(a, b, z);
}

double bernoulli_number(int m) {
    if (m < 0) throw domain_error("bernoulli_number: negative index");
    if (m == 0) return 1.0;
    if (m == 1) return -0.5;
    if (m % 2 == 1) return 0.0;
    const int n = m / 2; // need tangent number T_n
    // Knuth--Buckholtz in-place tangent-number recurrence (exact integer
    // arithmetic carried in doubles; values stay well inside range for m<=64).
    std::vector<double> t(static_cast<std::size_t>(n) + 1, 0.0);
    t[1] = 1.0;
    for (int k = 2; k <= n; ++k) t[k] = (k - 1) * t[k - 1];
    for (int k = 2; k <= n; ++k)
        for (int j = k; j <= n; ++j) t[j] = (j - k) * t[j - 1] + (j - k + 2) * t[j];
    const double four_n = std::pow(4.0, n);
    const double two_n = std::pow(2.0, n);
    // B_{2n} = (-1)^{n-1} T_n * 2n / (2^{2n} (2^{2n} - 1))
    const double sign = (n % 2 == 1) ? 1.0 : -1.0;
    return sign * t[n] * (2.0 * n) / (four_n * two_n * two_n - four_n);
}

Cplx bernoulli_poly(int m, Cplx x) {
    if (m < 0 || m > 64) throw domain_error("bernoulli_poly: order must be in [0, 64]");
    // B_m(x) = sum_k C(m,k) B_k x^{m-k}
    std::vector<double> bern(static_cast<std::size_t>(m) + 1);
    for (int k = 0; k <= m; ++k) bern[k] = bernoulli_number(k);
    std::vector<double> binoms(static_cast<std::size_t>(m) + 1);
    binoms[0] = 1.0;
    for (int k = 1; k <= m; ++k) binoms[k] = binoms[k - 1] * (m - k + 1) / k;
    Cplx sum = 0.0;
    Cplx xpow = 1.0; // holds x^{m-k}, built upward as k descends from m
    for (int k = m; k >= 0; --k) {
        sum += binoms[k] * bern[k] * xpow;
        xpow *= x;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Perturbative kernels f1, f2, f3
// ---------------------------------------------------------------------------

double f1(double h, double g) {
    if (is_nonpositive_integer(1.0 - 2.0 * g) || is_nonpositive_integer(g + 2.0 * h)) {
        std::ostringstream msg;
        msg << "f1: Gamma pole (1-2g=" << 1.0 - 2.0 * g << ", g+2h=" << g + 2.0 * h << ")";
        throw domain_error(msg.str());
    }
    const double num[] = {1.0 - 2.0 * g, g + 2.0 * h};
    const double den[] = {1.0 - g + 2.0 * h};
    return PI / std::sin(PI * g) * gamma_ratio(num, den);
}

namespace {

// |Gamma(a+2ix)|^2 = Gamma(a+2ix) Gamma(a-2ix) for real a, x, computed in
// log space. Valid for a+2ix off the poles; for x != 0 always fine.
double gamma_pair_abs2(double a, double x) {
    if (x == 0.0) {
        const double num[] = {a, a};
        return gamma_ratio(num, {});
    }
    return std::exp(2.0 * log_gamma(Cplx(a, 2.0 * x)).real());
}

// S1(x) = sinh(2 pi x) |Gamma(1-2g+2ix)|^2 |Gamma(g+2ix)|^4  (odd in x)
double s1_kernel(double x, double g) {
    if (x == 0.0) return 0.0;
    const double p = gamma_pair_abs2(1.0 - 2.0 * g, x);
    const double q = gamma_pair_abs2(g, x);
    return std::sinh(2.0 * PI * x) * p * q * q;
}

// T(y) = sinh(2 pi y) |Gamma(g+2iy)|^2 |Gamma(2g+2iy)|^2 |Gamma(2-3g+2iy)|^2
double t_kernel(double y, double g) {
    if (y == 0.0) return 0.0;
    return std::sinh(2.0 * PI * y) * gamma_pair_abs2(g, y) *
           gamma_pair_abs2(2.0 * g, y) * gamma_pair_abs2(2.0 - 3.0 * g, y);
}

// S3(x) = sinh(2 pi x) |Gamma(2-3g+2ix)|^2 |Gamma(g+2ix)|^6
//         * [sin(4 i pi x + 2 pi g) - 2 sin(2 pi g)] / sin(2 i pi x + 2 pi g)
Cplx s3_kernel(double x, double g) {
    if (x == 0.0) return 0.0;
    const double gam = gamma_pair_abs2(2.0 - 3.0 * g, x) * std::pow(gamma_pair_abs2(g, x), 3);
    const Cplx trig = (std::sin(Cplx(2.0 * PI * g, 4.0 * PI * x)) - 2.0 * std::sin(2.0 * PI * g)) /
                      std::sin(Cplx(2.0 * PI * g, 2.0 * PI * x));
    return std::sinh(2.0 * PI * x) * gam * trig;
}

// Subtraction turning S3 into its continued version for g > 1/2:
// 3 pi^{-2} sin(4 pi g) sin(2 pi g) sinh(2 pi x) Gamma(3-4g) Gamma^2(1-g)
//   Gamma^2(3g-1) |Gamma(2-3g+2ix)|^2 |Gamma(g+2ix)|^2 |Gamma(2g-1+2ix)|^2
double s3_subtraction(double x, double g) {
    if (x == 0.0) return 0.0;
    const double num[] = {3.0 - 4.0 * g, 1.0 - g, 1.0 - g, 3.0 * g - 1.0, 3.0 * g - 1.0};
    const double pref = gamma_ratio(num, {});
    return 3.0 / (PI * PI) * std::sin(4.0 * PI * g) * std::sin(2.0 * PI * g) *
           std::sinh(2.0 * PI * x) * pref * gamma_pair_abs2(2.0 - 3.0 * g, x) *
           gamma_pair_abs2(g, x) * gamma_pair_abs2(2.0 * g - 1.0, x);
}

// integral over the real line of K(x)/(x + i h) for a real odd kernel K with
// exponential decay; the result is real:
//   int K(x)/(x+ih) dx = int K(x) x/(x^2+h^2) dx   (the odd part cancels)
double cauchy_line_integral(const std::function<double(double)>& kernel, double h,
                            double x_max, double abs_tol) {
    auto f = [&](double x) { return kernel(x) * x / (x * x + h * h); };
    return quad::integrate(f, 0.0, x_max, abs_tol / 2.0, 1e-12) * 2.0;
}

// Decay range: every kernel above decays like e^{-4 pi x} times powers, so
// truncating the line integrals at |x| = 6 leaves a tail below 1e-18 of the
// peak for the whole admissible g range.
double kernel_range(double g) {
    (void)g;
    return 6.0;
}

} // namespace

double f2(double h, double g) {
    if (h <= 0.0) throw domain_error("f2: requires Re(h) > 0");
    if (g <= 0.0 || g >= 1.0 || std::abs(g - 0.5) < 1e-12)
        throw domain_error("f2: g must lie in (0,1/2) u (1/2,1)");

    const double x_max = kernel_range(g);
    const double integral =
        cauchy_line_integral([g](double x) { return s1_kernel(x, g); }, h, x_max, 1e-11) /
        (2.0 * PI);

    double bracket = integral;
    if (g > 0.5) {
        const double num[] = {3.0 - 4.0 * g, 1.0 - g, 1.0 - g, 3.0 * g - 1.0, 3.0 * g - 1.0};
        bracket -= std::sin(2.0 * PI * g) * gamma_ratio(num, {}) /
                   ((2.0 * h + 1.0 - 2.0 * g) * (2.0 * h - 1.0 + 2.0 * g));
    }
    const double num[] = {1.0 - g, 1.0 - g, 2.0 * g + 2.0 * h};
    const double den[] = {0.5 + g, 0.5 + g, 1.0 - 2.0 * g + 2.0 * h};
    return std::pow(2.0, 1.0 - 4.0 * g) * gamma_ratio(num, den) * bracket;
}

double f3(double h, double g) {
    if (h <= 0.0) throw domain_error("f3: requires Re(h) > 0");
    const bool in_domain = (g > 0.0 && g < 1.0) && std::abs(g - 1.0 / 3.0) > 1e-10 &&
                           std::abs(g - 0.5) > 1e-12 && std::abs(g - 2.0 / 3.0) > 1e-12;
    if (!in_domain)
        throw domain_error("f3: g must avoid the branch points {1/3, 1/2, 2/3} inside (0,1)");

    const double x_max = kernel_range(g);

    // Double integral: with S2(x,y) = T(y) S1(x) and the -i0 prescription,
    //   V(y) = PV int S1(x)/(x-y) dx + i pi S1(y),
    //   I2   = int dy/(4 pi^2) T(y) V(y) / (y + i h).
    auto s1 = [g](double x) { return s1_kernel(x, g); };
    auto v_of_y = [&](double y) -> Cplx {
        const double pv = quad::principal_value(s1, y, -x_max + std::min(y, 0.0),
                                                x_max + std::max(y, 0.0), 1e-11);
        return Cplx(pv, PI * s1(y));
    };
    // T(y)V(y)/(y+ih) integrated over the line; T odd, V has even real part
    // (PV of odd kernel) and odd imaginary part, so split by symmetry:
    //   int T(y)V(y)/(y+ih) dy
    //     = int_0^inf T(y) [ y (V(y)+V(-y)) - i h (V(y)-V(-y)) ] / (y^2+h^2) dy.
    // V(-y) = conj(V(y)) for real S1 (PV flips sign with the odd kernel):
    // PV part: PV(-y) = -PV(y) is NOT generally true; evaluate both sides.
    auto outer = [&](double y) -> Cplx {
        const Cplx vp = v_of_y(y);
        const Cplx vm = v_of_y(-y);
        const double t = t_kernel(y, g);
        return t * (vp / Cplx(y, h) - vm / Cplx(-y, h));
    };
    Cplx i2 = 0.0;
    {
        // integrate the complex outer kernel on (0, x_max]
        auto re_part = [&](double y) { return outer(y).real(); };
        auto im_part = [&](double y) { return outer(y).imag(); };
        const double re = quad::integrate(re_part, 1e-12, x_max, 1e-10, 1e-10);
        const double im = quad::integrate(im_part, 1e-12, x_max, 1e-10, 1e-10);
        i2 = Cplx(re, im) / (4.0 * PI * PI);
    }

    // Single integral with S3 (or its continued version) over the line.
    const bool continued = g > 0.5;
    auto s3c = [&](double x) -> Cplx {
        Cplx v = s3_kernel(x, g);
        if (continued) v -= s3_subtraction(x, g);
        return v;
    };
    Cplx i3 = 0.0;
    {
        auto f_re = [&](double x) { return (s3c(x) / Cplx(x, h)).real(); };
        auto f_im = [&](double x) { return (s3c(x) / Cplx(x, h)).imag(); };
        const double re = quad::integrate(f_re, -x_max, x_max, 1e-10, 1e-10);
        const double im = quad::integrate(f_im, -x_max, x_max, 1e-10, 1e-10);
        i3 = Cplx(re, im) / (2.0 * PI);
    }

    Cplx bracket = -std::sin(4.0 * PI * g) / (PI * PI) * i2 + i3 / 3.0;

    if (g > 2.0 / 3.0) {
        const double d = (2.0 - 3.0 * g) * (2.0 - 3.0 * g) - 4.0 * h * h;
        const double numA[] = {5.0 - 6.0 * g, 2.0 - 2.0 * g, 1.0 - g, 1.0 - g,
                               1.0 - g,       3.0 * g - 1.0, 3.0 * g - 1.0, 5.0 * g - 3.0};
        const double s4a = std::sin(2.0 * PI * g) * std::sin(3.0 * PI * g) *
                           gamma_ratio(numA, {}) / (PI * d);
        const double numB[] = {4.0 - 6.0 * g, 2.0 - 2.0 * g, 2.0 - 2.0 * g,
                               2.0 - 2.0 * g, 4.0 * g - 2.0, 4.0 * g - 2.0, 4.0 * g - 2.0};
        const double cos2 = std::cos(2.0 * PI * g), cos4 = std::cos(4.0 * PI * g),
                     cos6 = std::cos(6.0 * PI * g);
        const double poly = (3.0 * g - 6.0 * h - 2.0) + (15.0 * g - 6.0 * h - 10.0) * cos2 +
                            (9.0 * g - 6.0 * h - 6.0) * cos4 + 2.0 * (3.0 * g - 2.0) * cos6;
        const double s4b = 4.0 * std::sin(3.0 * PI * g) * std::cos(PI * g) *
                           gamma_ratio(numB, {}) * poly /
                           (3.0 * d * (2.0 * cos2 + 2.0 * cos4 + 1.0));
        bracket += s4a + s4b;
    }

    const double num[] = {1.0 - g, 1.0 - g, 1.0 - g, 3.0 * g - 1.0 + 2.0 * h};
    const double den[] = {0.5 + g, 0.5 + g, 0.5 + g, 2.0 - 3.0 * g + 2.0 * h};
    const Cplx result = std::pow(2.0, 2.0 - 6.0 * g) * std::sqrt(PI) *
                        gamma_ratio(num, den) * bracket;
    if (std::abs(result.imag()) > 1e-6 * (1.0 + std::abs(result.real())))
        throw numeric_error("f3: imaginary residue exceeds tolerance", result.imag());
    return result.real();
}

} // namespace bethelab::specfun
