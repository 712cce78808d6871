#include "bethelab/series.hpp"

#include <algorithm>
#include <cmath>

namespace bethelab::series {

namespace {

// Shared implementations over the coefficient field (double or Cplx).
template <class T>
std::vector<T> mul_impl(const std::vector<T>& a, const std::vector<T>& b, std::size_t order) {
    std::vector<T> c(order, T(0.0));
    const std::size_t na = std::min(a.size(), order);
    for (std::size_t i = 0; i < na; ++i) {
        if (a[i] == T(0.0)) continue;
        const std::size_t nb = std::min(b.size(), order - i);
        for (std::size_t j = 0; j < nb; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

template <class T>
std::vector<T> log_impl(const std::vector<T>& a, std::size_t order) {
    if (a.empty() || a[0] != T(1.0))
        throw domain_error("series::log: constant term must be exactly 1");
    // l' = a'/a  =>  (k+1) l_{k+1} = (k+1) a_{k+1} - sum_{j=1}^{k} j l_j a_{k+1-j}
    std::vector<T> l(order, T(0.0));
    for (std::size_t k = 1; k < order; ++k) {
        T acc = (k < a.size()) ? T(static_cast<double>(k)) * a[k] : T(0.0);
        for (std::size_t j = 1; j < k; ++j) {
            const std::size_t idx = k - j;
            if (idx < a.size()) acc -= T(static_cast<double>(j)) * l[j] * a[idx];
        }
        l[k] = acc / T(static_cast<double>(k));
    }
    return l;
}

template <class T>
std::vector<T> exp_impl(const std::vector<T>& a, std::size_t order) {
    if (!a.empty() && a[0] != T(0.0))
        throw domain_error("series::exp: constant term must be exactly 0");
    // e' = a' e  =>  (k+1) e_{k+1} = sum_{j=0}^{k} (j+1) a_{j+1} e_{k-j}
    std::vector<T> e(order, T(0.0));
    if (order == 0) return e;
    e[0] = T(1.0);
    for (std::size_t k = 1; k < order; ++k) {
        T acc(0.0);
        for (std::size_t j = 1; j <= k; ++j) {
            if (j < a.size()) acc += T(static_cast<double>(j)) * a[j] * e[k - j];
        }
        e[k] = acc / T(static_cast<double>(k));
    }
    return e;
}

template <class T>
std::vector<T> pow_impl(const std::vector<T>& a, double z, std::size_t order) {
    std::vector<T> l = log_impl(a, order);
    for (T& c : l) c *= T(z);
    return exp_impl(l, order);
}

template <class T>
std::vector<T> lagrange_impl(int r, const std::vector<T>& G, std::size_t count) {
    if (r < 1) throw domain_error("lagrange_series: r must be positive");
    // Work in w = Y^{-2}: X = Y S(w) with
    //   S = (1 + sum_m G_m w^m S^{-2m})^{-1/r}.
    // Each substitution pass fixes one more order, so `order` passes settle
    // all coefficients.
    const std::size_t order = count + 1;
    std::vector<T> S(order, T(0.0));
    S[0] = T(1.0);
    for (std::size_t pass = 0; pass < order; ++pass) {
        std::vector<T> rhs(order, T(0.0));
        rhs[0] = T(1.0);
        for (std::size_t m = 1; m <= G.size(); ++m) {
            if (m >= order) break;
            if (G[m - 1] == T(0.0)) continue;
            std::vector<T> t = pow_impl(S, -2.0 * static_cast<double>(m), order);
            for (std::size_t j = 0; j + m < order; ++j) rhs[j + m] += G[m - 1] * t[j];
        }
        S = pow_impl(rhs, -1.0 / static_cast<double>(r), order);
    }
    std::vector<T> R(count);
    for (std::size_t j = 1; j <= count; ++j) R[j - 1] = S[j];
    return R;
}

template <class T>
std::vector<T> q_impl(const std::vector<T>& R, double z, std::size_t count) {
    const std::size_t order = count + 1;
    std::vector<T> f(order, T(0.0));
    f[0] = T(1.0);
    for (std::size_t k = 1; k <= R.size() && k < order; ++k) f[k] = R[k - 1];
    std::vector<T> p = pow_impl(f, z, order);
    std::vector<T> Q(count);
    for (std::size_t k = 1; k <= count; ++k) Q[k - 1] = p[k];
    return Q;
}

} // namespace

Series mul(const Series& a, const Series& b, std::size_t order) { return mul_impl(a, b, order); }
Series log(const Series& a, std::size_t order) { return log_impl(a, order); }
Series exp(const Series& a, std::size_t order) { return exp_impl(a, order); }
Series pow(const Series& a, double z, std::size_t order) { return pow_impl(a, z, order); }

std::vector<double> lagrange_series(int r, const std::vector<double>& G, std::size_t count) {
    return lagrange_impl(r, G, count);
}

std::vector<double> q_expansion(const std::vector<double>& R, double z, std::size_t count) {
    return q_impl(R, z, count);
}

CSeries mul(const CSeries& a, const CSeries& b, std::size_t order) { return mul_impl(a, b, order); }
CSeries log(const CSeries& a, std::size_t order) { return log_impl(a, order); }
CSeries exp(const CSeries& a, std::size_t order) { return exp_impl(a, order); }
CSeries pow(const CSeries& a, double z, std::size_t order) { return pow_impl(a, z, order); }

std::vector<Cplx> lagrange_series(int r, const std::vector<Cplx>& G, std::size_t count) {
    return lagrange_impl(r, G, count);
}

std::vector<Cplx> q_expansion(const std::vector<Cplx>& R, double z, std::size_t count) {
    return q_impl(R, z, count);
}

} // namespace bethelab::series
