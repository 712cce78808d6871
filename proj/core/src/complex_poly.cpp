#include "bethelab/complex_poly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace bethelab::poly {

Cplx monic_eval(const std::vector<Cplx>& c, Cplx z) {
    Cplx v = 1.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * z + c[k];
    return v;
}

Cplx monic_eval_derivative(const std::vector<Cplx>& c, Cplx z) {
    const std::size_t n = c.size();
    Cplx v = static_cast<double>(n);
    for (std::size_t k = n; k-- > 1;) v = v * z + static_cast<double>(k) * c[k];
    return v;
}

std::vector<Cplx> monic_roots(const std::vector<Cplx>& c) {
    const std::size_t n = c.size();
    if (n == 0) return {};
    if (n == 1) return {-c[0]};
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    for (std::size_t i = 0; i < n; ++i) companion(i, n - 1) = -c[i];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw numeric_error("monic_roots: eigensolver failed", 0.0);
    std::vector<Cplx> roots(n);
    for (std::size_t i = 0; i < n; ++i) {
        Cplx z = solver.eigenvalues()(static_cast<Eigen::Index>(i));
        for (int it = 0; it < 8; ++it) {
            const Cplx f = monic_eval(c, z);
            const Cplx df = monic_eval_derivative(c, z);
            if (std::abs(df) == 0.0) break;
            const Cplx step = f / df;
            z -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
        }
        roots[i] = z;
    }
    return roots;
}

std::vector<Cplx> elementary_from_power_sums(const std::vector<Cplx>& p) {
    const std::size_t n = p.size();
    std::vector<Cplx> e(n + 1);
    e[0] = 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        Cplx acc = 0.0;
        double sign = 1.0;
        for (std::size_t i = 1; i <= k; ++i) {
            acc += sign * e[k - i] * p[i - 1];
            sign = -sign;
        }
        e[k] = acc / static_cast<double>(k);
    }
    return std::vector<Cplx>(e.begin() + 1, e.end());
}

} // namespace bethelab::poly
