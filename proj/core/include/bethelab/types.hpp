#pragma once

#include <complex>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bethelab {

using Cplx = std::complex<double>;

inline constexpr double PI = 3.141592653589793238462643383279502884;

// i*pi and friends show up in every branch computation; keep one definition.
inline const Cplx I{0.0, 1.0};

inline bool is_finite(const Cplx& z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// Error carrying a quantitative diagnostic (residual, error estimate, ...).
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, double diagnostic)
        : std::runtime_error(what), diagnostic_(diagnostic) {}
    double diagnostic() const { return diagnostic_; }

private:
    double diagnostic_;
};

class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace bethelab
