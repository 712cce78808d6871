#pragma once

#include <functional>

#include "bethelab/types.hpp"

namespace bethelab::quad {

// Adaptive Gauss-Kronrod (7,15) integration of f over [a, b].
// A panel is accepted once its error estimate drops below its share of
// abs_tol or below rel_tol times the running result. Throws numeric_error
// if the panel budget is exhausted first.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, double rel_tol = 1e-10);

// Cauchy principal value of  int_a^b f(x)/(x - y) dx  with a < y < b,
// computed by subtracting f(y)/(x - y) analytically:
//   PV = int_a^b (f(x) - f(y))/(x - y) dx + f(y) * log((b - y)/(y - a)).
double principal_value(const std::function<double(double)>& f, double y, double a,
                       double b, double abs_tol = 1e-10);

} // namespace bethelab::quad
