#pragma once

#include <vector>

#include "bethelab/types.hpp"

namespace bethelab::series {

// Dense truncated power series: coeffs[k] multiplies u^k.
using Series = std::vector<double>;

// Product truncated at `order` terms (result size == order).
Series mul(const Series& a, const Series& b, std::size_t order);

// log of a series with a[0] == 1, truncated at `order` terms.
Series log(const Series& a, std::size_t order);

// exp of a series with a[0] == 0, truncated at `order` terms.
Series exp(const Series& a, std::size_t order);

// a^z for real exponent z, a[0] == 1; computed as exp(z log a).
Series pow(const Series& a, double z, std::size_t order);

// Inverts the algebraic relation
//     X^r + sum_{m=1}^{M} G[m-1] X^{r-2m} = Y^r
// for large Y as X(Y) = Y (1 + sum_{j>=1} s_j Y^{-2j}); returns the
// coefficients R[j-1] = s_j for j = 1..count, i.e. R[j-1] multiplies
// Y^{1-2j} in X(Y).
std::vector<double> lagrange_series(int r, const std::vector<double>& G, std::size_t count);

/// Re-expands a power of the canonical tail series:
//     (1 + sum_{k>=1} R[k-1] u^{2k})^z = 1 + sum_{k>=1} Q_k(z) u^{2k};
// returns Q_1..Q_count evaluated at exponent z.
std::vector<double> q_expansion(const std::vector<double>& R, double z, std::size_t count);

// Complex-coefficient counterparts (same conventions as above).
using CSeries = std::vector<Cplx>;

CSeries mul(const CSeries& a, const CSeries& b, std::size_t order);
CSeries log(const CSeries& a, std::size_t order);
CSeries exp(const CSeries& a, std::size_t order);
CSeries pow(const CSeries& a, double z, std::size_t order);
std::vector<Cplx> lagrange_series(int r, const std::vector<Cplx>& G, std::size_t count);
std::vector<Cplx> q_expansion(const std::vector<Cplx>& R, double z, std::size_t count);

} // namespace bethelab::series
