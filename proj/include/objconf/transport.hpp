#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "objconf/metric_space.hpp"

namespace objconf {

// Transport maps of [0, 1] onto itself (increasing, fixing 0 and 1), sampled
// on the same midpoint levels as QuantileGrid. Between samples a map is
// linear, with the fixed endpoints (0, 0) and (1, 1) as outer knots.

/// Midpoint levels u_j = (j - 1/2) / m, j = 1..m.
std::vector<double> quantile_levels(std::size_t m);

QuantileGrid identity_map(std::size_t m);

/// Evaluates the piecewise-linear map at s in [0, 1].
double evaluate_map(const QuantileGrid& map, double s);

/// Evaluates the inverse of the piecewise-linear map at s in [0, 1]. Flat
/// stretches resolve to their left end.
double evaluate_inverse_map(const QuantileGrid& map, double s);

/// Running maximum, in place.
void monotone_project(std::vector<double>& values);

/// T1 (+) T2 = T2 o T1.
QuantileGrid transport_add(const QuantileGrid& t1, const QuantileGrid& t2);

/// alpha (.) T for |alpha| <= 1:
///   alpha > 0:  x + alpha (T(x) - x)
///   alpha = 0:  x
///   alpha < 0:  x + alpha (x - T^{-1}(x))
QuantileGrid transport_scale(double alpha, const QuantileGrid& t);

} // namespace objconf

namespace objconf {

/// Quantile grid of N(mean, sd^2) truncated to [lo, hi] on m midpoint levels.
QuantileGrid truncated_normal_quantiles(double mean, double sd, double lo, double hi,
                                        std::size_t m);

} // namespace objconf
