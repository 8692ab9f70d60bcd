#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace objconf {

struct NelderMeadOptions {
  std::size_t max_iterations = 200;
  /// Stop once the spread of objective values over the simplex is below this.
  double tolerance = 1e-6;
  double initial_step = 0.25;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::vector<double> best_history;
};

/// Derivative-free simplex minimization. Non-finite objective values are
/// treated as +inf.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> start, const NelderMeadOptions& options = {});

} // namespace objconf
