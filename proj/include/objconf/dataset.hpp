#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "objconf/metric_space.hpp"

namespace objconf {

/// Paired observations (x_i, y_i): covariates in R^d (row-major) and objects
/// of one declared space.
struct Dataset {
  MetricSpace space = MetricSpace::euclidean(1);
  std::size_t dim = 1;
  std::vector<double> covariates;
  std::vector<ObjectPoint> objects;

  std::size_t size() const noexcept { return objects.size(); }
  std::span<const double> covariate(std::size_t i) const {
    return {covariates.data() + i * dim, dim};
  }
  /// First covariate column; for d = 1 this is the full design.
  std::vector<double> scalar_covariates() const;
  /// Covariates projected on a direction of length dim.
  std::vector<double> project(std::span<const double> direction) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  /// Same objects with scalar covariates x.
  Dataset with_scalar_covariates(std::vector<double> x) const;

  /// Checks shapes and every point's invariants; throws InvalidPoint naming
  /// the offending row.
  void validate() const;
};

} // namespace objconf
