#include "objconf/dataset.hpp"

#include <cmath>

#include "objconf/error.hpp"

namespace objconf {

std::vector<double> Dataset::scalar_covariates() const {
  std::vector<double> x(size());
  for (std::size_t i = 0; i < size(); ++i) x[i] = covariates[i * dim];
  return x;
}

std::vector<double> Dataset::project(std::span<const double> direction) const {
  if (direction.size() != dim) throw Error("projection direction has wrong dimension");
  std::vector<double> p(size(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += covariates[i * dim + c] * direction[c];
    p[i] = s;
  }
  return p;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.space = space;
  out.dim = dim;
  out.covariates.reserve(indices.size() * dim);
  out.objects.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw Error("subset index out of range");
    const auto row = covariate(i);
    out.covariates.insert(out.covariates.end(), row.begin(), row.end());
    out.objects.push_back(objects[i]);
  }
  return out;
}

Dataset Dataset::with_scalar_covariates(std::vector<double> x) const {
  if (x.size() != size()) throw Error("covariate count mismatch");
  Dataset out;
  out.space = space;
  out.dim = 1;
  out.covariates = std::move(x);
  out.objects = objects;
  return out;
}

void Dataset::validate() const {
  if (dim == 0) throw InvalidPoint("covariate dimension must be positive");
  if (covariates.size() != objects.size() * dim) {
    throw InvalidPoint("covariate block has " + std::to_string(covariates.size()) +
                       " values, expected " + std::to_string(objects.size() * dim));
  }
  for (std::size_t i = 0; i < size(); ++i) {
    for (double v : covariate(i)) {
      if (!std::isfinite(v)) throw InvalidPoint("row " + std::to_string(i) + ": non-finite covariate");
    }
    try {
      space.validate(objects[i]);
    } catch (const InvalidPoint& e) {
      throw InvalidPoint("row " + std::to_string(i) + ": " + e.what());
    }
  }
}

} // namespace objconf
