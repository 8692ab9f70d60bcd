#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "objconf/conformal.hpp"
#include "objconf/dataset.hpp"
#include "objconf/profiles.hpp"

namespace objconf {

/// Unit vector with positive first coordinate.
class IndexParameter {
public:
  /// Normalizes v and flips its sign so that the first coordinate is positive.
  static IndexParameter from_vector(std::span<const double> v);
  /// theta_1 = cos(phi_1), theta_2 = sin(phi_1) cos(phi_2), ...,
  /// theta_d = sin(phi_1) ... sin(phi_{d-1}); then normalized as above.
  static IndexParameter from_angles(std::span<const double> angles);

  const std::vector<double>& values() const noexcept { return theta_; }
  std::size_t dim() const noexcept { return theta_.size(); }

private:
  std::vector<double> theta_;
};

/// Equal-width bins over the projected range with one representative per
/// nonempty bin: the point whose projection is closest to the bin midpoint.
struct BinPlan {
  std::vector<double> edges;                 // M + 1 edges
  std::vector<std::size_t> representatives;  // data index per nonempty bin
  std::vector<std::size_t> bins;             // bin of each representative

  std::size_t bin_count() const noexcept { return edges.empty() ? 0 : edges.size() - 1; }
};

BinPlan make_bin_plan(std::span<const double> projections, std::size_t bin_count);

/// floor(n^0.3), at least 2.
std::size_t default_bin_count(std::size_t n);

/// Local Fréchet fit at index value t with weights s(X_i' theta, t, h)
/// normalized to one. Throws NoLocalData with fewer than two projections in
/// the window.
ObjectPoint local_frechet_fit(const Dataset& data, const IndexParameter& theta, double t,
                              const KernelSpec& kernel);

struct ThetaSearchOptions {
  std::size_t bins = 0;          // 0 = default_bin_count(n)
  std::size_t restarts = 8;
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
  KernelFamily kernel = KernelFamily::Epanechnikov;
  double bandwidth_scale = 1.0;
};

/// (1/M) sum_l d^2(Y_l, m(X_l' theta, theta)) over bin representatives, with
/// the rule-of-thumb bandwidth on the projections. +inf when a local fit fails.
double index_objective(const Dataset& data, const IndexParameter& theta,
                       const ThetaSearchOptions& options);

struct ThetaFit {
  IndexParameter theta;
  double objective = 0.0;
  std::size_t best_start = 0;
  std::vector<double> start_objectives;
  /// Best-so-far objective per iteration of the winning start.
  std::vector<double> history;
  BinPlan bins;
};

/// Nelder-Mead over spherical angles with seeded restarts; the winner is the
/// smallest (objective, start index).
ThetaFit estimate_theta(const Dataset& data, const ThetaSearchOptions& options);

/// Projects covariates on theta and runs split_fit on the result.
ConformalModel project_and_fit(const Dataset& data, const IndexParameter& theta,
                               const FitOptions& options);

struct SingleIndexModel {
  ConformalModel model;
  ThetaFit fit;
};

/// Full multivariate pipeline: split, estimate theta on the training half
/// only, project every covariate, calibrate.
SingleIndexModel single_index_fit(const Dataset& data, const FitOptions& fit_options,
                                  ThetaSearchOptions theta_options);

/// Squared Euclidean distance between two index vectors.
double theta_mse(std::span<const double> estimate, std::span<const double> truth);

} // namespace objconf
