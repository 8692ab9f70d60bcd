#include "objconf/single_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "objconf/error.hpp"
#include "objconf/nelder_mead.hpp"
#include "objconf/parallel.hpp"
#include "objconf/rng.hpp"

namespace objconf {

IndexParameter IndexParameter::from_vector(std::span<const double> v) {
  if (v.empty()) throw Error("index parameter needs at least one coordinate");
  double ss = 0.0;
  for (double c : v) ss += c * c;
  const double norm = std::sqrt(ss);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw Error("index parameter must be nonzero");
  const double sign = v[0] < 0.0 ? -1.0 : 1.0;
  IndexParameter p;
  p.theta_.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) p.theta_[i] = sign * v[i] / norm;
  return p;
}

IndexParameter IndexParameter::from_angles(std::span<const double> angles) {
  std::vector<double> v(angles.size() + 1);
  double s = 1.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    v[i] = s * std::cos(angles[i]);
    s *= std::sin(angles[i]);
  }
  v.back() = s;
  return from_vector(v);
}

std::size_t default_bin_count(std::size_t n) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.3))));
}

BinPlan make_bin_plan(std::span<const double> projections, std::size_t bin_count) {
  if (bin_count < 1) throw Error("bin plan needs at least one bin");
  if (projections.empty()) throw Error("bin plan needs data");
  const auto [mn, mx] = std::minmax_element(projections.begin(), projections.end());
  const double lo = *mn;
  const double hi = *mx > *mn ? *mx : *mn + 1.0;
  const double width = (hi - lo) / static_cast<double>(bin_count);

  BinPlan plan;
  plan.edges.resize(bin_count + 1);
  for (std::size_t b = 0; b <= bin_count; ++b) plan.edges[b] = lo + width * static_cast<double>(b);
  plan.edges.back() = hi;

  const std::size_t none = projections.size();
  std::vector<std::size_t> best(bin_count, none);
  std::vector<double> gap(bin_count, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto b = std::min(static_cast<std::size_t>((projections[i] - lo) / width), bin_count - 1);
    const double mid = 0.5 * (plan.edges[b] + plan.edges[b + 1]);
    const double g = std::abs(projections[i] - mid);
    if (g < gap[b]) {
      gap[b] = g;
      best[b] = i;
    }
  }
  for (std::size_t b = 0; b < bin_count; ++b) {
    if (best[b] == none) continue;
    plan.representatives.push_back(best[b]);
    plan.bins.push_back(b);
  }
  return plan;
}

namespace {

ObjectPoint fit_at(const Dataset& data, std::span<const double> projections, double t,
                   const KernelSpec& kernel) {
  LocalLinearWeights w = local_linear_weights(t, projections, kernel);
  if (w.support() < 2) throw NoLocalData(t);
  const double total = w.sum();
  for (double& v : w.weight) v /= total;
  return data.space.frechet_mean(data.objects, w.index, w.weight);
}

} // namespace

ObjectPoint local_frechet_fit(const Dataset& data, const IndexParameter& theta, double t,
                              const KernelSpec& kernel) {
  const std::vector<double> p = data.project(theta.values());
  return fit_at(data, p, t, kernel);
}

double index_objective(const Dataset& data, const IndexParameter& theta,
                       const ThetaSearchOptions& options) {
  const std::vector<double> p = data.project(theta.values());
  const std::size_t bins = options.bins > 0 ? options.bins : default_bin_count(data.size());
  const BinPlan plan = make_bin_plan(p, bins);
  const KernelSpec kernel{options.kernel, rule_of_thumb_bandwidth(p, options.bandwidth_scale)};
  double total = 0.0;
  try {
    for (std::size_t r : plan.representatives) {
      const ObjectPoint m = fit_at(data, p, p[r], kernel);
      const double d = data.space.distance(data.objects[r], m);
      total += d * d;
    }
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
  return total / static_cast<double>(plan.representatives.size());
}

ThetaFit estimate_theta(const Dataset& data, const ThetaSearchOptions& options) {
  if (data.dim < 2) throw Error("estimate_theta needs at least two covariates");
  if (!data.space.has_mean()) throw Error("estimate_theta needs a space with a Fréchet mean");
  if (options.restarts == 0) throw Error("estimate_theta needs at least one start");
  const std::size_t angles = data.dim - 1;

  std::vector<NelderMeadResult> results(options.restarts);
  parallel_for(options.restarts, [&](std::size_t s) {
    Rng rng(child_seed(options.seed, 0x7e7a, s));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> start(angles);
    for (std::size_t a = 0; a < angles; ++a) {
      const double u = unit(rng);
      if (a == 0) {
        // jittered stratification of (-pi/2, pi/2) so every start owns a slice
        const double slice = (static_cast<double>(s) + u) / static_cast<double>(options.restarts);
        start[a] = (slice - 0.5) * std::numbers::pi;
      } else if (a + 1 == angles) {
        start[a] = 2.0 * std::numbers::pi * u;
      } else {
        start[a] = std::numbers::pi * u;
      }
    }
    NelderMeadOptions nm;
    nm.max_iterations = options.max_iterations;
    nm.tolerance = options.tolerance;
    results[s] = nelder_mead(
        [&](std::span<const double> phi) {
          return index_objective(data, IndexParameter::from_angles(phi), options);
        },
        std::move(start), nm);
  });

  std::size_t winner = 0;
  for (std::size_t s = 1; s < results.size(); ++s) {
    if (results[s].value < results[winner].value) winner = s;
  }
  if (!std::isfinite(results[winner].value)) throw Error("estimate_theta: no start produced a finite objective");

  ThetaFit fit{IndexParameter::from_angles(results[winner].x), results[winner].value, winner, {}, {}, {}};
  for (const auto& r : results) fit.start_objectives.push_back(r.value);
  fit.history = results[winner].best_history;
  const std::size_t bins = options.bins > 0 ? options.bins : default_bin_count(data.size());
  fit.bins = make_bin_plan(data.project(fit.theta.values()), bins);
  return fit;
}

ConformalModel project_and_fit(const Dataset& data, const IndexParameter& theta,
                               const FitOptions& options) {
  ConformalModel model = split_fit(data.with_scalar_covariates(data.project(theta.values())), options);
  model.theta = theta.values();
  return model;
}

SingleIndexModel single_index_fit(const Dataset& data, const FitOptions& fit_options,
                                  ThetaSearchOptions theta_options) {
  const SplitPlan plan = make_split(data.size(), fit_options.seed, fit_options.train_fraction);
  ThetaFit fit = estimate_theta(data.subset(plan.train), theta_options);
  ConformalModel model = project_and_fit(data, fit.theta, fit_options);
  return {std::move(model), std::move(fit)};
}

double theta_mse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size()) throw Error("theta_mse: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) s += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
  return s;
}

} // namespace objconf
