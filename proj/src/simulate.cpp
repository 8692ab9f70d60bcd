#include "objconf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "objconf/error.hpp"
#include "objconf/parallel.hpp"
#include "objconf/rng.hpp"
#include "objconf/transport.hpp"

namespace objconf {

namespace {

struct SettingName {
  Setting setting;
  const char* id;
};

constexpr SettingName kNames[] = {
    {Setting::S1, "1"},
    {Setting::S2, "2"},
    {Setting::S3, "3"},
    {Setting::S4, "4"},
    {Setting::S5, "5"},
    {Setting::S6, "6"},
    {Setting::S7, "7"},
    {Setting::S8, "8"},
    {Setting::S9, "9"},
    {Setting::FigSpider, "fig-spider"},
    {Setting::FigSphereBimodal, "fig-sphere-bimodal"},
    {Setting::FigWasserstein, "fig-wass"},
    {Setting::Fig2dMixture, "fig-2d-mixture"},
};

std::size_t covariate_dim(Setting s) {
  switch (s) {
  case Setting::S6:
  case Setting::S7:
  case Setting::S8:
    return 2;
  case Setting::S9:
    return 4;
  default:
    return 1;
  }
}

MetricSpace setting_space(Setting s) {
  switch (s) {
  case Setting::S4:
  case Setting::S9:
  case Setting::FigSphereBimodal:
    return MetricSpace::sphere2();
  case Setting::S5:
    return MetricSpace::wasserstein1d(100, 0.0, 1.0);
  case Setting::FigWasserstein:
    return MetricSpace::wasserstein1d(100, -3.0, 3.0);
  case Setting::FigSpider:
    return MetricSpace::spider3();
  case Setting::Fig2dMixture:
    return MetricSpace::euclidean(2);
  default:
    return MetricSpace::euclidean(1);
  }
}

Vec3 sphere_mean_curve(double t) {
  const double a = std::numbers::pi * t / 2.0;
  return {std::sin(a), std::cos(a), 0.0};
}

// Beta(2,2) CDF on the level grid, an element of the transport space.
QuantileGrid beta22_cdf(std::size_t m) {
  QuantileGrid g{quantile_levels(m)};
  for (double& u : g.values) u = u * u * (3.0 - 2.0 * u);
  return g;
}

} // namespace

ObjectPoint sample_response(Setting s, double t, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (s) {
  case Setting::S1:
  case Setting::S6:
    return EuclideanPoint{{regression_curve(t) + 0.1 * normal(rng)}};
  case Setting::S2:
  case Setting::S7: {
    const double sd = t <= 0.0 ? 0.5 : 0.1;
    return EuclideanPoint{{regression_curve(t) + sd * normal(rng)}};
  }
  case Setting::S3:
  case Setting::S8: {
    const double shift = unit(rng) < 0.5 ? branch_offset(t) : -0.2 * branch_offset(t);
    return EuclideanPoint{{regression_curve(t) + shift + 0.1 * normal(rng)}};
  }
  case Setting::S4:
  case Setting::S9: {
    const double eps = 0.5 * normal(rng);
    return SpherePoint{exp_map_sphere(sphere_mean_curve(t), {0.0, 0.0, eps})};
  }
  case Setting::S5: {
    const std::size_t m = 100;
    const QuantileGrid base =
        truncated_normal_quantiles(0.8 * regression_curve(t), 0.5, 0.0, 1.0, m);
    const double a = unit(rng) - 0.5;
    return transport_add(base, transport_scale(a, beta22_cdf(m)));
  }
  case Setting::FigSpider: {
    const double u = unit(rng);
    const double p1 = (1.0 + t) / 4.0;
    const double p2 = (1.0 - t) / 4.0;
    const int ray = u < p1 ? 1 : (u < p1 + p2 ? 2 : 3);
    const double length = std::abs(0.5 + 0.25 * t + 0.15 * normal(rng));
    return SpiderPoint{ray, length};
  }
  case Setting::FigSphereBimodal: {
    const double e1 = 0.2 * normal(rng);
    const double e2 = 0.2 * normal(rng);
    if (unit(rng) < 0.5) return SpherePoint{exp_map_sphere({1.0, 0.0, 0.0}, {0.0, e1, e2})};
    return SpherePoint{exp_map_sphere({0.0, 1.0, 0.0}, {e1, 0.0, e2})};
  }
  case Setting::FigWasserstein: {
    const double mu = -0.8 + 1.6 * unit(rng);
    const double sigma = 0.25 + 0.5 * unit(rng);
    return truncated_normal_quantiles(mu, sigma, -3.0, 3.0, 100);
  }
  case Setting::Fig2dMixture: {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    if (unit(rng) < 0.5) {
      // Cholesky factor of (0.5, -0.3; -0.3, 0.3)
      const double l11 = std::sqrt(0.5);
      const double l21 = -0.3 / l11;
      const double l22 = std::sqrt(0.3 - l21 * l21);
      return EuclideanPoint{{2.0 + l11 * z1, 2.0 + l21 * z1 + l22 * z2}};
    }
    return EuclideanPoint{{-2.0 + std::sqrt(0.5) * z1, -2.0 + std::sqrt(0.3) * z2}};
  }
  }
  throw Error("unknown setting");
}

Setting parse_setting(const std::string& id) {
  for (const auto& n : kNames) {
    if (id == n.id) return n.setting;
  }
  throw Error("unknown setting '" + id + "'");
}

std::string to_string(Setting setting) {
  for (const auto& n : kNames) {
    if (n.setting == setting) return n.id;
  }
  return "?";
}

double regression_curve(double x) { return (x - 1.0) * (x - 1.0) * (x + 1.0); }

double branch_offset(double x) { return x >= 0.0 ? 2.0 * std::sqrt(x) : 0.0; }

std::optional<std::vector<double>> true_index(Setting setting) {
  const std::size_t d = covariate_dim(setting);
  if (d < 2) return std::nullopt;
  std::vector<double> theta(d, 0.0);
  theta[0] = 1.0;
  return theta;
}

bool is_multivariate(Setting setting) { return covariate_dim(setting) > 1; }

Dataset generate(const GeneratorSpec& spec) {
  if (spec.n == 0) throw Error("generate needs n >= 1");
  Dataset data;
  data.space = setting_space(spec.setting);
  data.dim = covariate_dim(spec.setting);
  data.covariates.resize(spec.n * data.dim);
  data.objects.reserve(spec.n);
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> predictor(-1.0, 1.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t c = 0; c < data.dim; ++c) data.covariates[i * data.dim + c] = predictor(rng);
    // every index direction here is the first axis
    const double t = data.covariates[i * data.dim];
    data.objects.push_back(sample_response(spec.setting, t, rng));
  }
  return data;
}

std::optional<CandidateGrid> default_candidates(const Dataset& data, std::size_t resolution) {
  if (resolution == 0) throw Error("candidate resolution must be positive");
  const auto per_axis = [&] {
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(resolution)))));
  };
  switch (data.space.kind()) {
  case SpaceKind::Euclidean: {
    const std::size_t k = data.space.dim();
    if (k > 2) return std::nullopt;
    GridBounds bounds;
    for (std::size_t a = 0; a < k; ++a) {
      double lo = 0.0, hi = 0.0;
      bool first = true;
      for (const auto& p : data.objects) {
        const double v = std::get<EuclideanPoint>(p).coords[a];
        lo = first ? v : std::min(lo, v);
        hi = first ? v : std::max(hi, v);
        first = false;
      }
      const double pad = 0.1 * std::max(hi - lo, 1e-6);
      bounds.ranges.emplace_back(lo - pad, hi + pad);
    }
    return candidate_grid(data.space, k == 1 ? resolution : per_axis(), bounds);
  }
  case SpaceKind::Sphere2:
  case SpaceKind::Wasserstein1D:
    return candidate_grid(data.space, per_axis());
  default:
    return std::nullopt;
  }
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

namespace {

template <class F>
Summary summarize_runs(const std::vector<RunResult>& runs, F field) {
  std::vector<double> values;
  for (const auto& r : runs) {
    if (!r.ok) continue;
    if (const std::optional<double> v = field(r)) values.push_back(*v);
  }
  return summarize(values);
}

std::vector<std::optional<double>> bin_means(const std::vector<RunResult>& runs, std::size_t bins,
                                             bool sizes) {
  std::vector<double> total(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const auto& r : runs) {
    if (!r.ok) continue;
    const auto& column = sizes ? r.bin_size : r.bin_coverage;
    for (std::size_t b = 0; b < std::min(bins, column.size()); ++b) {
      if (!column[b]) continue;
      total[b] += *column[b];
      ++count[b];
    }
  }
  std::vector<std::optional<double>> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] > 0) out[b] = total[b] / static_cast<double>(count[b]);
  }
  return out;
}

} // namespace

Summary MonteCarloReport::coverage() const {
  return summarize_runs(runs, [](const RunResult& r) { return std::optional<double>(r.marginal_coverage); });
}

Summary MonteCarloReport::size() const {
  return summarize_runs(runs, [](const RunResult& r) { return r.mean_size; });
}

Summary MonteCarloReport::theta_mse() const {
  return summarize_runs(runs, [](const RunResult& r) { return r.theta_mse; });
}

std::vector<std::optional<double>> MonteCarloReport::bin_coverage() const {
  return bin_means(runs, bin_centers.size(), false);
}

std::vector<std::optional<double>> MonteCarloReport::bin_size() const {
  return bin_means(runs, bin_centers.size(), true);
}

MonteCarloReport run_monte_carlo(const GeneratorSpec& spec, const PipelineConfig& config,
                                 std::size_t n_runs) {
  if (n_runs == 0) throw Error("run_monte_carlo needs at least one run");
  const bool multivariate = is_multivariate(spec.setting);
  CoverageOptions coverage = config.coverage;
  if (!coverage.x_range && !multivariate) coverage.x_range = std::pair{-1.0, 1.0};

  MonteCarloReport report;
  report.spec = spec;
  report.n_runs = n_runs;
  report.runs.resize(n_runs);
  std::vector<std::vector<double>> centers(n_runs);

  parallel_for(n_runs, [&](std::size_t r) {
    RunResult& out = report.runs[r];
    out.run = r;
    out.seed = child_seed(spec.seed, r, 0);
    try {
      const Dataset data = generate({spec.setting, spec.n, out.seed});
      const Dataset test = generate({spec.setting, config.n_test, child_seed(spec.seed, r, 1)});
      FitOptions fit = config.fit;
      fit.seed = child_seed(spec.seed, r, 2);

      ConformalModel model;
      if (multivariate) {
        ThetaSearchOptions search = config.theta;
        search.seed = child_seed(spec.seed, r, 3);
        SingleIndexModel si = single_index_fit(data, fit, search);
        const auto truth = *true_index(spec.setting);
        if (config.theta_on_full_sample) {
          out.theta_mse = theta_mse(estimate_theta(data, search).theta.values(), truth);
        } else {
          out.theta_mse = theta_mse(si.fit.theta.values(), truth);
        }
        model = std::move(si.model);
      } else {
        model = split_fit(data, fit);
      }

      std::optional<CandidateGrid> grid;
      if (coverage.sets_per_bin > 0) grid = default_candidates(data, config.grid_resolution);
      const CoverageReport cov = evaluate_coverage(model, test, grid ? &*grid : nullptr, coverage);
      out.marginal_coverage = cov.marginal_coverage;
      out.mean_size = cov.mean_size;
      for (const auto& b : cov.bins) {
        out.bin_coverage.push_back(b.coverage);
        out.bin_size.push_back(b.mean_size);
        centers[r].push_back(b.center());
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
    }
  });

  for (std::size_t r = 0; r < n_runs; ++r) {
    if (!report.runs[r].ok) {
      ++report.failures;
    } else if (report.bin_centers.empty()) {
      report.bin_centers = centers[r];
    }
  }
  return report;
}

std::vector<SweepRow> bandwidth_sweep(const GeneratorSpec& spec,
                                      const std::vector<double>& bandwidths,
                                      const PipelineConfig& config, std::size_t n_runs) {
  std::vector<SweepRow> rows;
  rows.reserve(bandwidths.size());
  for (double h : bandwidths) {
    if (!(h > 0.0)) throw Error("bandwidths must be positive");
    PipelineConfig c = config;
    c.fit.bandwidth = h;
    rows.push_back({h, run_monte_carlo(spec, c, n_runs)});
  }
  return rows;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi >= lo)) throw Error("log_spaced needs 0 < lo <= hi");
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

} // namespace objconf
