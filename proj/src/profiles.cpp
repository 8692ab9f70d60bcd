#include "objconf/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "objconf/error.hpp"
#include "objconf/parallel.hpp"

namespace objconf {

namespace {

constexpr int kMaxWidenings = 200;

// Local-linear weights from candidate window points (index, covariate).
LocalLinearWeights weights_from_window(double x, double h, const KernelSpec& kernel,
                                       std::span<const std::size_t> idx,
                                       std::span<const double> values) {
  LocalLinearWeights out;
  out.x = x;
  out.bandwidth = h;
  std::vector<double> k;
  std::vector<double> dx;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double d = values[i] - x;
    const double kv = kernel(d / h);
    if (kv <= 0.0) continue;
    out.index.push_back(idx[i]);
    k.push_back(kv);
    dx.push_back(d);
    s0 += kv;
    s1 += kv * d;
    s2 += kv * d * d;
  }
  if (out.index.empty()) throw NoLocalData(x);

  const double sigma2 = s2 * s0 - s1 * s1;
  out.weight.resize(k.size());
  if (sigma2 < 1e-10 * (s0 * h) * (s0 * h)) {
    out.nadaraya_watson = true;
    for (std::size_t i = 0; i < k.size(); ++i) out.weight[i] = k[i] / s0;
  } else {
    for (std::size_t i = 0; i < k.size(); ++i) out.weight[i] = k[i] * (s2 - s1 * dx[i]) / sigma2;
  }
  return out;
}

double expit(double v) { return 1.0 / (1.0 + std::exp(-v)); }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
  case KernelFamily::Epanechnikov: return "epanechnikov";
  case KernelFamily::Triangular: return "triangular";
  case KernelFamily::Quartic: return "quartic";
  }
  return "epanechnikov";
}

KernelFamily parse_kernel(const std::string& name) {
  if (name == "epanechnikov") return KernelFamily::Epanechnikov;
  if (name == "triangular") return KernelFamily::Triangular;
  if (name == "quartic") return KernelFamily::Quartic;
  throw Error("unknown kernel '" + name + "'");
}

double KernelSpec::operator()(double u) const noexcept {
  const double a = std::abs(u);
  if (!(a < 1.0)) return 0.0;
  switch (family) {
  case KernelFamily::Epanechnikov: return 0.75 * (1.0 - u * u);
  case KernelFamily::Triangular: return 1.0 - a;
  case KernelFamily::Quartic: {
    const double b = 1.0 - u * u;
    return 0.9375 * b * b;
  }
  }
  return 0.0;
}

double rule_of_thumb_bandwidth(std::span<const double> x, double scale) {
  const std::size_t n = x.size();
  if (n < 2) throw Error("bandwidth rule needs at least two covariates");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) sd = 1.0;  // constant design: any window covers every point
  return scale * sd * std::pow(static_cast<double>(n), -0.2);
}

TGrid TGrid::covering(double max_distance, std::size_t size) {
  if (size < 2) throw Error("t-grid needs at least two nodes");
  return TGrid{max_distance > 0.0 ? 1.05 * max_distance : 1.0, size};
}

double LocalLinearWeights::sum() const noexcept {
  return std::accumulate(weight.begin(), weight.end(), 0.0);
}

double LocalLinearWeights::apply(std::span<const double> responses) const {
  double s = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) s += weight[i] * responses[index[i]];
  return s;
}

LocalLinearWeights local_linear_weights(double x, std::span<const double> covariates,
                                        const KernelSpec& kernel) {
  if (!(kernel.bandwidth > 0.0)) throw Error("bandwidth must be positive");
  std::vector<std::size_t> idx(covariates.size());
  std::iota(idx.begin(), idx.end(), 0);
  return weights_from_window(x, kernel.bandwidth, kernel, idx, covariates);
}

LocalLinearSmoother::LocalLinearSmoother(std::vector<double> covariates, KernelSpec kernel)
    : covariates_(std::move(covariates)), kernel_(kernel) {
  if (!(kernel_.bandwidth > 0.0)) throw Error("bandwidth must be positive");
  order_.resize(covariates_.size());
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return covariates_[a] < covariates_[b]; });
  sorted_.resize(order_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) sorted_[i] = covariates_[order_[i]];
}

LocalLinearWeights LocalLinearSmoother::window_weights(double x, double h) const {
  const auto lo = std::upper_bound(sorted_.begin(), sorted_.end(), x - h) - sorted_.begin();
  const auto hi = std::lower_bound(sorted_.begin(), sorted_.end(), x + h) - sorted_.begin();
  if (hi <= lo) throw NoLocalData(x);
  return weights_from_window(x, h, kernel_,
                             std::span<const std::size_t>(order_).subspan(lo, hi - lo),
                             std::span<const double>(sorted_).subspan(lo, hi - lo));
}

LocalLinearWeights LocalLinearSmoother::weights(double x) const {
  if (covariates_.size() < 2) throw NoLocalData(x);
  double h = kernel_.bandwidth;
  for (int widen = 0; widen <= kMaxWidenings; ++widen) {
    try {
      LocalLinearWeights w = window_weights(x, h);
      if (w.support() >= 2) {
        w.widenings = widen;
        return w;
      }
    } catch (const NoLocalData&) {
    }
    h *= 1.5;
  }
  throw NoLocalData(x);
}

ProfileEstimator::ProfileEstimator(MetricSpace space, std::vector<double> covariates,
                                   std::vector<ObjectPoint> objects, KernelSpec kernel,
                                   TGrid grid, ProfileOptions options)
    : space_(std::move(space)),
      objects_(std::move(objects)),
      smoother_(std::move(covariates), kernel),
      grid_(grid),
      options_(options) {
  if (smoother_.covariates().size() != objects_.size()) {
    throw Error("profile estimator: covariate and object counts differ");
  }
  if (grid_.size < 2 || !(grid_.t_max > 0.0)) throw Error("profile estimator: invalid t-grid");
}

ProfileCurve ProfileEstimator::profile(const ObjectPoint& omega, double x) const {
  return profile(omega, smoother_.weights(x));
}

ProfileCurve ProfileEstimator::profile(const ObjectPoint& omega,
                                       const LocalLinearWeights& w) const {
  const std::size_t k = w.support();
  std::vector<std::pair<double, double>> dw(k);
  for (std::size_t i = 0; i < k; ++i) {
    dw[i] = {space_.distance(omega, objects_[w.index[i]]), w.weight[i]};
  }
  std::sort(dw.begin(), dw.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  ProfileCurve curve(grid_.size);
  double cum = 0.0;
  std::size_t p = 0;
  for (std::size_t i = 0; i < grid_.size; ++i) {
    const double t = grid_.node(i);
    while (p < k && dw[p].first <= t) cum += dw[p++].second;
    curve[i] = std::clamp(cum, 0.0, 1.0);
  }
  if (options_.monotone) {
    for (std::size_t i = 1; i < curve.size(); ++i) curve[i] = std::max(curve[i], curve[i - 1]);
  }
  return curve;
}

ProfileCurve estimate_profile(const ProfileEstimator& estimator, const ObjectPoint& omega,
                              double x) {
  return estimator.profile(omega, x);
}

double w1_profile_distance(std::span<const double> f, std::span<const double> g,
                           const TGrid& grid) {
  if (f.size() != grid.size || g.size() != grid.size) {
    throw Error("w1_profile_distance: curves do not match the t-grid");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i] - g[i]);
  s -= 0.5 * (std::abs(f.front() - g.front()) + std::abs(f.back() - g.back()));
  return s * grid.step();
}

std::vector<double> profile_quantiles(std::span<const double> curve, const TGrid& grid,
                                      std::size_t levels) {
  std::vector<double> m(curve.begin(), curve.end());
  for (std::size_t i = 1; i < m.size(); ++i) m[i] = std::max(m[i], m[i - 1]);
  std::vector<double> q(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    const double u = (static_cast<double>(l) + 0.5) / static_cast<double>(levels);
    const auto it = std::lower_bound(m.begin(), m.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - m.begin());
    if (i == 0) {
      q[l] = 0.0;
    } else if (i == m.size()) {
      q[l] = grid.t_max;
    } else {
      q[l] = grid.node(i - 1) + (u - m[i - 1]) / (m[i] - m[i - 1]) * grid.step();
    }
  }
  return q;
}

ProfileTable ProfileTable::fit(ProfileEstimator estimator) {
  const std::size_t n = estimator.size();
  if (n < 2) throw Error("profile table needs at least two training pairs");
  ProfileTable table(std::move(estimator));
  const ProfileEstimator& est = table.estimator_;
  const TGrid& grid = est.grid();

  std::vector<LocalLinearWeights> weights(n);
  table.curves_.resize(n);
  parallel_for(n, [&](std::size_t j) {
    weights[j] = est.smoother().weights(est.covariates()[j]);
    table.curves_[j] = est.profile(est.objects()[j], weights[j]);
  });

  table.costs_.resize(n);
  parallel_for(n, [&](std::size_t j) {
    const LocalLinearWeights& w = weights[j];
    double c = 0.0;
    for (std::size_t i = 0; i < w.support(); ++i) {
      c += w.weight[i] * w1_profile_distance(table.curves_[j], table.curves_[w.index[i]], grid);
    }
    table.costs_[j] = std::max(0.0, c);
  });

  for (const auto& w : weights) {
    if (w.widenings > 0) ++table.diagnostics_.widened_fits;
    table.diagnostics_.max_bandwidth = std::max(table.diagnostics_.max_bandwidth, w.bandwidth);
  }
  table.compute_quantile_means();
  return table;
}

ProfileTable ProfileTable::from_parts(ProfileEstimator estimator, std::vector<ProfileCurve> curves,
                                      std::vector<double> costs, FitDiagnostics diagnostics) {
  const std::size_t n = estimator.size();
  if (curves.size() != n || costs.size() != n) throw Error("profile table parts have wrong size");
  for (const auto& c : curves) {
    if (c.size() != estimator.grid().size) throw Error("profile curve length differs from t-grid");
    for (double v : c)
      if (!(v >= 0.0 && v <= 1.0)) throw Error("profile value outside [0, 1]");
  }
  for (double c : costs)
    if (!(c >= 0.0)) throw Error("negative profile cost");
  ProfileTable table(std::move(estimator));
  table.curves_ = std::move(curves);
  table.costs_ = std::move(costs);
  table.diagnostics_ = diagnostics;
  table.compute_quantile_means();
  return table;
}

void ProfileTable::compute_quantile_means() {
  quantile_means_.resize(curves_.size());
  for (std::size_t j = 0; j < curves_.size(); ++j) {
    quantile_means_[j] = mean_of(profile_quantiles(curves_[j], estimator_.grid()));
  }
}

double ProfileTable::cpc(const ObjectPoint& omega, const LocalLinearWeights& w) const {
  const ProfileCurve f = estimator_.profile(omega, w);
  double c = 0.0;
  for (std::size_t i = 0; i < w.support(); ++i) {
    c += w.weight[i] * w1_profile_distance(f, curves_[w.index[i]], estimator_.grid());
  }
  return std::max(0.0, c);
}

double ProfileTable::cps(double z, const LocalLinearWeights& w) const {
  // running maximum over z of the raw fit; negative weights can make it dip
  std::vector<std::pair<double, double>> cw;
  cw.reserve(w.support());
  for (std::size_t i = 0; i < w.support(); ++i) {
    if (costs_[w.index[i]] <= z) cw.emplace_back(costs_[w.index[i]], w.weight[i]);
  }
  std::sort(cw.begin(), cw.end());
  double s = 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < cw.size(); ++i) {
    s += cw[i].second;
    if (i + 1 == cw.size() || cw[i + 1].first > cw[i].first) best = std::max(best, s);
  }
  return std::clamp(best, 0.0, 1.0);
}

double ProfileTable::transport_rank(const ObjectPoint& omega, const LocalLinearWeights& w) const {
  const double own = mean_of(profile_quantiles(estimator_.profile(omega, w), estimator_.grid()));
  double h = 0.0;
  for (std::size_t i = 0; i < w.support(); ++i) {
    h += w.weight[i] * (quantile_means_[w.index[i]] - own);
  }
  return expit(h);
}

ProfileTable fit_profile_table(MetricSpace space, std::vector<double> covariates,
                               std::vector<ObjectPoint> objects, const KernelSpec& kernel,
                               const TGrid& grid, ProfileOptions options) {
  return ProfileTable::fit(ProfileEstimator(std::move(space), std::move(covariates),
                                            std::move(objects), kernel, grid, options));
}

double estimate_cpc(const ProfileTable& table, const ObjectPoint& omega, double x) {
  return table.cpc(omega, table.estimator().smoother().weights(x));
}

double estimate_cps(const ProfileTable& table, double z, double x) {
  return table.cps(z, table.estimator().smoother().weights(x));
}

double conditional_transport_rank(const ProfileTable& table, const ObjectPoint& omega,
                                  double x) {
  return table.transport_rank(omega, table.estimator().smoother().weights(x));
}

double max_pairwise_distance(const MetricSpace& space, std::span<const ObjectPoint> objects) {
  double best = 0.0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      best = std::max(best, space.distance(objects[i], objects[j]));
    }
  }
  return best;
}

} // namespace objconf
