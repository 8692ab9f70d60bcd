#include "objconf/conformal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "objconf/error.hpp"
#include "objconf/parallel.hpp"
#include "objconf/rng.hpp"

namespace objconf {

SplitPlan make_split(std::size_t n, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
  if (n_train < 2 || n_train >= n) throw Error("split leaves an empty or tiny half");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = train_fraction;
  plan.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  plan.calibration.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(plan.train.begin(), plan.train.end());
  std::sort(plan.calibration.begin(), plan.calibration.end());
  return plan;
}

double parse_split_ratio(const std::string& ratio) {
  const auto colon = ratio.find(':');
  if (colon == std::string::npos) throw Error("split ratio must look like 'a:b'");
  double a = 0.0, b = 0.0;
  const char* s = ratio.data();
  const auto ra = std::from_chars(s, s + colon, a);
  const auto rb = std::from_chars(s + colon + 1, s + ratio.size(), b);
  if (ra.ec != std::errc{} || rb.ec != std::errc{} || ra.ptr != s + colon ||
      rb.ptr != s + ratio.size() || !(a > 0.0) || !(b > 0.0)) {
    throw Error("invalid split ratio '" + ratio + "'");
  }
  return a / (a + b);
}

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::ProfileScore ? "cps" : "rank";
}

ScoreKind parse_score(const std::string& name) {
  if (name == "cps") return ScoreKind::ProfileScore;
  if (name == "rank") return ScoreKind::TransportRank;
  throw Error("unknown score '" + name + "'");
}

std::size_t conformal_rank(std::size_t n_cal, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must lie in (0, 1)");
  // The small offset keeps exact products such as 0.9 * 10 from rounding up.
  const double level = (1.0 - alpha) * static_cast<double>(n_cal + 1);
  return static_cast<std::size_t>(std::ceil(level - 1e-9));
}

double conformal_threshold(std::span<const double> scores, double alpha) {
  const std::size_t k = conformal_rank(scores.size(), alpha);
  if (k > scores.size()) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[k == 0 ? 0 : k - 1];
}

double ConformalModel::score_object(const ObjectPoint& y, const LocalLinearWeights& w) const {
  if (score == ScoreKind::TransportRank) return 1.0 - table->transport_rank(y, w);
  return table->cps(table->cpc(y, w), w);
}

double ConformalModel::score_object(const ObjectPoint& y, double x) const {
  return score_object(y, table->estimator().smoother().weights(x));
}

double ConformalModel::reduce_covariate(std::span<const double> x) const {
  if (theta) {
    if (x.size() != theta->size()) throw Error("covariate dimension differs from the index");
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += x[c] * (*theta)[c];
    return s;
  }
  if (x.size() != 1) throw Error("scalar model needs one covariate");
  return x[0];
}

ConformalModel split_fit(const Dataset& data, const FitOptions& options) {
  const std::size_t n = data.size();
  if (n < 4) throw Error("split_fit needs at least four observations");
  if (data.dim != 1) throw Error("split_fit needs scalar covariates; use the single-index pipeline");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error("alpha must lie in (0, 1)");

  ConformalModel model;
  model.alpha = options.alpha;
  model.score = options.score;
  model.plan = make_split(n, options.seed, options.train_fraction);

  const Dataset train = data.subset(model.plan.train);
  std::vector<double> x_train = train.scalar_covariates();
  const double h = options.bandwidth ? *options.bandwidth
                                     : rule_of_thumb_bandwidth(x_train, options.bandwidth_scale);
  if (!(h > 0.0)) throw Error("bandwidth must be positive");
  const TGrid grid =
      TGrid::covering(max_pairwise_distance(data.space, train.objects), options.tgrid_size);
  model.table = std::make_shared<const ProfileTable>(ProfileTable::fit(
      ProfileEstimator(data.space, std::move(x_train), train.objects,
                       KernelSpec{options.kernel, h}, grid, options.profile)));

  const auto& cal = model.plan.calibration;
  model.calibration_scores.resize(cal.size());
  parallel_for(cal.size(), [&](std::size_t i) {
    const std::size_t row = cal[i];
    try {
      model.calibration_scores[i] = model.score_object(data.objects[row], data.covariates[row]);
    } catch (const Error& e) {
      throw Error("calibration index " + std::to_string(row) + ": " + e.what());
    }
  });
  model.threshold = conformal_threshold(model.calibration_scores, model.alpha);
  return model;
}

ConformalModel with_alpha(const ConformalModel& model, double alpha) {
  ConformalModel out = model;
  out.alpha = alpha;
  out.threshold = conformal_threshold(out.calibration_scores, alpha);
  return out;
}

std::size_t PredictionSet::count() const {
  return static_cast<std::size_t>(std::count(member.begin(), member.end(), true));
}

double PredictionSet::measure() const {
  double s = 0.0;
  for (std::size_t i = 0; i < member.size(); ++i) {
    if (member[i]) s += i < cell_measure.size() ? cell_measure[i] : 1.0;
  }
  return s;
}

std::size_t PredictionSet::member_runs() const {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < member.size(); ++i) {
    if (member[i] && (i == 0 || !member[i - 1])) ++runs;
  }
  return runs;
}

PredictionSet predict_set(const ConformalModel& model, double x, const CandidateGrid& candidates) {
  if (candidates.points.empty()) throw Error("predict_set needs at least one candidate");
  const LocalLinearWeights w = model.table->estimator().smoother().weights(x);
  PredictionSet set;
  set.x = x;
  set.threshold = model.threshold;
  set.candidates = candidates.points;
  set.cell_measure = candidates.cell_measure;
  set.scores.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    set.scores[i] = model.score_object(candidates.points[i], w);
  });
  set.member.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    set.member[i] = set.scores[i] <= model.threshold;
  }
  return set;
}

PredictionSet rank_based_set(const ConformalModel& rank_model, double x,
                             const CandidateGrid& candidates, double alpha) {
  if (rank_model.score != ScoreKind::TransportRank) {
    throw Error("rank_based_set needs a model calibrated on transport ranks");
  }
  return predict_set(with_alpha(rank_model, alpha), x, candidates);
}

CoverageReport evaluate_coverage(const ConformalModel& model, const Dataset& test,
                                 const CandidateGrid* candidates, const CoverageOptions& options) {
  const std::size_t n = test.size();
  if (n == 0) throw Error("evaluate_coverage needs a nonempty test set");
  if (options.n_bins == 0) throw Error("evaluate_coverage needs at least one bin");

  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = model.reduce_covariate(test.covariate(i));
  std::vector<char> covered(n, 0);
  parallel_for(n, [&](std::size_t i) {
    covered[i] = model.score_object(test.objects[i], xs[i]) <= model.threshold ? 1 : 0;
  });

  CoverageReport report;
  report.n_test = n;
  report.marginal_coverage =
      static_cast<double>(std::count(covered.begin(), covered.end(), 1)) / static_cast<double>(n);

  auto [lo, hi] = options.x_range
                      ? *options.x_range
                      : std::pair{*std::min_element(xs.begin(), xs.end()),
                                  *std::max_element(xs.begin(), xs.end())};
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(options.n_bins);
  report.bins.resize(options.n_bins);
  for (std::size_t b = 0; b < options.n_bins; ++b) {
    report.bins[b].lo = lo + width * static_cast<double>(b);
    report.bins[b].hi = b + 1 == options.n_bins ? hi : lo + width * static_cast<double>(b + 1);
  }

  std::vector<std::size_t> hits(options.n_bins, 0);
  std::vector<std::vector<std::size_t>> size_rows(options.n_bins);
  for (std::size_t i = 0; i < n; ++i) {
    if (xs[i] < lo || xs[i] > hi) continue;
    const auto b = std::min(static_cast<std::size_t>((xs[i] - lo) / width), options.n_bins - 1);
    ++report.bins[b].n;
    hits[b] += static_cast<std::size_t>(covered[i]);
    if (size_rows[b].size() < options.sets_per_bin) size_rows[b].push_back(i);
  }
  for (std::size_t b = 0; b < options.n_bins; ++b) {
    if (report.bins[b].n > 0) {
      report.bins[b].coverage =
          static_cast<double>(hits[b]) / static_cast<double>(report.bins[b].n);
    }
  }

  if (candidates != nullptr && options.sets_per_bin > 0) {
    double total = 0.0;
    std::size_t sets = 0;
    for (std::size_t b = 0; b < options.n_bins; ++b) {
      if (size_rows[b].empty()) continue;
      double s = 0.0;
      for (std::size_t i : size_rows[b]) s += predict_set(model, xs[i], *candidates).measure();
      report.bins[b].mean_size = s / static_cast<double>(size_rows[b].size());
      total += s;
      sets += size_rows[b].size();
    }
    if (sets > 0) report.mean_size = total / static_cast<double>(sets);
  }
  return report;
}

} // namespace objconf
