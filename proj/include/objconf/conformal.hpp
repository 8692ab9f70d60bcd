#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "objconf/dataset.hpp"
#include "objconf/metric_space.hpp"
#include "objconf/profiles.hpp"

namespace objconf {

/// Disjoint training/calibration index sets covering 0..n-1, both ascending.
struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> calibration;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  bool operator==(const SplitPlan&) const = default;
};

/// Random split of n indices; floor(n * train_fraction) go to training.
/// Deterministic in (n, seed, train_fraction).
SplitPlan make_split(std::size_t n, std::uint64_t seed, double train_fraction = 0.5);

/// Parses "a:b" (training:calibration) into a training fraction.
double parse_split_ratio(const std::string& ratio);

enum class ScoreKind {
  ProfileScore,   // S(C(y | x) | x)
  TransportRank,  // 1 - expit(transport rank)
};

std::string to_string(ScoreKind kind);
ScoreKind parse_score(const std::string& name);

struct FitOptions {
  KernelFamily kernel = KernelFamily::Epanechnikov;
  /// Fixed bandwidth; empty means scale * sd(x) * n^(-1/5) on the training half.
  std::optional<double> bandwidth;
  double bandwidth_scale = 1.0;
  std::size_t tgrid_size = 101;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  ScoreKind score = ScoreKind::ProfileScore;
  ProfileOptions profile;
};

/// Index k = ceil((1 - alpha)(n_cal + 1)) of the calibration order statistic.
std::size_t conformal_rank(std::size_t n_cal, double alpha);

/// k-th smallest score, or +infinity when k > n_cal.
double conformal_threshold(std::span<const double> scores, double alpha);

/// Training-half profile table plus calibrated threshold. Immutable; the
/// table is shared between copies.
struct ConformalModel {
  std::shared_ptr<const ProfileTable> table;
  std::vector<double> calibration_scores;
  double threshold = 0.0;
  double alpha = 0.1;
  ScoreKind score = ScoreKind::ProfileScore;
  SplitPlan plan;
  /// Single-index direction; when present, covariates are projected on it.
  std::optional<std::vector<double>> theta;

  /// Nonconformity score of object y at scalar (or projected) covariate x.
  double score_object(const ObjectPoint& y, double x) const;
  double score_object(const ObjectPoint& y, const LocalLinearWeights& w) const;
  /// Scalar covariate of a raw covariate row (projects when theta is set).
  double reduce_covariate(std::span<const double> x) const;
};

/// Split-conformal calibration of the chosen score on a scalar-covariate
/// dataset.
ConformalModel split_fit(const Dataset& data, const FitOptions& options);

/// Same model recalibrated to another level (no refit).
ConformalModel with_alpha(const ConformalModel& model, double alpha);

struct PredictionSet {
  double x = 0.0;
  double threshold = 0.0;
  std::vector<ObjectPoint> candidates;
  std::vector<double> scores;
  std::vector<bool> member;
  std::vector<double> cell_measure;

  std::size_t count() const;
  /// Sum of cell measures over members (length for R, solid angle for S^2).
  double measure() const;
  /// Maximal runs of consecutive members in candidate order.
  std::size_t member_runs() const;
};

PredictionSet predict_set(const ConformalModel& model, double x, const CandidateGrid& candidates);

/// Prediction set of a TransportRank model at level alpha.
PredictionSet rank_based_set(const ConformalModel& rank_model, double x,
                             const CandidateGrid& candidates, double alpha);

struct CoverageOptions {
  std::size_t n_bins = 20;
  /// Test points per bin at which a full prediction set is computed for the
  /// size curve; 0 skips sizes.
  std::size_t sets_per_bin = 5;
  /// Covariate range for the bins; defaults to the test range.
  std::optional<std::pair<double, double>> x_range;
};

struct CoverageBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n = 0;
  std::optional<double> coverage;
  std::optional<double> mean_size;
  double center() const noexcept { return 0.5 * (lo + hi); }
};

struct CoverageReport {
  std::size_t n_test = 0;
  double marginal_coverage = 0.0;
  std::optional<double> mean_size;
  std::vector<CoverageBin> bins;
};

/// Coverage of test pairs (each test object is scored directly) overall and
/// per equal-width covariate bin, plus mean set size per bin over the given
/// candidates. Empty bins have no coverage value.
CoverageReport evaluate_coverage(const ConformalModel& model, const Dataset& test,
                                 const CandidateGrid* candidates,
                                 const CoverageOptions& options = {});

} // namespace objconf
