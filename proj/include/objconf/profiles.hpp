#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "objconf/metric_space.hpp"

namespace objconf {

enum class KernelFamily { Epanechnikov, Triangular, Quartic };

std::string to_string(KernelFamily family);
KernelFamily parse_kernel(const std::string& name);

/// Symmetric density kernel supported on [-1, 1] with a bandwidth.
struct KernelSpec {
  KernelFamily family = KernelFamily::Epanechnikov;
  double bandwidth = 1.0;

  /// K(u); zero for |u| >= 1.
  double operator()(double u) const noexcept;
  bool operator==(const KernelSpec&) const = default;
};

/// h = scale * sd(x) * n^(-1/5).
double rule_of_thumb_bandwidth(std::span<const double> x, double scale = 1.0);

/// Uniform grid 0 = t_0 < ... < t_{n-1} = t_max for the profile argument.
struct TGrid {
  double t_max = 1.0;
  std::size_t size = 101;

  double step() const noexcept { return t_max / static_cast<double>(size - 1); }
  double node(std::size_t i) const noexcept { return step() * static_cast<double>(i); }
  /// t_max = 1.05 * max_distance (1 when every distance is zero).
  static TGrid covering(double max_distance, std::size_t size = 101);
  bool operator==(const TGrid&) const = default;
};

/// Sparse local-linear weights at x: the fitted intercept for responses r is
/// sum_i weight[i] * r[index[i]]. Only points with positive kernel mass are
/// listed.
struct LocalLinearWeights {
  double x = 0.0;
  std::vector<std::size_t> index;
  std::vector<double> weight;
  double bandwidth = 0.0;           // bandwidth actually used
  int widenings = 0;                // times the window was widened by 1.5
  bool nadaraya_watson = false;     // degenerate-design fallback was taken

  std::size_t support() const noexcept { return index.size(); }
  double sum() const noexcept;
  double apply(std::span<const double> responses) const;
};

/// Local-linear weights from the full design. Falls back to Nadaraya-Watson
/// weights when the local design variance is below 1e-10 (mu0 h)^2. Throws
/// NoLocalData if no covariate lies strictly inside the window.
LocalLinearWeights local_linear_weights(double x, std::span<const double> covariates,
                                        const KernelSpec& kernel);

/// Local-linear smoother over a fixed design, sorted once for fast windows.
/// Empty or single-point windows are widened geometrically (x1.5) until they
/// cover at least two points; the widening is reported in the weights.
class LocalLinearSmoother {
public:
  LocalLinearSmoother() = default;
  LocalLinearSmoother(std::vector<double> covariates, KernelSpec kernel);

  LocalLinearWeights weights(double x) const;
  const std::vector<double>& covariates() const noexcept { return covariates_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }

private:
  LocalLinearWeights window_weights(double x, double h) const;

  std::vector<double> covariates_;
  std::vector<double> sorted_;
  std::vector<std::size_t> order_;
  KernelSpec kernel_;
};

using ProfileCurve = std::vector<double>;

struct ProfileOptions {
  /// Running-maximum rearrangement of fitted profiles over t.
  bool monotone = false;
  bool operator==(const ProfileOptions&) const = default;
};

/// Training sample with its smoother and t-grid; everything needed to
/// estimate a conditional distance profile at any (omega, x).
class ProfileEstimator {
public:
  ProfileEstimator(MetricSpace space, std::vector<double> covariates,
                   std::vector<ObjectPoint> objects, KernelSpec kernel, TGrid grid,
                   ProfileOptions options = {});

  const MetricSpace& space() const noexcept { return space_; }
  const std::vector<double>& covariates() const noexcept { return smoother_.covariates(); }
  const std::vector<ObjectPoint>& objects() const noexcept { return objects_; }
  const KernelSpec& kernel() const noexcept { return smoother_.kernel(); }
  const TGrid& grid() const noexcept { return grid_; }
  const ProfileOptions& options() const noexcept { return options_; }
  const LocalLinearSmoother& smoother() const noexcept { return smoother_; }
  std::size_t size() const noexcept { return objects_.size(); }

  /// F(t) = local-linear fit of 1{d(omega, Y_j) <= t} at x, clipped to [0, 1].
  ProfileCurve profile(const ObjectPoint& omega, double x) const;
  ProfileCurve profile(const ObjectPoint& omega, const LocalLinearWeights& w) const;

private:
  MetricSpace space_;
  std::vector<ObjectPoint> objects_;
  LocalLinearSmoother smoother_;
  TGrid grid_;
  ProfileOptions options_;
};

ProfileCurve estimate_profile(const ProfileEstimator& estimator, const ObjectPoint& omega,
                              double x);

/// Trapezoid approximation of the integral of |F - G| over [0, t_max].
double w1_profile_distance(std::span<const double> f, std::span<const double> g,
                           const TGrid& grid);

/// Generalized inverse of a profile curve sampled on levels u_i = (i + 1/2)/levels,
/// by linear interpolation between grid nodes of its running maximum; flat
/// stretches resolve to the left end. Levels above the curve map to t_max.
std::vector<double> profile_quantiles(std::span<const double> curve, const TGrid& grid,
                                      std::size_t levels = 101);

struct FitDiagnostics {
  std::size_t widened_fits = 0;
  double max_bandwidth = 0.0;
};

/// Fitted per-training-point profiles F(Y_j, X_j) and costs C(Y_j | X_j).
/// Immutable after construction; safe for concurrent evaluation.
class ProfileTable {
public:
  /// Fits all n curves, then all n costs. O(n * window * n_t) work.
  static ProfileTable fit(ProfileEstimator estimator);
  /// Rebuilds a table from stored curves and costs (artifact reload).
  static ProfileTable from_parts(ProfileEstimator estimator, std::vector<ProfileCurve> curves,
                                 std::vector<double> costs, FitDiagnostics diagnostics = {});

  const ProfileEstimator& estimator() const noexcept { return estimator_; }
  const std::vector<ProfileCurve>& curves() const noexcept { return curves_; }
  const std::vector<double>& costs() const noexcept { return costs_; }
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  std::size_t size() const noexcept { return costs_.size(); }

  double cpc(const ObjectPoint& omega, const LocalLinearWeights& w) const;
  double cps(double z, const LocalLinearWeights& w) const;
  double transport_rank(const ObjectPoint& omega, const LocalLinearWeights& w) const;

private:
  ProfileTable(ProfileEstimator estimator) : estimator_(std::move(estimator)) {}
  void compute_quantile_means();

  ProfileEstimator estimator_;
  std::vector<ProfileCurve> curves_;
  std::vector<double> costs_;
  std::vector<double> quantile_means_;
  FitDiagnostics diagnostics_;
};

ProfileTable fit_profile_table(MetricSpace space, std::vector<double> covariates,
                               std::vector<ObjectPoint> objects, const KernelSpec& kernel,
                               const TGrid& grid, ProfileOptions options = {});

/// Local-linear fit at x of J_j = W1(F(omega, x), F(Y_j, X_j)), floored at 0.
double estimate_cpc(const ProfileTable& table, const ObjectPoint& omega, double x);

/// Local-linear fit at x of 1{C(Y_j | X_j) <= z}, made nondecreasing in z by a
/// running maximum and clipped to [0, 1].
double estimate_cps(const ProfileTable& table, double z, double x);

/// expit of the local-linear fit at x of the signed quantile integrals
/// int_0^1 {F^-1(Y_j, X_j)(u) - F^-1(omega, x)(u)} du.
double conditional_transport_rank(const ProfileTable& table, const ObjectPoint& omega,
                                  double x);

/// Largest pairwise distance among objects.
double max_pairwise_distance(const MetricSpace& space, std::span<const ObjectPoint> objects);

} // namespace objconf
