#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace objconf {

enum class SpaceKind { Euclidean, Sphere2, Wasserstein1D, Network, Spider3 };

struct EuclideanPoint {
  std::vector<double> coords;
  bool operator==(const EuclideanPoint&) const = default;
};

/// Unit vector in R^3.
struct SpherePoint {
  std::array<double, 3> v{};
  bool operator==(const SpherePoint&) const = default;
};

/// Quantile function sampled on the midpoint levels u_j = (j - 1/2) / m.
struct QuantileGrid {
  std::vector<double> values;
  bool operator==(const QuantileGrid&) const = default;
};

/// k x k weighted adjacency matrix, row-major, entries in [0, 1].
struct NetworkPoint {
  std::vector<double> entries;
  bool operator==(const NetworkPoint&) const = default;
};

/// Point of the 3-spider (tree space with three leaves): a ray in {1, 2, 3}
/// and a distance from the origin.
struct SpiderPoint {
  int ray = 1;
  double length = 0.0;
  bool operator==(const SpiderPoint&) const = default;
};

using ObjectPoint =
    std::variant<EuclideanPoint, SpherePoint, QuantileGrid, NetworkPoint, SpiderPoint>;

using Vec3 = std::array<double, 3>;

/// Pluggable object space. Immutable value; cheap to copy.
class MetricSpace {
public:
  static MetricSpace euclidean(std::size_t k);
  static MetricSpace sphere2();
  /// Distributions on [lo, hi] represented by m quantile values.
  static MetricSpace wasserstein1d(std::size_t m = 100, double lo = 0.0, double hi = 1.0);
  static MetricSpace network(std::size_t k);
  static MetricSpace spider3();

  SpaceKind kind() const noexcept { return kind_; }
  /// k for Euclidean/Network, m for Wasserstein1D, 3 for Sphere2, 0 for Spider3.
  std::size_t dim() const noexcept { return dim_; }
  double support_lo() const noexcept { return lo_; }
  double support_hi() const noexcept { return hi_; }
  bool has_mean() const noexcept { return kind_ != SpaceKind::Spider3; }
  bool has_grid() const noexcept {
    return kind_ != SpaceKind::Spider3 && kind_ != SpaceKind::Network;
  }
  /// Number of reals in the flat encoding of one point.
  std::size_t encoded_width() const noexcept;
  std::string name() const;

  /// Throws InvalidPoint when p is not a valid point of this space.
  void validate(const ObjectPoint& p) const;

  double distance(const ObjectPoint& a, const ObjectPoint& b) const;

  /// Weighted Fréchet mean. Weights must sum to 1 and may be negative
  /// (local-linear weights). Throws Error if the space has no mean and
  /// ConvergenceError if the sphere iteration does not settle.
  ObjectPoint frechet_mean(std::span<const ObjectPoint> points,
                           std::span<const double> weights) const;
  /// Same, over points[indices[i]] with weights[i].
  ObjectPoint frechet_mean(std::span<const ObjectPoint> points,
                           std::span<const std::size_t> indices,
                           std::span<const double> weights) const;

  /// Flat real encoding used by dataset files and artifacts.
  std::vector<double> encode(const ObjectPoint& p) const;
  ObjectPoint decode(std::span<const double> values) const;

  bool operator==(const MetricSpace&) const = default;

private:
  MetricSpace(SpaceKind kind, std::size_t dim, double lo, double hi)
      : kind_(kind), dim_(dim), lo_(lo), hi_(hi) {}

  SpaceKind kind_;
  std::size_t dim_;
  double lo_;
  double hi_;
};

double geodesic_distance(const Vec3& p, const Vec3& q);

/// Riemannian exponential map of the unit sphere at p.
Vec3 exp_map_sphere(const Vec3& p, const Vec3& v);

/// Inverse of exp_map_sphere; throws InvalidPoint for (near) antipodal input.
Vec3 log_map_sphere(const Vec3& p, const Vec3& q);

/// Deterministic candidate set with a per-candidate cell measure used for
/// prediction-set sizes (cell length/area, solid angle, or 1 for counts).
struct CandidateGrid {
  std::vector<ObjectPoint> points;
  std::vector<double> cell_measure;

  std::size_t size() const noexcept { return points.size(); }
  /// Wraps a user-supplied list; every cell has measure 1.
  static CandidateGrid from_points(std::vector<ObjectPoint> points);
};

/// Space-specific extent of a candidate grid.
///  Euclidean: one (lo, hi) per axis, or a single range reused for all axes.
///  Wasserstein1D: {(mu_lo, mu_hi), (sigma_lo, sigma_hi)} of a truncated
///  normal family on the space's support.
///  Sphere2: ignored.
struct GridBounds {
  std::vector<std::pair<double, double>> ranges;
};

CandidateGrid candidate_grid(const MetricSpace& space, std::size_t resolution,
                             const GridBounds& bounds = {});

} // namespace objconf
