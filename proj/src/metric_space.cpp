#include "objconf/metric_space.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "objconf/error.hpp"
#include "objconf/transport.hpp"

namespace objconf {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kWeightSumTolerance = 1e-8;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n, a[2] / n};
}

const char* alternative_name(const ObjectPoint& p) {
  switch (p.index()) {
  case 0: return "euclidean";
  case 1: return "sphere2";
  case 2: return "wasserstein1d";
  case 3: return "network";
  default: return "spider3";
  }
}

template <class T>
const T& expect(const MetricSpace& space, const ObjectPoint& p) {
  const T* v = std::get_if<T>(&p);
  if (v == nullptr) {
    throw InvalidPoint("point of kind " + std::string(alternative_name(p)) +
                       " used with space " + space.name());
  }
  return *v;
}

void check_weights(std::span<const double> weights, std::size_t count) {
  if (weights.size() != count) throw Error("frechet_mean: weight count mismatch");
  if (count == 0) throw Error("frechet_mean: no points");
  double sum = 0.0;
  bool positive = false;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error("frechet_mean: non-finite weight");
    sum += w;
    positive = positive || w > 0.0;
  }
  if (!positive) throw Error("frechet_mean: no positive weight");
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw Error("frechet_mean: weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

// Index of the only nonzero weight, or npos.
std::size_t single_support(std::span<const double> weights) {
  std::size_t found = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] != 0.0) {
      if (found != weights.size()) return weights.size();
      found = i;
    }
  }
  return found;
}

Vec3 sphere_mean(std::span<const ObjectPoint> points, std::span<const std::size_t> idx,
                 std::span<const double> w) {
  Vec3 chord{0.0, 0.0, 0.0};
  std::size_t heaviest = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const Vec3& y = std::get<SpherePoint>(points[idx[i]]).v;
    for (int c = 0; c < 3; ++c) chord[c] += w[i] * y[c];
    if (w[i] > w[heaviest]) heaviest = i;
  }
  Vec3 p = norm(chord) > 1e-12 ? normalized(chord)
                                : std::get<SpherePoint>(points[idx[heaviest]]).v;
  for (int iter = 0; iter < 100; ++iter) {
    Vec3 step{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Vec3 v = log_map_sphere(p, std::get<SpherePoint>(points[idx[i]]).v);
      for (int c = 0; c < 3; ++c) step[c] += w[i] * v[c];
    }
    if (norm(step) < 1e-9) return p;
    p = normalized(exp_map_sphere(p, step));
  }
  throw ConvergenceError("sphere Fréchet mean did not converge in 100 iterations");
}

} // namespace

MetricSpace MetricSpace::euclidean(std::size_t k) {
  if (k == 0) throw Error("euclidean space needs k >= 1");
  return {SpaceKind::Euclidean, k, 0.0, 0.0};
}

MetricSpace MetricSpace::sphere2() { return {SpaceKind::Sphere2, 3, 0.0, 0.0}; }

MetricSpace MetricSpace::wasserstein1d(std::size_t m, double lo, double hi) {
  if (m < 2) throw Error("wasserstein1d needs m >= 2");
  if (!(lo < hi)) throw Error("wasserstein1d support must satisfy lo < hi");
  return {SpaceKind::Wasserstein1D, m, lo, hi};
}

MetricSpace MetricSpace::network(std::size_t k) {
  if (k == 0) throw Error("network space needs k >= 1");
  return {SpaceKind::Network, k, 0.0, 1.0};
}

MetricSpace MetricSpace::spider3() { return {SpaceKind::Spider3, 0, 0.0, 0.0}; }

std::size_t MetricSpace::encoded_width() const noexcept {
  switch (kind_) {
  case SpaceKind::Euclidean: return dim_;
  case SpaceKind::Sphere2: return 3;
  case SpaceKind::Wasserstein1D: return dim_;
  case SpaceKind::Network: return dim_ * dim_;
  case SpaceKind::Spider3: return 2;
  }
  return 0;
}

std::string MetricSpace::name() const {
  std::ostringstream os;
  switch (kind_) {
  case SpaceKind::Euclidean: os << "euclidean(" << dim_ << ")"; break;
  case SpaceKind::Sphere2: os << "sphere2"; break;
  case SpaceKind::Wasserstein1D: os << "wasserstein1d(" << dim_ << ")"; break;
  case SpaceKind::Network: os << "network(" << dim_ << ")"; break;
  case SpaceKind::Spider3: os << "spider3"; break;
  }
  return os.str();
}

void MetricSpace::validate(const ObjectPoint& p) const {
  switch (kind_) {
  case SpaceKind::Euclidean: {
    const auto& e = expect<EuclideanPoint>(*this, p);
    if (e.coords.size() != dim_) throw InvalidPoint("euclidean point has wrong dimension");
    for (double v : e.coords)
      if (!std::isfinite(v)) throw InvalidPoint("euclidean point has non-finite coordinate");
    return;
  }
  case SpaceKind::Sphere2: {
    const auto& s = expect<SpherePoint>(*this, p);
    const double n = norm(s.v);
    if (!(std::abs(n - 1.0) <= kUnitTolerance)) {
      throw InvalidPoint("sphere point has norm " + std::to_string(n));
    }
    return;
  }
  case SpaceKind::Wasserstein1D: {
    const auto& q = expect<QuantileGrid>(*this, p);
    if (q.values.size() != dim_) throw InvalidPoint("quantile grid has wrong size");
    for (std::size_t j = 0; j < q.values.size(); ++j) {
      const double v = q.values[j];
      if (!std::isfinite(v) || v < lo_ - 1e-12 || v > hi_ + 1e-12) {
        throw InvalidPoint("quantile value " + std::to_string(j) + " outside support");
      }
      if (j > 0 && v < q.values[j - 1]) {
        throw InvalidPoint("quantile values decrease between indices " + std::to_string(j - 1) +
                           " and " + std::to_string(j));
      }
    }
    return;
  }
  case SpaceKind::Network: {
    const auto& a = expect<NetworkPoint>(*this, p);
    if (a.entries.size() != dim_ * dim_) throw InvalidPoint("network matrix has wrong size");
    for (std::size_t j = 0; j < a.entries.size(); ++j) {
      if (!(a.entries[j] >= 0.0 && a.entries[j] <= 1.0)) {
        throw InvalidPoint("network entry " + std::to_string(j) + " outside [0, 1]");
      }
    }
    return;
  }
  case SpaceKind::Spider3: {
    const auto& s = expect<SpiderPoint>(*this, p);
    if (s.ray < 1 || s.ray > 3) throw InvalidPoint("spider ray must be 1, 2 or 3");
    if (!(s.length >= 0.0) || !std::isfinite(s.length)) {
      throw InvalidPoint("spider length must be finite and non-negative");
    }
    return;
  }
  }
}

double MetricSpace::distance(const ObjectPoint& a, const ObjectPoint& b) const {
  switch (kind_) {
  case SpaceKind::Euclidean:
  case SpaceKind::Network:
  case SpaceKind::Wasserstein1D: {
    const std::vector<double>* va = nullptr;
    const std::vector<double>* vb = nullptr;
    if (kind_ == SpaceKind::Euclidean) {
      va = &expect<EuclideanPoint>(*this, a).coords;
      vb = &expect<EuclideanPoint>(*this, b).coords;
    } else if (kind_ == SpaceKind::Network) {
      va = &expect<NetworkPoint>(*this, a).entries;
      vb = &expect<NetworkPoint>(*this, b).entries;
    } else {
      va = &expect<QuantileGrid>(*this, a).values;
      vb = &expect<QuantileGrid>(*this, b).values;
    }
    if (va->size() != vb->size()) throw InvalidPoint("points have different sizes");
    double s = 0.0;
    for (std::size_t i = 0; i < va->size(); ++i) {
      const double d = (*va)[i] - (*vb)[i];
      s += d * d;
    }
    if (kind_ == SpaceKind::Wasserstein1D) s /= static_cast<double>(va->size());
    return std::sqrt(s);
  }
  case SpaceKind::Sphere2:
    return geodesic_distance(expect<SpherePoint>(*this, a).v, expect<SpherePoint>(*this, b).v);
  case SpaceKind::Spider3: {
    const auto& sa = expect<SpiderPoint>(*this, a);
    const auto& sb = expect<SpiderPoint>(*this, b);
    return sa.ray == sb.ray ? std::abs(sa.length - sb.length) : sa.length + sb.length;
  }
  }
  return 0.0;
}

ObjectPoint MetricSpace::frechet_mean(std::span<const ObjectPoint> points,
                                      std::span<const double> weights) const {
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return frechet_mean(points, idx, weights);
}

ObjectPoint MetricSpace::frechet_mean(std::span<const ObjectPoint> points,
                                      std::span<const std::size_t> indices,
                                      std::span<const double> weights) const {
  if (!has_mean()) throw Error("space " + name() + " has no Fréchet mean");
  check_weights(weights, indices.size());
  for (std::size_t i : indices) validate(points[i]);

  if (const std::size_t only = single_support(weights); only < weights.size()) {
    return points[indices[only]];
  }

  if (kind_ == SpaceKind::Sphere2) return SpherePoint{sphere_mean(points, indices, weights)};

  const std::size_t width = encoded_width();
  std::vector<double> acc(width, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::vector<double> v = encode(points[indices[i]]);
    for (std::size_t c = 0; c < width; ++c) acc[c] += weights[i] * v[c];
  }
  switch (kind_) {
  case SpaceKind::Euclidean: return EuclideanPoint{std::move(acc)};
  case SpaceKind::Network:
    for (double& v : acc) v = std::clamp(v, 0.0, 1.0);
    return NetworkPoint{std::move(acc)};
  case SpaceKind::Wasserstein1D:
    for (double& v : acc) v = std::clamp(v, lo_, hi_);
    monotone_project(acc);
    return QuantileGrid{std::move(acc)};
  default: break;
  }
  throw Error("unreachable frechet_mean branch");
}

std::vector<double> MetricSpace::encode(const ObjectPoint& p) const {
  switch (kind_) {
  case SpaceKind::Euclidean: return expect<EuclideanPoint>(*this, p).coords;
  case SpaceKind::Sphere2: {
    const auto& v = expect<SpherePoint>(*this, p).v;
    return {v[0], v[1], v[2]};
  }
  case SpaceKind::Wasserstein1D: return expect<QuantileGrid>(*this, p).values;
  case SpaceKind::Network: return expect<NetworkPoint>(*this, p).entries;
  case SpaceKind::Spider3: {
    const auto& s = expect<SpiderPoint>(*this, p);
    return {static_cast<double>(s.ray), s.length};
  }
  }
  return {};
}

ObjectPoint MetricSpace::decode(std::span<const double> values) const {
  if (values.size() != encoded_width()) {
    throw InvalidPoint("expected " + std::to_string(encoded_width()) + " values for " + name() +
                       ", got " + std::to_string(values.size()));
  }
  switch (kind_) {
  case SpaceKind::Euclidean: return EuclideanPoint{{values.begin(), values.end()}};
  case SpaceKind::Sphere2: return SpherePoint{{values[0], values[1], values[2]}};
  case SpaceKind::Wasserstein1D: return QuantileGrid{{values.begin(), values.end()}};
  case SpaceKind::Network: return NetworkPoint{{values.begin(), values.end()}};
  case SpaceKind::Spider3: {
    const double ray = values[0];
    if (ray != std::round(ray)) throw InvalidPoint("spider ray must be an integer");
    return SpiderPoint{static_cast<int>(ray), values[1]};
  }
  }
  return {};
}

double geodesic_distance(const Vec3& p, const Vec3& q) {
  // atan2 form of arccos(p'q); accurate for nearby points.
  return std::atan2(norm(cross(p, q)), dot(p, q));
}

Vec3 exp_map_sphere(const Vec3& p, const Vec3& v) {
  if (std::abs(norm(p) - 1.0) > kUnitTolerance) throw InvalidPoint("exp map base is not unit");
  if (std::abs(dot(p, v)) >= kUnitTolerance) throw InvalidPoint("exp map vector is not tangent");
  const double len = norm(v);
  if (len == 0.0) return p;
  const double c = std::cos(len);
  const double s = std::sin(len) / len;
  return {c * p[0] + s * v[0], c * p[1] + s * v[1], c * p[2] + s * v[2]};
}

Vec3 log_map_sphere(const Vec3& p, const Vec3& q) {
  if (std::abs(norm(p) - 1.0) > kUnitTolerance || std::abs(norm(q) - 1.0) > kUnitTolerance) {
    throw InvalidPoint("log map needs unit vectors");
  }
  const double angle = geodesic_distance(p, q);
  if (angle >= std::numbers::pi - 1e-6) throw InvalidPoint("log map of antipodal points");
  const double c = dot(p, q);
  Vec3 u{q[0] - c * p[0], q[1] - c * p[1], q[2] - c * p[2]};
  const double un = norm(u);
  if (un == 0.0 || angle == 0.0) return {0.0, 0.0, 0.0};
  const double s = angle / un;
  return {s * u[0], s * u[1], s * u[2]};
}

CandidateGrid CandidateGrid::from_points(std::vector<ObjectPoint> points) {
  CandidateGrid grid;
  grid.cell_measure.assign(points.size(), 1.0);
  grid.points = std::move(points);
  return grid;
}

CandidateGrid candidate_grid(const MetricSpace& space, std::size_t resolution,
                             const GridBounds& bounds) {
  if (resolution == 0) throw Error("candidate grid resolution must be positive");
  const auto axis = [&](double lo, double hi, std::size_t i) {
    if (resolution == 1) return lo;
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
  };
  const auto cell = [&](double lo, double hi) {
    return resolution == 1 ? hi - lo : (hi - lo) / static_cast<double>(resolution - 1);
  };

  CandidateGrid grid;
  switch (space.kind()) {
  case SpaceKind::Euclidean: {
    const std::size_t k = space.dim();
    std::vector<std::pair<double, double>> ranges = bounds.ranges;
    if (ranges.size() == 1 && k > 1) ranges.assign(k, ranges.front());
    if (ranges.size() != k) throw Error("euclidean candidate grid needs one range per axis");
    double measure = 1.0;
    std::size_t total = 1;
    for (const auto& [lo, hi] : ranges) {
      if (!(lo <= hi)) throw Error("candidate range must satisfy lo <= hi");
      measure *= cell(lo, hi);
      total *= resolution;
    }
    grid.points.reserve(total);
    std::vector<std::size_t> counter(k, 0);
    for (std::size_t n = 0; n < total; ++n) {
      std::vector<double> coords(k);
      for (std::size_t a = 0; a < k; ++a) coords[a] = axis(ranges[a].first, ranges[a].second, counter[a]);
      grid.points.emplace_back(EuclideanPoint{std::move(coords)});
      for (std::size_t a = k; a-- > 0;) {
        if (++counter[a] < resolution) break;
        counter[a] = 0;
      }
    }
    grid.cell_measure.assign(total, measure);
    return grid;
  }
  case SpaceKind::Sphere2: {
    const double L = static_cast<double>(resolution);
    const double dtheta = std::numbers::pi / L;
    const double dphi = 2.0 * std::numbers::pi / L;
    for (std::size_t a = 1; a <= resolution; ++a) {
      const double theta = static_cast<double>(a) * dtheta;
      for (std::size_t b = 1; b <= resolution; ++b) {
        const double phi = static_cast<double>(b) * dphi;
        grid.points.emplace_back(SpherePoint{{std::sin(theta) * std::cos(phi),
                                              std::sin(theta) * std::sin(phi), std::cos(theta)}});
        grid.cell_measure.push_back(std::abs(std::sin(theta)) * dtheta * dphi);
      }
    }
    return grid;
  }
  case SpaceKind::Wasserstein1D: {
    const double lo = space.support_lo();
    const double hi = space.support_hi();
    const double width = hi - lo;
    std::pair<double, double> mu{lo, hi};
    std::pair<double, double> sigma{0.05 * width, 0.5 * width};
    if (bounds.ranges.size() >= 1) mu = bounds.ranges[0];
    if (bounds.ranges.size() >= 2) sigma = bounds.ranges[1];
    if (!(sigma.first > 0.0)) throw Error("wasserstein family grid needs positive sigma");
    for (std::size_t a = 0; a < resolution; ++a) {
      for (std::size_t b = 0; b < resolution; ++b) {
        grid.points.emplace_back(truncated_normal_quantiles(
            axis(mu.first, mu.second, a), axis(sigma.first, sigma.second, b), lo, hi, space.dim()));
      }
    }
    grid.cell_measure.assign(grid.points.size(), 1.0);
    return grid;
  }
  case SpaceKind::Network:
  case SpaceKind::Spider3: break;
  }
  throw Error("space " + space.name() + " has no candidate generator; supply candidates");
}

} // namespace objconf
