#include "objconf/transport.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "objconf/error.hpp"

namespace objconf {

namespace {

void require_monotone(const QuantileGrid& t, const char* what) {
  for (std::size_t j = 1; j < t.values.size(); ++j) {
    if (t.values[j] < t.values[j - 1]) {
      throw InvalidPoint(std::string(what) + ": map is not monotone at index " + std::to_string(j));
    }
  }
  if (t.values.empty()) throw InvalidPoint(std::string(what) + ": empty map");
}

double level(std::size_t j, std::size_t m) {
  return (static_cast<double>(j) + 0.5) / static_cast<double>(m);
}

} // namespace

std::vector<double> quantile_levels(std::size_t m) {
  std::vector<double> u(m);
  for (std::size_t j = 0; j < m; ++j) u[j] = level(j, m);
  return u;
}

QuantileGrid identity_map(std::size_t m) { return QuantileGrid{quantile_levels(m)}; }

double evaluate_map(const QuantileGrid& map, double s) {
  const auto& y = map.values;
  const std::size_t m = y.size();
  s = std::clamp(s, 0.0, 1.0);
  const double first = level(0, m);
  const double last = level(m - 1, m);
  if (s <= first) return y.front() * (s / first);
  if (s >= last) return y.back() + (1.0 - y.back()) * (s - last) / (1.0 - last);
  const double pos = s * static_cast<double>(m) - 0.5;
  std::size_t j = std::min(static_cast<std::size_t>(pos), m - 2);
  const double frac = pos - static_cast<double>(j);
  return y[j] + frac * (y[j + 1] - y[j]);
}

double evaluate_inverse_map(const QuantileGrid& map, double s) {
  const std::size_t m = map.values.size();
  std::vector<double> ys;
  std::vector<double> xs;
  ys.reserve(m + 2);
  xs.reserve(m + 2);
  ys.push_back(0.0);
  xs.push_back(0.0);
  for (std::size_t j = 0; j < m; ++j) {
    ys.push_back(map.values[j]);
    xs.push_back(level(j, m));
  }
  ys.push_back(1.0);
  xs.push_back(1.0);
  s = std::clamp(s, 0.0, 1.0);
  const auto it = std::lower_bound(ys.begin(), ys.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - ys.begin());
  if (i == 0) return 0.0;
  if (i >= ys.size()) return 1.0;
  const double dy = ys[i] - ys[i - 1];
  return xs[i - 1] + (s - ys[i - 1]) / dy * (xs[i] - xs[i - 1]);
}

void monotone_project(std::vector<double>& values) {
  for (std::size_t j = 1; j < values.size(); ++j) values[j] = std::max(values[j], values[j - 1]);
}

QuantileGrid transport_add(const QuantileGrid& t1, const QuantileGrid& t2) {
  require_monotone(t1, "transport_add");
  require_monotone(t2, "transport_add");
  if (t1.values.size() != t2.values.size()) throw InvalidPoint("transport_add: size mismatch");
  QuantileGrid out;
  out.values.reserve(t1.values.size());
  for (double v : t1.values) out.values.push_back(evaluate_map(t2, v));
  monotone_project(out.values);
  return out;
}

QuantileGrid transport_scale(double alpha, const QuantileGrid& t) {
  if (!(std::abs(alpha) <= 1.0)) throw Error("transport_scale: |alpha| must be <= 1");
  require_monotone(t, "transport_scale");
  const std::size_t m = t.values.size();
  QuantileGrid out;
  out.values.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double x = level(j, m);
    if (alpha > 0.0) {
      out.values[j] = x + alpha * (t.values[j] - x);
    } else if (alpha == 0.0) {
      out.values[j] = x;
    } else {
      out.values[j] = x + alpha * (x - evaluate_inverse_map(t, x));
    }
    out.values[j] = std::clamp(out.values[j], 0.0, 1.0);
  }
  monotone_project(out.values);
  return out;
}

QuantileGrid truncated_normal_quantiles(double mean, double sd, double lo, double hi,
                                        std::size_t m) {
  if (!(sd > 0.0)) throw Error("truncated normal needs sd > 0");
  const boost::math::normal_distribution<double> standard;
  const double pa = boost::math::cdf(standard, (lo - mean) / sd);
  const double pb = boost::math::cdf(standard, (hi - mean) / sd);
  QuantileGrid out;
  out.values.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    double v = 0.0;
    if (pb - pa < 1e-300) {
      v = mean <= lo ? lo : hi;
    } else {
      const double p = std::clamp(pa + level(j, m) * (pb - pa), 1e-300, 1.0 - 1e-16);
      v = mean + sd * boost::math::quantile(standard, p);
    }
    out.values[j] = std::clamp(v, lo, hi);
  }
  monotone_project(out.values);
  return out;
}

} // namespace objconf
