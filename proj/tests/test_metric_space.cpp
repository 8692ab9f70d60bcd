#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "objconf/error.hpp"
#include "objconf/metric_space.hpp"
#include "objconf/rng.hpp"
#include "objconf/transport.hpp"
#include "oracles.hpp"

using namespace objconf;

namespace {

SpherePoint random_sphere(Rng& rng) {
  std::normal_distribution<double> z;
  Vec3 v{z(rng), z(rng), z(rng)};
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (double& c : v) c /= n;
  return {v};
}

ObjectPoint random_point(const MetricSpace& space, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (space.kind()) {
  case SpaceKind::Euclidean: {
    std::vector<double> c(space.dim());
    for (double& v : c) v = 4.0 * u(rng) - 2.0;
    return EuclideanPoint{c};
  }
  case SpaceKind::Sphere2:
    return random_sphere(rng);
  case SpaceKind::Wasserstein1D:
    return truncated_normal_quantiles(u(rng), 0.05 + 0.4 * u(rng), 0.0, 1.0, space.dim());
  case SpaceKind::Network: {
    std::vector<double> e(space.dim() * space.dim());
    for (double& v : e) v = u(rng);
    return NetworkPoint{e};
  }
  case SpaceKind::Spider3:
    return SpiderPoint{1 + static_cast<int>(3 * u(rng)) % 3, u(rng)};
  }
  return {};
}

} // namespace

TEST_CASE("sphere distance of orthogonal unit vectors is pi/2") {
  const auto s = MetricSpace::sphere2();
  CHECK(s.distance(SpherePoint{{1, 0, 0}}, SpherePoint{{0, 1, 0}}) ==
        doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
}

TEST_CASE("spider distance adds lengths across rays") {
  const auto s = MetricSpace::spider3();
  CHECK(s.distance(SpiderPoint{1, 0.4}, SpiderPoint{2, 0.3}) == doctest::Approx(0.7));
  CHECK(s.distance(SpiderPoint{3, 0.4}, SpiderPoint{3, 0.1}) == doctest::Approx(0.3));
}

TEST_CASE("wasserstein distance between point masses equals their gap") {
  const auto s = MetricSpace::wasserstein1d(100);
  const QuantileGrid a{std::vector<double>(100, 0.2)};
  const QuantileGrid b{std::vector<double>(100, 0.5)};
  double rms = 0;
  for (std::size_t j = 0; j < 100; ++j) rms += (a.values[j] - b.values[j]) * (a.values[j] - b.values[j]);
  rms = std::sqrt(rms / 100);
  CHECK(s.distance(a, b) == doctest::Approx(rms).epsilon(1e-14));
  CHECK(s.distance(a, b) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("network distance is the Frobenius norm") {
  const auto s = MetricSpace::network(2);
  const NetworkPoint a{{0, 1, 1, 0}};
  const NetworkPoint b{{0, 0.5, 0.5, 0}};
  CHECK(s.distance(a, b) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("metric axioms on random triples in every space") {
  const std::vector<MetricSpace> spaces{MetricSpace::euclidean(1), MetricSpace::euclidean(3),
                                        MetricSpace::sphere2(), MetricSpace::wasserstein1d(50),
                                        MetricSpace::network(3), MetricSpace::spider3()};
  Rng rng(42);
  for (const auto& space : spaces) {
    CAPTURE(space.name());
    for (int i = 0; i < 1000; ++i) {
      const auto a = random_point(space, rng);
      const auto b = random_point(space, rng);
      const auto c = random_point(space, rng);
      const double ab = space.distance(a, b);
      CHECK(ab >= 0.0);
      CHECK(ab == space.distance(b, a));
      CHECK(space.distance(a, a) <= 1e-12);
      CHECK(space.distance(a, c) <= ab + space.distance(b, c) + 1e-9);
    }
  }
}

TEST_CASE("sphere distance stays within [0, pi]") {
  const auto s = MetricSpace::sphere2();
  CHECK(s.distance(SpherePoint{{0, 0, 1}}, SpherePoint{{0, 0, -1}}) ==
        doctest::Approx(std::numbers::pi));
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double d = s.distance(random_sphere(rng), random_sphere(rng));
    CHECK(d >= 0.0);
    CHECK(d <= std::numbers::pi);
  }
}

TEST_CASE("mixing spaces or invalid points is rejected") {
  const auto s = MetricSpace::sphere2();
  CHECK_THROWS_AS(s.distance(SpherePoint{{1, 0, 0}}, EuclideanPoint{{1.0}}), InvalidPoint);
  CHECK_THROWS_AS(s.validate(SpherePoint{{0.9, 0, 0}}), InvalidPoint);
  CHECK_THROWS_AS(MetricSpace::wasserstein1d(3).validate(QuantileGrid{{0.1, 0.5, 0.4}}), InvalidPoint);
  CHECK_THROWS_AS(MetricSpace::network(1).validate(NetworkPoint{{1.5}}), InvalidPoint);
  CHECK_THROWS_AS(MetricSpace::spider3().validate(SpiderPoint{4, 0.1}), InvalidPoint);
  CHECK_THROWS_AS(MetricSpace::spider3().validate(SpiderPoint{1, -0.1}), InvalidPoint);
}

TEST_CASE("euclidean frechet mean is the weighted average") {
  const auto s = MetricSpace::euclidean(1);
  const std::vector<ObjectPoint> pts{EuclideanPoint{{1.0}}, EuclideanPoint{{3.0}}};
  const std::vector<double> w{0.5, 0.5};
  CHECK(std::get<EuclideanPoint>(s.frechet_mean(pts, w)).coords[0] == doctest::Approx(2.0));
  // negative local-linear style weights are allowed
  const std::vector<double> w2{1.5, -0.5};
  CHECK(std::get<EuclideanPoint>(s.frechet_mean(pts, w2)).coords[0] == doctest::Approx(0.0));
}

TEST_CASE("degenerate weights return the weighted point") {
  const auto s = MetricSpace::sphere2();
  const std::vector<ObjectPoint> pts{SpherePoint{{1, 0, 0}}, SpherePoint{{0, 0.6, 0.8}}};
  const std::vector<double> w{1.0, 0.0};
  CHECK(std::get<SpherePoint>(s.frechet_mean(pts, w)) == std::get<SpherePoint>(pts[0]));
}

TEST_CASE("sphere frechet mean matches a great-circle search") {
  const auto s = MetricSpace::sphere2();
  const std::vector<ObjectPoint> pts{SpherePoint{{1, 0, 0}}, SpherePoint{{0, 1, 0}}};
  const auto m = std::get<SpherePoint>(s.frechet_mean(pts, std::vector<double>{0.5, 0.5})).v;
  CHECK(m[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(m[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-8));
  CHECK(m[2] == doctest::Approx(0.0).epsilon(1e-8));

  Rng rng(9);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_sphere(rng);
    const auto q = random_sphere(rng);
    if (oracle::arc(p.v, q.v) > 2.8) continue;
    const double wp = u(rng);
    const auto got = std::get<SpherePoint>(s.frechet_mean(std::vector<ObjectPoint>{p, q},
                                                          std::vector<double>{wp, 1 - wp}))
                         .v;
    const auto want = oracle::two_point_sphere_mean(p.v, q.v, wp, 1 - wp);
    CHECK(oracle::arc(got, want) < 1e-7);
  }
}

TEST_CASE("wasserstein frechet mean stays monotone with negative weights") {
  const auto s = MetricSpace::wasserstein1d(20);
  const std::vector<ObjectPoint> pts{truncated_normal_quantiles(0.3, 0.1, 0, 1, 20),
                                     truncated_normal_quantiles(0.6, 0.3, 0, 1, 20)};
  const auto m = s.frechet_mean(pts, std::vector<double>{1.8, -0.8});
  CHECK_NOTHROW(s.validate(m));
}

TEST_CASE("frechet mean preconditions") {
  const auto s = MetricSpace::euclidean(1);
  const std::vector<ObjectPoint> pts{EuclideanPoint{{1.0}}, EuclideanPoint{{3.0}}};
  CHECK_THROWS_AS(s.frechet_mean(pts, std::vector<double>{0.5, 0.6}), Error);
  CHECK_THROWS_AS(MetricSpace::spider3().frechet_mean(
                      std::vector<ObjectPoint>{SpiderPoint{1, 0.1}}, std::vector<double>{1.0}),
                  Error);
}

TEST_CASE("exponential map examples") {
  const Vec3 p{1, 0, 0};
  const auto q = exp_map_sphere(p, {0, std::numbers::pi / 2, 0});
  CHECK(q[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(1.0));
  CHECK(exp_map_sphere(p, {0, 0, 0}) == p);
  const auto r = exp_map_sphere(p, {0, 0, 0.3});
  CHECK(r[0] == doctest::Approx(std::cos(0.3)).epsilon(1e-15));
  CHECK(r[2] == doctest::Approx(std::sin(0.3)).epsilon(1e-15));
  CHECK_THROWS_AS(exp_map_sphere({2, 0, 0}, {0, 1, 0}), InvalidPoint);
  CHECK_THROWS_AS(exp_map_sphere(p, {0.1, 1, 0}), InvalidPoint);
}

TEST_CASE("logarithm map examples and round trip") {
  const Vec3 p{1, 0, 0};
  const auto zero = log_map_sphere(p, p);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  CHECK(zero[2] == 0.0);
  const auto v = log_map_sphere(p, {0, 1, 0});
  CHECK(v[1] == doctest::Approx(std::numbers::pi / 2));
  CHECK(std::abs(v[0]) < 1e-15);
  CHECK_THROWS_AS(log_map_sphere(p, {-1, 0, 0}), InvalidPoint);

  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_sphere(rng).v;
    const auto b = random_sphere(rng).v;
    if (oracle::arc(a, b) > std::numbers::pi - 0.1) continue;
    const auto v = log_map_sphere(a, b);
    CHECK(std::abs(std::sqrt(oracle::dot(v, v)) - oracle::arc(a, b)) <= 1e-10);
    const auto back = exp_map_sphere(a, v);
    // chord length; equals the geodesic to first order
    const oracle::V3 diff{back[0] - b[0], back[1] - b[1], back[2] - b[2]};
    CHECK(std::sqrt(oracle::dot(diff, diff)) <= 1e-9);
  }
}

TEST_CASE("candidate grids") {
  const auto sphere = candidate_grid(MetricSpace::sphere2(), 2);
  CHECK(sphere.size() == 4);
  for (const auto& p : sphere.points) CHECK_NOTHROW(MetricSpace::sphere2().validate(p));

  const auto line = candidate_grid(MetricSpace::euclidean(1), 3, GridBounds{{{0.0, 1.0}}});
  REQUIRE(line.size() == 3);
  CHECK(std::get<EuclideanPoint>(line.points[0]).coords[0] == 0.0);
  CHECK(std::get<EuclideanPoint>(line.points[1]).coords[0] == 0.5);
  CHECK(std::get<EuclideanPoint>(line.points[2]).coords[0] == 1.0);
  CHECK(line.cell_measure[0] == doctest::Approx(0.5));

  const auto w = candidate_grid(MetricSpace::wasserstein1d(30), 7);
  CHECK(w.size() == 49);
  for (const auto& p : w.points) CHECK_NOTHROW(MetricSpace::wasserstein1d(30).validate(p));

  const auto plane = candidate_grid(MetricSpace::euclidean(2), 5, GridBounds{{{-1.0, 1.0}}});
  CHECK(plane.size() == 25);
  CHECK(plane.cell_measure[0] == doctest::Approx(0.25));

  CHECK_THROWS_AS(candidate_grid(MetricSpace::spider3(), 4), Error);
  CHECK_THROWS_AS(candidate_grid(MetricSpace::network(2), 4), Error);
}

TEST_CASE("sphere grid cell measures approximate the total solid angle") {
  const auto g = candidate_grid(MetricSpace::sphere2(), 200);
  double total = 0;
  for (double m : g.cell_measure) total += m;
  CHECK(total == doctest::Approx(4 * std::numbers::pi).epsilon(0.01));
}

TEST_CASE("encode and decode are inverse") {
  Rng rng(5);
  for (const auto& space : {MetricSpace::euclidean(2), MetricSpace::sphere2(),
                            MetricSpace::wasserstein1d(10), MetricSpace::network(2),
                            MetricSpace::spider3()}) {
    const auto p = random_point(space, rng);
    const auto enc = space.encode(p);
    CHECK(enc.size() == space.encoded_width());
    CHECK(space.decode(enc) == p);
  }
}
