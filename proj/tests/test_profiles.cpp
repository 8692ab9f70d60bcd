#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "objconf/error.hpp"
#include "objconf/profiles.hpp"
#include "objconf/rng.hpp"
#include "objconf/simulate.hpp"
#include "oracles.hpp"

using namespace objconf;

namespace {

std::vector<ObjectPoint> reals(const std::vector<double>& v) {
  std::vector<ObjectPoint> out;
  for (double y : v) out.emplace_back(EuclideanPoint{{y}});
  return out;
}

ObjectPoint real(double y) { return EuclideanPoint{{y}}; }

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
};

Sample setting1(std::size_t n, std::uint64_t seed) {
  const Dataset d = generate({Setting::S1, n, seed});
  Sample s{d.scalar_covariates(), {}};
  for (const auto& o : d.objects) s.y.push_back(std::get<EuclideanPoint>(o).coords[0]);
  return s;
}

ProfileTable table_for(const Sample& s, double h) {
  const auto objs = reals(s.y);
  const auto space = MetricSpace::euclidean(1);
  const TGrid grid = TGrid::covering(max_pairwise_distance(space, objs));
  return fit_profile_table(space, s.x, objs, {KernelFamily::Epanechnikov, h}, grid);
}

} // namespace

TEST_CASE("kernels are symmetric densities on [-1, 1]") {
  for (auto fam : {KernelFamily::Epanechnikov, KernelFamily::Triangular, KernelFamily::Quartic}) {
    const KernelSpec k{fam, 1.0};
    double mass = 0;
    const int steps = 20000;
    for (int i = 0; i < steps; ++i) mass += k(-1.0 + (i + 0.5) * 2.0 / steps) * 2.0 / steps;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(k(0.3) == k(-0.3));
    CHECK(k(1.0) == 0.0);
    CHECK(k(1.2) == 0.0);
    CHECK(parse_kernel(to_string(fam)) == fam);
  }
  CHECK(KernelSpec{}(0.5) == doctest::Approx(oracle::epanechnikov(0.5)));
  CHECK_THROWS_AS(parse_kernel("gaussian"), Error);
}

TEST_CASE("local-linear weights reproduce affine responses") {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(300);
  for (double& v : x) v = u(rng);
  const KernelSpec k{KernelFamily::Epanechnikov, 0.2};
  for (int rep = 0; rep < 200; ++rep) {
    const double a = 3 * u(rng), b = 3 * u(rng), x0 = 0.9 * u(rng);
    std::vector<double> r;
    for (double v : x) r.push_back(a + b * v);
    const auto w = local_linear_weights(x0, x, k);
    CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
    CHECK(std::abs(w.apply(r) - (a + b * x0)) <= 1e-10);
    for (std::size_t i = 0; i < w.support(); ++i) CHECK(std::abs(x[w.index[i]] - x0) <= k.bandwidth);
  }
}

TEST_CASE("local-linear fit matches a direct weighted least-squares solve") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(200), r(200);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    r[i] = std::sin(3 * x[i]) + 0.3 * u(rng);
  }
  for (double x0 : {-0.8, -0.1, 0.0, 0.45, 0.9}) {
    const auto w = local_linear_weights(x0, x, {KernelFamily::Epanechnikov, 0.25});
    CHECK(w.apply(r) == doctest::Approx(oracle::wls_intercept(x0, x, r, 0.25)).epsilon(1e-10));
    const LocalLinearSmoother sm(x, {KernelFamily::Epanechnikov, 0.25});
    CHECK(sm.weights(x0).apply(r) == doctest::Approx(oracle::wls_intercept(x0, x, r, 0.25)).epsilon(1e-10));
  }
}

TEST_CASE("degenerate design falls back to Nadaraya-Watson") {
  const std::vector<double> x(7, 0.3);
  const auto w = local_linear_weights(0.3, x, {KernelFamily::Epanechnikov, 0.5});
  CHECK(w.nadaraya_watson);
  CHECK(w.support() == 7);
  for (double v : w.weight) CHECK(v == doctest::Approx(1.0 / 7));
}

TEST_CASE("empty windows") {
  const std::vector<double> x{0.0, 0.1, 0.2};
  CHECK_THROWS_AS(local_linear_weights(5.0, x, {KernelFamily::Epanechnikov, 0.5}), NoLocalData);
  const LocalLinearSmoother sm(x, {KernelFamily::Epanechnikov, 0.05});
  const auto w = sm.weights(5.0);
  CHECK(w.widenings > 0);
  CHECK(w.support() >= 2);
  CHECK(w.bandwidth > 4.8);
  CHECK(std::abs(w.sum() - 1.0) <= 1e-10);
  CHECK_THROWS_AS(LocalLinearSmoother(x, {KernelFamily::Epanechnikov, 0.0}), Error);
}

TEST_CASE("bandwidth rule") {
  const std::vector<double> x{1, 2, 3, 4};
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(rule_of_thumb_bandwidth(x) == doctest::Approx(sd * std::pow(4.0, -0.2)));
  CHECK(rule_of_thumb_bandwidth(x, 2.0) == doctest::Approx(2 * sd * std::pow(4.0, -0.2)));
}

TEST_CASE("profile endpoints") {
  const auto s = setting1(200, 3);
  const auto objs = reals(s.y);
  const auto space = MetricSpace::euclidean(1);
  const TGrid grid = TGrid::covering(max_pairwise_distance(space, objs));
  const ProfileEstimator est(space, s.x, objs, {KernelFamily::Epanechnikov, 0.3}, grid);
  for (double x0 : {-0.5, 0.0, 0.7}) {
    const auto f = estimate_profile(est, real(1.234567), x0);
    CHECK(f.size() == grid.size);
    CHECK(f.front() == doctest::Approx(0.0).epsilon(1e-12).scale(1));
    CHECK(f.back() == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : f) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("equal covariates give the empirical CDF of distances") {
  Rng rng(8);
  std::normal_distribution<double> z;
  std::vector<double> y(40);
  for (double& v : y) v = z(rng);
  const auto objs = reals(y);
  const TGrid grid{5.0, 51};
  const ProfileEstimator est(MetricSpace::euclidean(1), std::vector<double>(40, 0.0), objs,
                             {KernelFamily::Epanechnikov, 1.0}, grid);
  const double omega = 0.25;
  const auto f = estimate_profile(est, real(omega), 0.0);
  std::vector<double> d;
  for (double v : y) d.push_back(std::abs(v - omega));
  for (std::size_t i = 0; i < grid.size; ++i) {
    CHECK(std::abs(f[i] - oracle::ecdf(d, grid.node(i))) <= 1e-12);
  }
}

TEST_CASE("w1 between profiles") {
  const TGrid grid{4.0, 401};
  std::vector<double> f(grid.size), g(grid.size);
  const double a = 0.7, b = 2.35;
  for (std::size_t i = 0; i < grid.size; ++i) {
    f[i] = grid.node(i) >= a ? 1.0 : 0.0;
    g[i] = grid.node(i) >= b ? 1.0 : 0.0;
  }
  CHECK(w1_profile_distance(f, f, grid) == 0.0);
  CHECK(std::abs(w1_profile_distance(f, g, grid) - std::abs(a - b)) <= grid.step());
  CHECK(w1_profile_distance(f, g, grid) == w1_profile_distance(g, f, grid));
  CHECK_THROWS_AS(w1_profile_distance(f, std::vector<double>(3), grid), Error);
}

TEST_CASE("CDF and quantile forms of W1 agree on random discrete laws") {
  Rng rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> k(1, 6);
  const TGrid grid{1.0, 201};
  double worst = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    oracle::Discrete a, b;
    for (auto* d : {&a, &b}) {
      const int atoms = k(rng);
      double total = 0;
      for (int i = 0; i < atoms; ++i) {
        d->atoms.push_back(u(rng));
        d->probs.push_back(u(rng) + 0.05);
        total += d->probs.back();
      }
      for (double& p : d->probs) p /= total;
    }
    std::vector<double> fa(grid.size), fb(grid.size);
    for (std::size_t i = 0; i < grid.size; ++i) {
      fa[i] = oracle::discrete_cdf(a, grid.node(i));
      fb[i] = oracle::discrete_cdf(b, grid.node(i));
    }
    const double diff = std::abs(w1_profile_distance(fa, fb, grid) - oracle::quantile_form_w1(a, b));
    worst = std::max(worst, diff);
  }
  CHECK(worst <= 2 * grid.step());
}

TEST_CASE("profile table invariants") {
  const auto s = setting1(150, 21);
  const auto t = table_for(s, 0.3);
  CHECK(t.size() == 150);
  const double t_max = t.estimator().grid().t_max;
  for (const auto& c : t.curves()) {
    CHECK(c.size() == t.estimator().grid().size);
    for (double v : c) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  for (double c : t.costs()) {
    CHECK(std::isfinite(c));
    CHECK(c >= 0.0);
    CHECK(c <= t_max);
  }
  CHECK(*std::max_element(t.costs().begin(), t.costs().end()) > 0.0);
}

TEST_CASE("two identical objects have equal zero costs") {
  const auto t = fit_profile_table(MetricSpace::euclidean(1), {0.0, 1.0}, reals({0.5, 0.5}),
                                   {KernelFamily::Epanechnikov, 2.0}, TGrid{1.0, 101});
  CHECK(t.costs()[0] == t.costs()[1]);
  CHECK(t.costs()[0] <= 1e-12);
}

TEST_CASE("degenerate dataset scores") {
  const std::vector<double> x(10, 0.0);
  const auto t = fit_profile_table(MetricSpace::euclidean(1), x, reals(std::vector<double>(10, 2.0)),
                                   {KernelFamily::Epanechnikov, 1.0}, TGrid{1.0, 101});
  CHECK(estimate_cpc(t, real(2.0), 0.0) <= 1e-10);
  CHECK(conditional_transport_rank(t, real(2.0), 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(estimate_cps(t, 0.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("cost is lowest near the regression function") {
  const auto s = setting1(1000, 9);
  const auto t = table_for(s, 0.15);
  const double at = estimate_cpc(t, real(regression_curve(0.0)), 0.0);
  CHECK(at < estimate_cpc(t, real(0.0), 0.0));
  CHECK(at < estimate_cpc(t, real(2.0), 0.0));
  CHECK(estimate_cpc(t, real(-5.0), 0.0) >= 0.0);
}

TEST_CASE("profile scores are clipped and monotone in z") {
  const auto s = setting1(400, 12);
  const auto t = table_for(s, 0.2);
  const double hi = *std::max_element(t.costs().begin(), t.costs().end());
  const double lo = *std::min_element(t.costs().begin(), t.costs().end());
  Rng rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 300; ++rep) {
    const double x0 = 0.95 * u(rng);
    CHECK(estimate_cps(t, hi, x0) == doctest::Approx(1.0));
    CHECK(estimate_cps(t, lo - 1e-9, x0) == 0.0);
    double z1 = lo + (hi - lo) * (u(rng) + 1) / 2, z2 = lo + (hi - lo) * (u(rng) + 1) / 2;
    if (z1 > z2) std::swap(z1, z2);
    const double s1 = estimate_cps(t, z1, x0), s2 = estimate_cps(t, z2, x0);
    CHECK(s1 <= s2 + 1e-10);
    CHECK(s1 >= 0.0);
    CHECK(s2 <= 1.0);
  }
}

TEST_CASE("transport rank favours the centre of a symmetric law") {
  Rng rng(30);
  std::normal_distribution<double> z(3.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Sample s;
  for (int i = 0; i < 1000; ++i) {
    s.x.push_back(u(rng));
    s.y.push_back(z(rng));
  }
  const auto t = table_for(s, 0.3);
  const double centre = conditional_transport_rank(t, real(3.0), 0.0);
  CHECK(centre > conditional_transport_rank(t, real(0.0), 0.0));
  CHECK(centre > conditional_transport_rank(t, real(-3.0), 0.0));
  for (double w : {-3.0, 0.0, 3.0, 6.0}) {
    const double r = conditional_transport_rank(t, real(w), 0.0);
    CHECK(r > 0.0);
    CHECK(r < 1.0);
  }
}

TEST_CASE("fitted profiles stay close to their running maximum") {
  const auto s = setting1(400, 17);
  const auto objs = reals(s.y);
  const auto space = MetricSpace::euclidean(1);
  const TGrid grid = TGrid::covering(max_pairwise_distance(space, objs));
  const ProfileEstimator est(space, s.x, objs,
                             {KernelFamily::Epanechnikov, rule_of_thumb_bandwidth(s.x)}, grid);
  ProfileEstimator mono(space, s.x, objs, est.kernel(), grid, {true});
  double worst = 0;
  for (double x0 = -0.95; x0 <= 0.95; x0 += 0.05) {
    for (double w = -1.0; w <= 5.0; w += 0.5) {
      const auto f = estimate_profile(est, real(w), x0);
      const auto g = estimate_profile(mono, real(w), x0);
      double run = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        run = std::max(run, f[i]);
        worst = std::max(worst, run - f[i]);
        CHECK(g[i] == run);
      }
    }
  }
  CHECK(worst <= 0.1);
}

TEST_CASE("profile quantiles invert a step curve") {
  const TGrid grid{1.0, 11};
  std::vector<double> c(11, 0.0);
  for (std::size_t i = 5; i < 11; ++i) c[i] = 1.0;
  const auto q = profile_quantiles(c, grid, 4);
  for (double v : q) CHECK(v >= 0.4 - 1e-12);
  for (double v : q) CHECK(v <= 0.5 + 1e-12);
}

TEST_CASE("table reload requires consistent parts") {
  const auto s = setting1(30, 2);
  const auto t = table_for(s, 0.5);
  const auto again = ProfileTable::from_parts(t.estimator(), t.curves(), t.costs());
  CHECK(again.costs() == t.costs());
  CHECK(conditional_transport_rank(again, real(1.0), 0.1) == conditional_transport_rank(t, real(1.0), 0.1));
  auto bad = t.costs();
  bad[0] = -1;
  CHECK_THROWS_AS(ProfileTable::from_parts(t.estimator(), t.curves(), bad), Error);
}
