#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stocon/analysis.hpp"
#include "stocon/propagate.hpp"
#include "stocon/scenarios.hpp"

using namespace stocon;

namespace {

DiscreteSystem scalar_map(std::function<double(double)> f,
                          std::function<double(double)> df = nullptr) {
  DiscreteSystem sys;
  sys.dim = 1;
  sys.map = [f](const Vec& x, long, const Vec&) { return Vec{f(x[0])}; };
  if (df)
    sys.jacobian = [df](const Vec& x, long, const Vec&) {
      Mat j(1, 1);
      j(0, 0) = df(x[0]);
      return j;
    };
  return sys;
}

ContinuousSystem scalar_field(std::function<double(double, double)> f) {
  ContinuousSystem sys;
  sys.dim = 1;
  sys.field = [f](const Vec& x, double t, const Vec&) { return Vec{f(x[0], t)}; };
  return sys;
}

const NoisePath kZero = NoisePath::constant({0.0});

}  // namespace

TEST_CASE("step_discrete: scalar linear map") {
  const DiscreteSystem sys = scalar_map([](double x) { return 0.5 * x; });
  CHECK(step_discrete(sys, {4.0}, 0, kZero)[0] == 2.0);
}

TEST_CASE("step_discrete: noise-driven map is reproducible") {
  const DiscreteSystem sys = linear_random_gain(Distribution::two_point(0.5, 1.5));
  const NoisePath path = NoisePath::iid_sequence(Distribution::two_point(0.5, 1.5), 21, 0);
  const double a = step_discrete(sys, {1.0}, 5, path)[0];
  const double b = step_discrete(sys, {1.0}, 5, path)[0];
  CHECK(a == b);
  CHECK((a == 0.5 || a == 1.5));
}

TEST_CASE("step_discrete: one stochastic-gradient step by hand") {
  // E(P) = ||P||^2 / 2, mu = 0.1, Pi = (0.5, -0.5), P = (1, 0):
  // rise = P.Pi + ||Pi||^2/2 = 0.5 + 0.25; next = P - 0.1 * 0.75 * Pi
  const auto sg = stochastic_gradient(quadratic_objective(Mat::identity(2)), 0.1,
                                      Distribution::two_point(-1.0, 1.0));
  const Vec next = step_discrete(sg.system, {1.0, 0.0}, 0, NoisePath::constant({0.5, -0.5}));
  CHECK(next[0] == doctest::Approx(0.9625).epsilon(1e-14));
  CHECK(next[1] == doctest::Approx(0.0375).epsilon(1e-14));
}

TEST_CASE("step_discrete: non-finite output aborts with run diagnostics") {
  const DiscreteSystem sys = scalar_map([](double x) { return x * x; });
  Vec x{10.0};
  bool threw = false;
  try {
    for (long i = 0; i < 50; ++i) x = step_discrete(sys, x, i, kZero);
  } catch (const NonFiniteError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("seed") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("propagate_variational_discrete: geometric decay of dz") {
  const DiscreteSystem sys = scalar_map([](double x) { return 0.5 * x; }, [](double) { return 0.5; });
  const Trajectory traj = propagate_variational_discrete(
      sys, make_metric_identity(1), VariationalState(StateVector({4.0}), {1.0}), 10, kZero);
  const auto dz = traj.dz_norms();
  REQUIRE(dz.size() == 11);
  for (int i = 0; i <= 10; ++i) CHECK(dz[i] == doctest::Approx(std::pow(0.5, i)).epsilon(1e-12));
}

TEST_CASE("propagate_variational_discrete: identity map keeps dz constant") {
  const DiscreteSystem sys = scalar_map([](double x) { return x; }, [](double) { return 1.0; });
  const Trajectory traj = propagate_variational_discrete(
      sys, make_metric_identity(1), VariationalState(StateVector({1.0}), {0.7}), 20, kZero);
  for (double lg : traj.dz_log_norms) CHECK(lg == doctest::Approx(std::log(0.7)).epsilon(1e-12));
}

TEST_CASE("propagate_variational_discrete: paired-trajectory oracle for a nonlinear map") {
  const DiscreteSystem sys = scalar_map([](double x) { return 0.9 * std::sin(x); });
  const long n = 100;
  const Trajectory traj = propagate_variational_discrete(
      sys, make_metric_identity(1), VariationalState(StateVector({1.0}), {1.0}), n, kZero);
  const double dz_n = std::exp(traj.dz_log_norms.back());

  const double offset = 1e-7;
  double xa = 1.0, xb = 1.0 + offset;
  for (long i = 0; i < n; ++i) {
    xa = 0.9 * std::sin(xa);
    xb = 0.9 * std::sin(xb);
  }
  const double paired = std::abs(xb - xa) / offset;
  CHECK(std::abs(dz_n - paired) / paired < 1e-4);
}

TEST_CASE("propagate_variational_discrete: zero displacement stays zero") {
  const DiscreteSystem sys = scalar_map([](double x) { return 0.5 * x; }, [](double) { return 0.5; });
  const Trajectory traj = propagate_variational_discrete(
      sys, make_metric_identity(1), VariationalState(StateVector({1.0}), {0.0}), 5, kZero);
  for (double lg : traj.dz_log_norms) CHECK(lg == -std::numeric_limits<double>::infinity());
  for (double v : traj.dz_norms()) CHECK(v == 0.0);
}

TEST_CASE("per-step proof inequality holds on a noisy nonlinear run") {
  DiscreteSystem sys;
  sys.dim = 2;
  sys.map = [](const Vec& x, long, const Vec& xi) {
    return Vec{0.8 * std::sin(x[1]) + 0.1 * xi[0], 0.9 * x[0]};
  };
  const NoisePath path = NoisePath::iid_sequence(Distribution::uniform(-1.0, 1.0), 14, 0);
  VariationalOptions opts;
  opts.track_sigma = true;
  const Trajectory traj = propagate_variational_discrete(
      sys, make_metric_identity(2), VariationalState(StateVector({0.3, -0.2}), {0.6, 0.8}), 200, path,
      opts);
  const StepInequalityCheck check = check_step_inequality(traj);
  CHECK(check.steps == 200);
  CHECK(check.violations == 0);
}

TEST_CASE("default_continuous_step keeps at least 50 steps per cell") {
  CHECK(default_continuous_step(0.1) == doctest::Approx(2e-3));
  CHECK(default_continuous_step(10.0) == doctest::Approx(1e-2));
  CHECK_THROWS_AS(default_continuous_step(0.0), std::invalid_argument);
}

TEST_CASE("build_step_grid: anchors hit exactly, steps never exceed the base step") {
  const std::vector<double> grid = build_step_grid(2.0, 0.3, {1.0});
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 2.0);
  CHECK(std::find(grid.begin(), grid.end(), 1.0) != grid.end());
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    CHECK(grid[i + 1] > grid[i]);
    CHECK(grid[i + 1] - grid[i] <= 0.3 + 1e-12);
  }
}

TEST_CASE("jump alignment: every noise-cell boundary is a grid point") {
  const Partition part = Partition::uniform_cells(0.37);
  const NoisePath path = NoisePath::coarse_grain(part, Distribution::uniform(-1.0, 1.0), 3, 0);
  const std::vector<double> bounds = path.jump_times_in(5.0);
  const std::vector<double> grid = build_step_grid(5.0, 0.1, bounds);
  for (double b : bounds) CHECK(std::find(grid.begin(), grid.end(), b) != grid.end());
}

TEST_CASE("integrate_continuous: exponential decay oracle") {
  const ContinuousSystem sys = scalar_field([](double x, double) { return -x; });
  const Trajectory traj = integrate_continuous(sys, {1.0}, 1.0, 1e-3, kZero, 1000);
  CHECK(std::abs(traj.states.back()[0] - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("integrate_continuous: zero field keeps the state constant") {
  const ContinuousSystem sys = scalar_field([](double, double) { return 0.0; });
  const Trajectory traj = integrate_continuous(sys, {2.5}, 3.0, 0.01, kZero, 10);
  for (const Vec& s : traj.states) CHECK(s[0] == 2.5);
}

TEST_CASE("integrate_continuous: piecewise-exponential closed form") {
  // find a path whose first two cells are G0 = -2, G1 = 0.5
  const Partition part = Partition::uniform_cells(1.0);
  const Distribution dist = Distribution::two_point(-2.0, 0.5);
  std::uint64_t seed = 0;
  for (; seed < 100; ++seed) {
    const NoisePath p = NoisePath::coarse_grain(part, dist, seed, 0);
    if (p.at_time(0.5)[0] == -2.0 && p.at_time(1.5)[0] == 0.5) break;
  }
  REQUIRE(seed < 100);
  const NoisePath path = NoisePath::coarse_grain(part, dist, seed, 0);
  const Trajectory traj = integrate_continuous(linear_random_rate(), {1.0}, 2.0, 0.01, path, 100);
  CHECK(std::abs(traj.states.back()[0] - std::exp(-1.5)) < 1e-8);
}

TEST_CASE("integrate_continuous: per-step growth factor bounded by exp(int lambda_f)") {
  const Partition part = Partition::uniform_cells(0.5);
  const NoisePath path = NoisePath::coarse_grain(part, Distribution::two_point(-2.0, 0.5), 8, 0);
  const double h = 0.01;
  const Trajectory traj = integrate_continuous(linear_random_rate(), make_metric_identity(1),
                                               VariationalState(StateVector({1.0}), {1.0}), 5.0, h, path);
  for (size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double dt = traj.times[i + 1] - traj.times[i];
    const double lambda = path.at_time(traj.times[i])[0];  // constant inside the step
    const double growth = traj.dz_log_norms[i + 1] - traj.dz_log_norms[i];
    CHECK(growth <= lambda * dt + std::log1p(10.0 * h * h));
  }
}

TEST_CASE("envelope dominance along a coarse-grain run") {
  const Partition part = Partition::uniform_cells(1.0);
  const NoisePath path = NoisePath::coarse_grain(part, Distribution::two_point(-2.0, 0.5), 17, 0);
  const double h = 0.01;
  const Trajectory traj =
      integrate_continuous(linear_random_rate(), make_metric_identity(1),
                           VariationalState(StateVector({1.0}), {1.0}), 30.0, h, path, 100);
  std::vector<double> integrals;
  for (long n = 0; n < 30; ++n) integrals.push_back(path.integral_over_cell(n));
  const EnvelopeSequence env = envelope_sequence(integrals, 1.0);
  const EnvelopeCheck check = check_envelope_dominance(traj.dz_log_norms, env);
  CHECK(check.dominated);
}

TEST_CASE("propagate_pair: identical inputs give identically zero separation") {
  const NoisePath path = NoisePath::bounded_zero_mean(Distribution::uniform(-1.0, 1.0), 5, 0, 0.25);
  ContinuousSystem sys;
  sys.dim = 1;
  sys.field = [](const Vec& x, double, const Vec& xi) { return Vec{-x[0] + xi[0]}; };
  const PairTrajectories pair = propagate_pair_continuous(sys, {1.0}, {1.0}, 2.0, 0.01, path, path);
  for (double s : pair.separation) CHECK(s == 0.0);

  const DiscreteSystem dsys = linear_random_gain(Distribution::two_point(0.5, 1.5));
  const NoisePath dpath = NoisePath::iid_sequence(Distribution::two_point(0.5, 1.5), 5, 0);
  const PairTrajectories dpair = propagate_pair_discrete(dsys, {2.0}, {2.0}, 50, dpath, dpath);
  for (double s : dpair.separation) CHECK(s == 0.0);
}

TEST_CASE("propagate_pair: common noise cancels in the linear difference") {
  ContinuousSystem sys;
  sys.dim = 1;
  sys.field = [](const Vec& x, double, const Vec& xi) { return Vec{-x[0] + xi[0]}; };
  const NoisePath path = NoisePath::bounded_zero_mean(Distribution::uniform(-1.0, 1.0), 6, 1, 0.25);
  const double d = 0.3;
  const PairTrajectories pair = propagate_pair_continuous(sys, {1.0 + d}, {1.0}, 3.0, 1e-3, path, path);
  for (size_t i = 0; i < pair.separation.size(); ++i)
    CHECK(std::abs(pair.separation[i] - d * std::exp(-pair.first.times[i])) < 1e-8);
}

TEST_CASE("envelope_sequence recursion") {
  SUBCASE("zero integrals") {
    const EnvelopeSequence env = envelope_sequence({0.0, 0.0, 0.0}, 1.0);
    for (double z : env.z) CHECK(z == 1.0);
  }
  SUBCASE("two-step hand computation") {
    const EnvelopeSequence env = envelope_sequence({-2.0, 0.5}, 1.0);
    REQUIRE(env.z.size() == 3);
    CHECK(env.z[0] == 1.0);
    CHECK(env.z[1] == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    CHECK(env.z[2] == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
    CHECK(env.log_z[2] == doctest::Approx(-1.5));
  }
  SUBCASE("absorbing zero") {
    const EnvelopeSequence env = envelope_sequence({1.0, -1.0}, 0.0);
    for (double z : env.z) CHECK(z == 0.0);
    for (double lz : env.log_z) CHECK(lz == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("determinism: identical run arguments give bit-identical trajectories") {
  const Partition part = Partition::uniform_cells(0.5);
  const NoisePath path = NoisePath::coarse_grain(part, Distribution::uniform(-2.0, 1.0), 40, 7);
  auto run = [&]() {
    return integrate_continuous(linear_random_rate(), make_metric_identity(1),
                                VariationalState(StateVector({1.0}), {1.0}), 10.0, 0.02, path, 5);
  };
  const Trajectory a = run(), b = run();
  REQUIRE(a.times.size() == b.times.size());
  for (size_t i = 0; i < a.times.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.states[i][0] == b.states[i][0]);
    CHECK(a.dz_log_norms[i] == b.dz_log_norms[i]);
  }
}

TEST_CASE("trajectory CSV export") {
  Trajectory traj;
  traj.times = {0.0, 0.5};
  traj.states = {{1.0, 2.0}, {0.5, 1.0}};
  traj.dz_log_norms = {0.0, std::log(0.25)};
  std::ostringstream out;
  write_trajectory_csv(out, traj);
  CHECK(out.str() == "t,x1,x2,dz_norm\n0,1,2,1\n0.5,0.5,1,0.25\n");
}
