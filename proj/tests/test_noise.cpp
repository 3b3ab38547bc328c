#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stocon/noise.hpp"

using namespace stocon;
using stocon::testing::simpson;

namespace {
double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
}  // namespace

TEST_CASE("Distribution construction guards") {
  CHECK_THROWS_AS(Distribution::uniform(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::two_point(0.0, 1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(Distribution::clipped_gaussian(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("two-point closed-form moments") {
  const Distribution d = Distribution::two_point(0.5, 1.5);
  CHECK(d.mean() == doctest::Approx(1.0));
  CHECK(d.second_moment() == doctest::Approx(1.25));
  CHECK(*d.mean_log_abs() == doctest::Approx(0.5 * (std::log(0.5) + std::log(1.5))));
  CHECK(*d.mean_log_abs() == doctest::Approx(-0.14384103622589045).epsilon(1e-12));
  CHECK(*d.mean_abs() == doctest::Approx(1.0));
  CHECK(d.support_bound() == 1.5);
  // mass at zero drives E log|X| to -inf by analytic extension
  CHECK(*Distribution::two_point(0.0, 2.0).mean_log_abs() ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("uniform closed-form moments vs quadrature oracles") {
  const Distribution d = Distribution::uniform(0.2, 0.8);
  CHECK(d.mean() == doctest::Approx(0.5));
  CHECK(d.second_moment() == doctest::Approx(0.28).epsilon(1e-14));
  const double mla_quad = simpson([](double x) { return std::log(x); }, 0.2, 0.8, 20000) / 0.6;
  CHECK(*d.mean_log_abs() == doctest::Approx(mla_quad).epsilon(1e-9));

  const Distribution sym = Distribution::uniform(-1.0, 1.0);
  CHECK(sym.mean() == 0.0);
  CHECK(*sym.mean_abs() == doctest::Approx(0.5));
  CHECK(*sym.mean_log_abs() == doctest::Approx(-1.0));  // primitive x log|x| - x
  CHECK(sym.second_moment() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("clipped gaussian moments vs quadrature oracles") {
  const Distribution d = Distribution::clipped_gaussian(0.0, 1.0, 3.0);
  const double mass_in = simpson(std_normal_pdf, -3.0, 3.0, 20000);
  const double m2_quad =
      simpson([](double x) { return x * x * std_normal_pdf(x); }, -3.0, 3.0, 20000) +
      9.0 * (1.0 - mass_in);
  CHECK(d.mean() == 0.0);
  CHECK(d.second_moment() == doctest::Approx(m2_quad).epsilon(1e-8));
  const double abs_quad =
      2.0 * simpson([](double x) { return x * std_normal_pdf(x); }, 0.0, 3.0, 20000) +
      3.0 * (1.0 - mass_in);
  CHECK(*d.mean_abs() == doctest::Approx(abs_quad).epsilon(1e-8));
  CHECK(d.support_bound() == 3.0);
  CHECK(!d.mean_log_abs().has_value());
}

TEST_CASE("iid_sequence: empirical mean matches the closed form") {
  const NoisePath path = NoisePath::iid_sequence(Distribution::two_point(0.5, 1.5), 7, 0);
  double sum = 0.0;
  const long n = 100000;
  for (long i = 0; i < n; ++i) sum += path.at_step(i)[0];
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("iid_sequence: degenerate interval draws exactly zero") {
  const NoisePath path = NoisePath::iid_sequence(Distribution::uniform(0.0, 0.0), 3, 9);
  for (long i = 0; i < 20; ++i) CHECK(path.at_step(i)[0] == 0.0);
}

TEST_CASE("iid_sequence: determinism at a fixed step") {
  const NoisePath a = NoisePath::iid_sequence(Distribution::uniform(-1.0, 1.0), 11, 4);
  const NoisePath b = NoisePath::iid_sequence(Distribution::uniform(-1.0, 1.0), 11, 4);
  CHECK(a.at_step(7)[0] == b.at_step(7)[0]);
  CHECK(a.at_step(7)[0] == a.at_step(7)[0]);
}

TEST_CASE("coarse grain: piecewise constant on cells, right-continuous at boundaries") {
  const Partition part = Partition::uniform_cells(1.0);
  const NoisePath path = NoisePath::coarse_grain(part, Distribution::two_point(-2.0, 0.5), 5, 2);
  for (long n = 0; n < 25; ++n) {
    const double v = path.cell_value(n)[0];
    CHECK(path.at_time(n + 0.0)[0] == v);  // boundary belongs to the right cell
    CHECK(path.at_time(n + 0.25)[0] == v);
    CHECK(path.at_time(n + 0.999)[0] == v);
  }
  CHECK_THROWS_AS(path.at_time(-0.5), std::invalid_argument);
}

TEST_CASE("coarse grain: degenerate distribution gives a constant process") {
  const NoisePath path =
      NoisePath::coarse_grain(Partition::uniform_cells(0.3), Distribution::uniform(4.0, 4.0), 1, 1);
  for (double t : {0.0, 0.1, 0.9, 5.05, 33.3}) CHECK(path.at_time(t)[0] == 4.0);
}

TEST_CASE("integral_over_cell is exact") {
  SUBCASE("unit cell") {
    const NoisePath path =
        NoisePath::coarse_grain(Partition::uniform_cells(1.0), Distribution::two_point(-2.0, 0.5), 5, 2);
    CHECK(path.integral_over_cell(3) == 1.0 * path.cell_value(3)[0]);
  }
  SUBCASE("half cell, constant 4 -> exactly 2") {
    const NoisePath path =
        NoisePath::coarse_grain(Partition::uniform_cells(0.5), Distribution::uniform(4.0, 4.0), 1, 0);
    CHECK(path.integral_over_cell(0) == 2.0);
  }
  SUBCASE("explicit boundaries, constant c over a cell of length L") {
    const Partition part = Partition::from_boundaries({0.5, 2.0, 2.5});
    const NoisePath path = NoisePath::coarse_grain(part, Distribution::uniform(2.0, 2.0), 1, 0);
    CHECK(path.integral_over_cell(1) == doctest::Approx(2.0 * 1.5));
  }
  SUBCASE("non-coarse-grain path rejected") {
    const NoisePath iid = NoisePath::iid_sequence(Distribution::uniform(0.0, 1.0), 1, 0);
    CHECK_THROWS_AS(iid.integral_over_cell(0), std::invalid_argument);
  }
}

TEST_CASE("Partition semantics") {
  const Partition u = Partition::uniform_cells(1.0);
  CHECK(u.cell_index(0.0) == 0);
  CHECK(u.cell_index(3.0) == 3);  // boundary -> right cell
  CHECK(u.cell_index(2.999999) == 2);

  const Partition e = Partition::from_boundaries({0.5, 2.0, 2.5});
  CHECK(e.cell_index(0.0) == 0);
  CHECK(e.cell_index(0.5) == 1);
  CHECK(e.cell_index(2.4) == 2);
  CHECK(e.cell_index(2.5) == 3);
  CHECK(e.cell_length(3) == doctest::Approx(0.5));  // extends with the last cell length
  CHECK(e.cell_index(10.0) == 18);

  CHECK_THROWS_AS(Partition::uniform_cells(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Partition::from_boundaries({1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Partition::from_boundaries({0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("bounded_zero_mean: bound respected, zero mean enforced") {
  CHECK_THROWS_AS(NoisePath::bounded_zero_mean(Distribution::uniform(0.0, 1.0), 1, 0, 0.1),
                  std::invalid_argument);

  const NoisePath u = NoisePath::bounded_zero_mean(Distribution::uniform(-1.0, 1.0), 9, 0, 0.1);
  for (long n = 0; n < 10000; ++n) {
    const double v = u.cell_value(n)[0];
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }

  const NoisePath g = NoisePath::bounded_zero_mean(Distribution::clipped_gaussian(0, 1, 3), 9, 1, 0.1);
  for (long n = 0; n < 10000; ++n) {
    CHECK(std::abs(g.cell_value(n)[0]) <= 3.0);
  }
}

TEST_CASE("bounded_zero_mean: empirical mean near zero (CLT oracle)") {
  const Distribution d = Distribution::uniform(-1.0, 1.0);
  const NoisePath path = NoisePath::bounded_zero_mean(d, 123, 0, 0.5);
  const long n = 100000;
  double sum = 0.0;
  for (long i = 0; i < n; ++i) sum += path.cell_value(i)[0];
  const double sd = std::sqrt(d.variance());
  CHECK(std::abs(sum / n) < 3.0 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("independence diagnostic: consecutive cell integrals uncorrelated") {
  const NoisePath path =
      NoisePath::coarse_grain(Partition::uniform_cells(1.0), Distribution::uniform(-1.0, 1.0), 31, 0);
  const long n = 10000;
  std::vector<double> a(n), b(n);
  for (long i = 0; i < n; ++i) {
    a[i] = path.integral_over_cell(i);
    b[i] = path.integral_over_cell(i + 1);
  }
  double ma = 0, mb = 0;
  for (long i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cab = 0, va = 0, vb = 0;
  for (long i = 0; i < n; ++i) {
    cab += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  CHECK(std::abs(cab / std::sqrt(va * vb)) < 0.03);
}

TEST_CASE("stationarity diagnostic: first and second half cell means agree") {
  const NoisePath path =
      NoisePath::coarse_grain(Partition::uniform_cells(1.0), Distribution::two_point(-2.0, 0.5), 77, 3);
  auto half_mean = [&](long lo, long hi) {
    double s = 0;
    for (long i = lo; i < hi; ++i) s += path.cell_value(i)[0];
    return s / static_cast<double>(hi - lo);
  };
  const double m1 = half_mean(0, 5000), m2 = half_mean(5000, 10000);
  const double sd = std::sqrt(Distribution::two_point(-2.0, 0.5).variance());
  const double se = sd * std::sqrt(2.0 / 5000.0);
  CHECK(std::abs(m1 - m2) < 3.0 * se);
}

TEST_CASE("determinism: equal (seed, path-index, spec) paths agree bit-exactly") {
  const Partition part = Partition::uniform_cells(0.25);
  const Distribution d = Distribution::clipped_gaussian(0.0, 1.0, 4.0);
  const NoisePath a = NoisePath::coarse_grain(part, d, 99, 5);
  const NoisePath b = NoisePath::coarse_grain(part, d, 99, 5);
  RngStream qs = noise_stream(0x123u, 0, 0);
  bool differs_from_other_path = false;
  const NoisePath c = NoisePath::coarse_grain(part, d, 99, 6);
  for (int k = 0; k < 1000; ++k) {
    const double t = 500.0 * qs.next_unit();
    CHECK(a.at_time(t)[0] == b.at_time(t)[0]);
    differs_from_other_path = differs_from_other_path || a.at_time(t)[0] != c.at_time(t)[0];
  }
  CHECK(differs_from_other_path);
}

TEST_CASE("vector paths: per-component laws and independence across components") {
  const Partition part = Partition::uniform_cells(1.0);
  const NoisePath path = NoisePath::coarse_grain(
      part, {Distribution::uniform(0.0, 0.0), Distribution::uniform(1.0, 1.0)}, 4, 0);
  const Vec v = path.at_time(2.5);
  CHECK(v.size() == 2);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 1.0);
  CHECK_THROWS_AS(path.integral_over_cell(0), std::invalid_argument);  // scalar-only
}
