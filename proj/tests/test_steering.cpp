#include "jumpsteer/errors.hpp"
#include "jumpsteer/steering.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace jumpsteer;
using doctest::Approx;

namespace {

// max over a uniform theta grid, with no refinement
double brute_force_f(int n, int points) {
  double best = 0.0;
  for (int i = 0; i < points; ++i) {
    const double theta = std::numbers::pi * i / points;
    double acc = 0.0;
    for (int j = 1; j <= n; ++j) acc += std::abs(std::cos(theta - j * std::numbers::pi / n));
    best = std::max(best, acc / n);
  }
  return best;
}

// (1/n) sum |cos| peaks halfway between two setting angles.
double closed_form_f(int n) { return 1.0 / (n * std::sin(std::numbers::pi / (2.0 * n))); }

SteeringRunConfig quick_run() {
  SteeringRunConfig run;
  run.n_jumps = 2000;
  run.jump_trajectories = 2;
  run.t_total = 1500.0;
  return run;
}

}  // namespace

TEST_CASE("settings") {
  CHECK(Settings::parse("inf").is_infinite());
  CHECK(Settings::parse("4").count() == 4);
  CHECK(Settings::parse("12").label() == "12");
  CHECK(Settings::infinite().label() == "inf");
  CHECK_THROWS_AS(Settings::parse("0"), std::invalid_argument);
  CHECK_THROWS_AS(Settings::parse("-3"), std::invalid_argument);
  CHECK_THROWS_AS(Settings::parse(""), std::invalid_argument);
  CHECK_THROWS_AS(Settings::finite(0), std::invalid_argument);
}

TEST_CASE("f bound") {
  CHECK(f_bound(Settings::infinite()) == 2.0 / std::numbers::pi);
  CHECK(f_bound(Settings::finite(1)) == Approx(1.0).epsilon(1e-12));
  const double f4 = f_bound(Settings::finite(4));
  CHECK(f4 > 2.0 / std::numbers::pi);
  CHECK(f4 < 1.0);
  double last = 1.0 + 1e-12;
  for (int n = 1; n <= 16; ++n) {
    const double f = f_bound(Settings::finite(n));
    CHECK(std::abs(f - closed_form_f(n)) < 1e-10);
    CHECK(std::abs(f - brute_force_f(n, 200000)) < 1e-9);
    CHECK(f <= last);
    CHECK(f >= 2.0 / std::numbers::pi);
    last = f;
  }
}

TEST_CASE("unit efficiency jump point") {
  SteeringRunConfig run = quick_run();
  const SteeringEstimate e = steering_parameter(MEParams::from_ratio(1.0), 1.0, Settings::infinite(), Mode::jump, run, 1);
  CHECK(e.term2.value == Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(e.term2.error == 0.0);
  CHECK(e.s.value == Approx(1.0).epsilon(1e-6));
  CHECK(e.mode == Mode::jump);
}

TEST_CASE("terms are in range and S is assembled from them") {
  SteeringRunConfig run = quick_run();
  for (Mode mode : {Mode::jump, Mode::diffusive}) {
    const SteeringEstimate e = steering_parameter(MEParams::from_ratio(0.16), 0.455, Settings::finite(4), mode, run, 2);
    CHECK(e.term1.value >= 0.0);
    CHECK(e.term1.value <= 1.0);
    CHECK(e.term2.value >= 0.0);
    CHECK(e.term2.value <= 1.0);
    CHECK(e.s.value == Approx(e.term1.value - e.f_n * e.term2.value).epsilon(1e-14));
    CHECK(e.s.error == Approx(std::hypot(e.term1.error, e.f_n * e.term2.error)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(steering_parameter(MEParams::from_ratio(0.16), 1.2, Settings::finite(4), Mode::jump, run, 2),
                  std::invalid_argument);
}

TEST_CASE("time-unit rescaling leaves S unchanged") {
  // gamma_- = 2 with the same ratio is the gamma_- = 1 problem at double speed.
  SteeringRunConfig run = quick_run();
  const SteeringEstimate a = steering_parameter(MEParams(0.3, 1.0), 0.6, Settings::finite(4), Mode::jump, run, 9);
  const SteeringEstimate b = steering_parameter(MEParams(0.6, 2.0), 0.6, Settings::finite(4), Mode::jump, run, 9);
  CHECK(a.term2.value == Approx(b.term2.value).epsilon(1e-9));
  CHECK(std::abs(a.s.value - b.s.value) <= 1e-6 + 1e-3 * std::abs(a.s.value));
}

TEST_CASE("threshold search") {
  SteeringRunConfig run = quick_run();
  EtaSearchConfig search;
  search.tolerance = 0.05;
  const ThresholdResult r = find_eta_c(MEParams::from_ratio(0.16), Settings::finite(4), Mode::jump, run, search, 5);
  CHECK(r.eta_c > 0.35);
  CHECK(r.eta_c < 0.55);
  CHECK(r.evaluations.size() >= 3);

  search.lo = 0.9;
  search.hi = 1.0;
  CHECK_THROWS_AS(find_eta_c(MEParams::from_ratio(0.16), Settings::finite(4), Mode::jump, run, search, 5),
                  NegativeVerdict);
  search.lo = 0.6;
  search.hi = 0.5;
  CHECK_THROWS_AS(find_eta_c(MEParams::from_ratio(0.16), Settings::finite(4), Mode::jump, run, search, 5),
                  std::invalid_argument);
}

TEST_CASE("ratio search") {
  SteeringRunConfig run = quick_run();
  RatioSearchConfig search;
  search.grid_points = 7;
  search.refine_iterations = 4;
  const RatioOptimum r = find_r_opt(0.6, Settings::finite(4), Mode::jump, run, search, 3);
  CHECK(r.violation);
  CHECK(r.at_opt.s.value > 0.0);
  CHECK(r.grid.size() == 7);
  CHECK_FALSE(r.local_maxima.empty());
  for (const auto& g : r.grid) CHECK(g.estimate.s.value <= r.at_opt.s.value + 1e-15);

  const RatioOptimum below = find_r_opt(0.2, Settings::finite(4), Mode::jump, run, search, 3);
  CHECK_FALSE(below.violation);
}

TEST_CASE("sweep") {
  SteeringRunConfig run = quick_run();
  const std::vector<double> etas{0.3, 0.6};
  const std::vector<double> ratios{0.16};
  const std::vector<Settings> ns{Settings::finite(4)};
  const std::vector<Mode> modes{Mode::jump};
  const auto points = sweep_grid(etas, ratios, ns, modes);
  REQUIRE(points.size() == 2);
  const auto rows = sweep(points, run, 42);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].point.eta == 0.3);
  CHECK(rows[0].seed != rows[1].seed);
  REQUIRE(rows[0].estimate);
  REQUIRE(rows[1].estimate);
  CHECK(rows[0].estimate->s.value < rows[1].estimate->s.value);

  const std::vector<SweepPoint> bad{{0.5, -1.0, Settings::finite(4), Mode::jump}, points[0]};
  const auto mixed = sweep(bad, run, 42);
  CHECK_FALSE(mixed[0].estimate);
  CHECK_FALSE(mixed[0].error.empty());
  CHECK(mixed[1].estimate);

  CHECK(sweep(std::vector<SweepPoint>{}, run, 1).empty());

  const std::vector<double> grid_eta{0.1, 0.2};
  const std::vector<double> grid_r{0.1, 0.2, 0.3};
  const std::vector<Settings> grid_n{Settings::finite(2), Settings::infinite()};
  const std::vector<Mode> grid_m{Mode::jump, Mode::diffusive};
  const auto order = sweep_grid(grid_eta, grid_r, grid_n, grid_m);
  REQUIRE(order.size() == 24);
  CHECK(order[1].mode == Mode::diffusive);
  CHECK(order[2].n.is_infinite());
  CHECK(order[4].ratio == 0.2);
  CHECK(order[12].eta == 0.2);
}
