#include "jumpsteer/jump_sim.hpp"
#include "jumpsteer/seeding.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace jumpsteer;
using doctest::Approx;

namespace {

BlochState random_state(Rng& rng) {
  Vec3 r(rng.normal(), rng.normal(), rng.normal());
  r *= std::cbrt(rng.uniform()) / r.norm();
  return BlochState::from_vector(r);
}

bool within(const Estimate& a, const Estimate& b, double sigmas) {
  return std::abs(a.value - b.value) <= sigmas * std::hypot(a.error, b.error);
}

}  // namespace

TEST_CASE("no-click generator without detection is the Bloch equation") {
  const MEParams p = MEParams::from_ratio(0.37);
  const Mat4 g = no_click_generator(JumpScheme::direct(0.0), p);
  CHECK(g.row(0).cwiseAbs().maxCoeff() < 1e-15);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const BlochState s = random_state(rng);
    const Vec4 dv = g * WeightedState::from_bloch(s).v;
    const Vec3 drift = bloch_drift(s, p);
    CHECK((dv.tail<3>() - drift).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("pure decay survival") {
  const MEParams p(0.0, 1.0);
  const Mat4 g = no_click_generator(JumpScheme::direct(1.0), p);
  const NoClickPropagator prop(g, 1e-3);
  Vec4 v(1, 0, 0, 1);
  for (int k = 1; k <= 2000; ++k) {
    v = prop.step() * v;
    if (k % 500 == 0) CHECK(v(0) == Approx(std::exp(-1e-3 * k)).epsilon(1e-11));
  }
  CHECK(v(3) == Approx(v(0)).epsilon(1e-12));
}

TEST_CASE("trace rate equals the summed click weights") {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const MEParams p = MEParams::from_ratio(2.0 * rng.uniform());
    const double eta = rng.uniform();
    const JumpScheme scheme = (i % 2) ? JumpScheme::direct(eta)
                                      : JumpScheme::adaptive_phi(eta, 6.0 * rng.uniform(), i % 4 ? 1 : -1);
    const BlochState s = random_state(rng);
    const Vec4 dv = no_click_generator(scheme, p) * WeightedState::from_bloch(s).v;
    const JumpWeights w = jump_weights(s, scheme, p);
    CHECK(-dv(0) == Approx(w.total()).epsilon(1e-12));
  }
}

TEST_CASE("jump time inversion") {
  const MEParams p(0.0, 1.0);
  const Mat4 g = no_click_generator(JumpScheme::direct(1.0), p);
  const WeightedState excited{Vec4(1, 0, 0, 1)};
  const auto half = sample_jump_time(excited, g, 0.5, 1e-3, 100.0);
  REQUIRE(half);
  CHECK(half->time == Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(half->state.trace() == Approx(0.5).epsilon(1e-9));

  const auto early = sample_jump_time(excited, g, 1.0 - 1e-9, 1e-3, 100.0);
  REQUIRE(early);
  CHECK(early->time < 1e-8);

  double last = 0.0;
  for (double u : {0.9, 0.7, 0.4, 0.1, 0.01}) {
    const auto s = sample_jump_time(excited, g, u, 1e-3, 100.0);
    REQUIRE(s);
    CHECK(s->time > last);
    last = s->time;
  }
  CHECK_FALSE(sample_jump_time(excited, g, 1e-6, 1e-3, 1.0));
}

TEST_CASE("click weights") {
  const MEParams p = MEParams::from_ratio(0.3);
  const double eta = 0.6;
  const JumpScheme direct = JumpScheme::direct(eta);
  const JumpWeights north = jump_weights({0, 0, 1}, direct, p);
  CHECK(north.lowering == Approx(eta * p.gamma_minus()));
  CHECK(north.raising == Approx(0.0));
  const JumpWeights south = jump_weights({0, 0, -1}, direct, p);
  CHECK(south.lowering == Approx(0.0));
  CHECK(south.raising == Approx(eta * p.gamma_plus()));
  const JumpWeights ss = jump_weights(steady_state(p), direct, p);
  CHECK(ss.lowering / ss.raising == Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(jump_weights({0, 0, 0}, JumpScheme::direct(0.0), p), NumericFailure);
}

TEST_CASE("post-jump states without a local oscillator") {
  const MEParams p = MEParams::from_ratio(0.5);
  const JumpScheme direct = JumpScheme::direct(0.8);
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    BlochState s = random_state(rng);
    if (s.z > 0.99 || s.z < -0.99) continue;
    const BlochState up = apply_jump(s, Channel::raising, direct, p);
    CHECK(up.z == Approx(1.0));
    CHECK(std::abs(up.x) < 1e-14);
    const BlochState down = apply_jump(s, Channel::lowering, direct, p);
    CHECK(down.z == Approx(-1.0));
  }
  CHECK_THROWS_AS(apply_jump({0, 0, 1}, Channel::raising, direct, p), NumericFailure);
}

TEST_CASE("unit efficiency adaptive scheme hops between the two equatorial members") {
  const MEParams p = MEParams::from_ratio(1.0 / 3.0);
  const JumpScheme scheme = JumpScheme::adaptive_phi(1.0, 0.0);
  JumpProcess proc(p, scheme, steady_state(p), 21, default_jump_dt(p));
  const PureEnsemble target = pre_phi(p, 0.0);
  auto ignore = [](double, const Vec4&, const Vec4&) {};
  for (int k = 0; k < 10; ++k) {
    while (!proc.advance(1e9, ignore)) {
    }
  }
  double last_x = proc.state().x;
  for (int k = 0; k < 200; ++k) {
    while (!proc.advance(1e9, ignore)) {
    }
    const BlochState s = proc.state();
    CHECK(target.distance_to_nearest(s.vector()) < 1e-6);
    CHECK(s.x * last_x < 0.0);
    last_x = s.x;
  }
}

TEST_CASE("unit efficiency estimates equal the equatorial radius") {
  JumpRunConfig cfg;
  cfg.n_jumps = 2000;
  cfg.track_geometry = true;
  for (double r : {1.0, 1.0 / 3.0}) {
    const MEParams p = MEParams::from_ratio(r);
    const TrajectoryStats st = simulate_jumps(p, JumpScheme::adaptive_phi(1.0, 0.0), cfg, 5);
    const Estimate e = st.estimate(Observable::abs_sigma_phi);
    CHECK(std::abs(e.value - equatorial_radius(p)) <= 1e-6 + 3 * e.error);
    CHECK(st.min_radius > 1.0 - 1e-6);
    CHECK(st.max_ensemble_distance < 1e-6);
  }
  CHECK(equatorial_radius(MEParams::from_ratio(1.0 / 3.0)) == Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("direct detection occupies the poles with the steady-state weights") {
  const MEParams p = MEParams::from_ratio(0.4);
  JumpRunConfig cfg;
  cfg.n_jumps = 5000;
  cfg.track_geometry = true;
  const TrajectoryStats st = simulate_jumps(p, JumpScheme::direct(1.0), cfg, 9);
  CHECK(st.max_ensemble_distance < 1e-6);
  const Estimate z = st.estimate(Observable::z);
  const double north = 0.5 * (1.0 + z.value);
  CHECK(std::abs(north - p.gamma_plus() / p.gamma_sigma()) <= 3 * 0.5 * z.error);
}

TEST_CASE("estimator does not depend on phi or the initial LO sign") {
  const MEParams p = MEParams::from_ratio(0.16);
  JumpRunConfig cfg;
  cfg.n_jumps = 3000;
  const Estimate a0 = simulate_jumps(p, JumpScheme::adaptive_phi(0.455, 0.0), cfg, 31).estimate(Observable::abs_sigma_phi);
  const Estimate a1 = simulate_jumps(p, JumpScheme::adaptive_phi(0.455, std::numbers::pi / 2), cfg, 32)
                          .estimate(Observable::abs_sigma_phi);
  CHECK(within(a0, a1, 3.0));
  cfg.initial_lo_sign = -1;
  const Estimate a2 = simulate_jumps(p, JumpScheme::adaptive_phi(0.455, 0.0), cfg, 33).estimate(Observable::abs_sigma_phi);
  CHECK(within(a0, a2, 3.0));
}

TEST_CASE("determinism") {
  const MEParams p = MEParams::from_ratio(0.2);
  JumpRunConfig cfg;
  cfg.n_jumps = 500;
  const JumpScheme scheme = JumpScheme::adaptive_phi(0.6, 0.3);
  const TrajectoryStats a = simulate_jumps_pooled(p, scheme, cfg, 77, 3, 1);
  const TrajectoryStats b = simulate_jumps_pooled(p, scheme, cfg, 77, 3, 3);
  for (std::size_t i = 0; i < kObservableCount; ++i) {
    const auto obs = static_cast<Observable>(i);
    CHECK(a.estimate(obs).value == b.estimate(obs).value);
    CHECK(a.estimate(obs).error == b.estimate(obs).error);
  }
  CHECK(a.total_time() == b.total_time());
  const TrajectoryStats c = simulate_jumps_pooled(p, scheme, cfg, 78, 3, 1);
  CHECK(a.total_time() != c.total_time());
}

TEST_CASE("conditioned states stay physical") {
  const MEParams p = MEParams::from_ratio(0.7);
  std::vector<double> times;
  for (int k = 1; k <= 400; ++k) times.push_back(0.05 * k);
  const auto path = jump_path(p, JumpScheme::adaptive_phi(0.9, 1.1), {0.2, -0.3, 0.4}, times, 4);
  for (const auto& s : path) CHECK(s.radius() <= 1.0 + 1e-12);
  CHECK_THROWS_AS(jump_path(p, JumpScheme::direct(0.5), {0, 0, 0}, std::vector<double>{1.0, 0.5}, 1),
                  std::invalid_argument);
}

TEST_CASE("ensemble mean follows the master equation") {
  const MEParams p = MEParams::from_ratio(0.3);
  const BlochState r0{0.6, 0.0, 0.8};
  const std::vector<double> times{0.3, 1.0, 2.5};
  const int n = 400;
  std::vector<RunningMean> xs(times.size()), zs(times.size());
  for (int k = 0; k < n; ++k) {
    const auto path = jump_path(p, JumpScheme::adaptive_phi(0.7, 0.0), r0, times, derive_seed(55, k));
    for (std::size_t i = 0; i < times.size(); ++i) {
      xs[i].add(path[i].x);
      zs[i].add(path[i].z);
    }
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const BlochState want = bloch_relaxation(r0, p, times[i]);
    CHECK(std::abs(xs[i].mean() - want.x) <= 3.5 * xs[i].stderr_of_mean());
    CHECK(std::abs(zs[i].mean() - want.z) <= 3.5 * zs[i].stderr_of_mean());
  }
}

TEST_CASE("scheme validation") {
  CHECK_THROWS_AS(JumpScheme::direct(1.5).validate(), std::invalid_argument);
  CHECK_THROWS_AS(JumpScheme::adaptive_phi(0.5, 0.0, 0).validate(), std::invalid_argument);
  const JumpScheme s = JumpScheme::adaptive_phi(0.5, 0.2, 1);
  CHECK(s.swapped().lo_sign == -1);
  const MEParams p = MEParams::from_ratio(0.25);
  CHECK(std::abs(s.lo_amplitude(Channel::raising, p)) == Approx(0.5));
  CHECK(std::abs(s.lo_amplitude(Channel::lowering, p)) == Approx(0.25));
}
