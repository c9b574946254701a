#include "jumpsteer/errors.hpp"
#include "jumpsteer/qubit.hpp"
#include "jumpsteer/seeding.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace jumpsteer;
using doctest::Approx;

namespace {

void check_vec(const Vec3& got, const Vec3& want, double tol = 1e-12) {
  CHECK(std::abs(got.x() - want.x()) <= tol);
  CHECK(std::abs(got.y() - want.y()) <= tol);
  CHECK(std::abs(got.z() - want.z()) <= tol);
}

}  // namespace

TEST_CASE("rates are validated") {
  CHECK_THROWS_AS(MEParams(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MEParams(-0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MEParams::from_ratio(-1.0), std::invalid_argument);
  const MEParams p = MEParams::from_ratio(0.25);
  CHECK(p.gamma_minus() == 1.0);
  CHECK(p.gamma_plus() == 0.25);
  CHECK(p.gamma_sigma() == 1.25);
  CHECK(p.gamma_delta() == -0.75);
}

TEST_CASE("drift") {
  SUBCASE("zero at the steady state") {
    const MEParams p = MEParams::from_ratio(1.0 / 3.0);
    check_vec(bloch_drift(steady_state(p), p), Vec3::Zero());
  }
  SUBCASE("x axis with gamma_sigma = 1") {
    const MEParams p(0.3, 0.7);
    check_vec(bloch_drift({1, 0, 0}, p), {-0.5, 0.0, p.gamma_delta()});
  }
  SUBCASE("excited state under pure decay") {
    const MEParams p(0.0, 1.0);
    check_vec(bloch_drift({0, 0, 1}, p), {0, 0, -2});
  }
}

TEST_CASE("steady state") {
  check_vec(steady_state(MEParams::from_ratio(1.0 / 3.0)).vector(), {0, 0, -0.5});
  check_vec(steady_state(MEParams::from_ratio(1.0)).vector(), {0, 0, 0});
  check_vec(steady_state(MEParams::from_ratio(0.0)).vector(), {0, 0, -1});
}

TEST_CASE("relaxation matches the closed form") {
  const MEParams p(0.4, 1.3);
  const BlochState r0{0.6, -0.2, 0.7};
  const double gs = p.gamma_sigma();
  const double zss = p.gamma_delta() / gs;
  for (double t : {0.0, 0.1, 1.0, 3.7}) {
    const BlochState r = bloch_relaxation(r0, p, t);
    CHECK(r.x == Approx(0.6 * std::exp(-gs * t / 2)).epsilon(1e-13));
    CHECK(r.y == Approx(-0.2 * std::exp(-gs * t / 2)).epsilon(1e-13));
    CHECK(r.z == Approx(zss + (0.7 - zss) * std::exp(-gs * t)).epsilon(1e-13));
  }
}

TEST_CASE("euler steps stay in the ball to second order") {
  const MEParams p = MEParams::from_ratio(0.3);
  Rng rng(11);
  const double dt = 1e-4;
  for (int i = 0; i < 500; ++i) {
    Vec3 r(rng.normal(), rng.normal(), rng.normal());
    r *= std::cbrt(rng.uniform()) / r.norm();
    const Vec3 next = r + dt * bloch_drift(BlochState::from_vector(r), p);
    CHECK(next.norm() <= 1.0 + 10 * dt * dt);
  }
}

TEST_CASE("pre_z") {
  const PureEnsemble e = pre_z(MEParams::from_ratio(1.0 / 3.0));
  REQUIRE(e.members().size() == 2);
  CHECK(e.members()[0].probability == Approx(0.25));
  CHECK(e.members()[0].state.z == 1.0);
  CHECK(e.members()[1].probability == Approx(0.75));
  CHECK(e.members()[1].state.z == -1.0);

  const PureEnsemble sym = pre_z(MEParams::from_ratio(1.0));
  CHECK(sym.members()[0].probability == Approx(0.5));

  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const MEParams p = MEParams::from_ratio(3.0 * rng.uniform());
    check_vec(pre_z(p).mean(), steady_state(p).vector());
  }
}

TEST_CASE("pre_phi") {
  const PureEnsemble e = pre_phi(MEParams::from_ratio(1.0 / 3.0), 0.0);
  REQUIRE(e.members().size() == 2);
  for (const auto& m : e.members()) {
    CHECK(m.probability == 0.5);
    CHECK(std::abs(m.state.x) == Approx(std::sqrt(3.0) / 2));
    CHECK(m.state.y == Approx(0.0));
    CHECK(m.state.z == Approx(-0.5));
  }
  const PureEnsemble q = pre_phi(MEParams::from_ratio(1.0), std::numbers::pi / 2);
  for (const auto& m : q.members()) {
    CHECK(std::abs(m.state.x) < 1e-15);
    CHECK(std::abs(m.state.y) == Approx(1.0));
    CHECK(std::abs(m.state.z) < 1e-15);
  }
  CHECK_THROWS_AS(pre_phi(MEParams::from_ratio(0.0), 0.0), std::invalid_argument);

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const MEParams p = MEParams::from_ratio(1e-3 + 5.0 * rng.uniform());
    const double c = equatorial_radius(p);
    const double zss = steady_state(p).z;
    CHECK(c * c + zss * zss == Approx(1.0).epsilon(1e-12));
    const PureEnsemble pe = pre_phi(p, 2 * std::numbers::pi * rng.uniform());
    check_vec(pe.mean(), steady_state(p).vector());
    for (const auto& m : pe.members()) CHECK(std::abs(m.state.radius() - 1.0) <= 1e-12);
  }
}

TEST_CASE("ensemble validation") {
  CHECK_THROWS_AS(PureEnsemble(std::vector<EnsembleMember>{{0.7, {0, 0, 1}}, {0.7, {0, 0, -1}}}), std::invalid_argument);
  CHECK_THROWS_AS(PureEnsemble(std::vector<EnsembleMember>{{1.0, {0, 0, 0.5}}}), std::invalid_argument);
  const PureEnsemble e(std::vector<EnsembleMember>{{0.5, {0, 0, 1}}, {0.5, {0, 0, -1}}});
  CHECK(e.distance_to_nearest({0, 0, 0.9}) == Approx(0.1));
}

TEST_CASE("ball guard") {
  const BlochState inside{0.3, 0.4, 0.5};
  const BlochState kept = enforce_bloch_ball(inside);
  CHECK(kept.x == inside.x);
  CHECK(kept.z == inside.z);
  const BlochState edge = enforce_bloch_ball({0, 0, 1.0 + 5e-10});
  CHECK(edge.z == Approx(1.0).epsilon(1e-15));
  CHECK(edge.radius() <= 1.0);
  CHECK_THROWS_AS(enforce_bloch_ball({0, 0, 1.0 + 1e-6}), NumericFailure);
}
