#include "jumpsteer/direct_detect.hpp"
#include "jumpsteer/jump_sim.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace jumpsteer;
using doctest::Approx;

namespace {

// p(t), z~(t) by fine RK4 on the same linear system, independent of the
// closed form.
Eigen::Vector2d integrate(const Eigen::Matrix2d& m, Eigen::Vector2d v, double t) {
  const int steps = 20000;
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Eigen::Vector2d k1 = m * v;
    const Eigen::Vector2d k2 = m * (v + 0.5 * h * k1);
    const Eigen::Vector2d k3 = m * (v + 0.5 * h * k2);
    const Eigen::Vector2d k4 = m * (v + h * k3);
    v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

}  // namespace

TEST_CASE("inter-jump solution") {
  SUBCASE("pure decay from the excited state") {
    const InterJumpSolution sol(MEParams(0.0, 1.0), 1.0, Pole::north);
    for (double t : {0.0, 0.5, 2.0, 7.0}) {
      const Eigen::Vector2d v = sol.at(t);
      CHECK(v(0) == Approx(std::exp(-t)).epsilon(1e-13));
      CHECK(v(1) == Approx(std::exp(-t)).epsilon(1e-13));
    }
  }
  SUBCASE("closed form agrees with direct integration") {
    for (double r : {0.05, 0.16, 1.0}) {
      for (double eta : {0.1, 0.455, 1.0}) {
        for (Pole pole : {Pole::north, Pole::south}) {
          const MEParams p = MEParams::from_ratio(r);
          const InterJumpSolution sol(p, eta, pole);
          const Eigen::Vector2d v0(1.0, pole == Pole::north ? 1.0 : -1.0);
          for (double t : {0.3, 2.0}) {
            const Eigen::Vector2d want = integrate(sol.coefficients(), v0, t);
            CHECK((sol.at(t) - want).cwiseAbs().maxCoeff() < 1e-11);
          }
        }
      }
    }
  }
  SUBCASE("no detection relaxes like the master equation") {
    const MEParams p = MEParams::from_ratio(0.3);
    const InterJumpSolution sol(p, 0.0, Pole::north);
    const double zss = p.gamma_delta() / p.gamma_sigma();
    for (double t : {0.5, 1.0, 4.0}) {
      CHECK(sol.survival(t) == Approx(1.0).epsilon(1e-14));
      CHECK(sol.z(t) == Approx(zss + (1 - zss) * std::exp(-p.gamma_sigma() * t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("click rates") {
  const MEParams p = MEParams::from_ratio(0.4);
  const double eta = 0.7;
  const InterJumpSolution north(p, eta, Pole::north);
  const BranchRates at0 = branch_jump_rates(north, 0.0);
  CHECK(at0.into_south == Approx(eta * p.gamma_minus()));
  CHECK(at0.into_north == Approx(0.0));
  const BranchRates s0 = branch_jump_rates(InterJumpSolution(p, eta, Pole::south), 0.0);
  CHECK(s0.into_north == Approx(eta * p.gamma_plus()));
  CHECK(s0.into_south == Approx(0.0));

  // -dp/dt = p (w_+ + w_-) along the excursion
  for (double t : {0.1, 1.0, 4.0}) {
    const Eigen::Vector2d v = north.at(t);
    const double pdot = (north.coefficients() * v)(0);
    CHECK(-pdot == Approx(v(0) * branch_jump_rates(north, t).total()).epsilon(1e-12));
  }
  // equal at the steady state z_ss: gamma_-(1 + z) = gamma_+(1 - z)
  const double zss = p.gamma_delta() / p.gamma_sigma();
  CHECK(p.gamma_minus() * (1 + zss) == Approx(p.gamma_plus() * (1 - zss)));
}

TEST_CASE("destination probabilities are one half") {
  for (int i = 1; i <= 10; ++i) {
    for (int j = 1; j <= 10; ++j) {
      const double eta = 0.1 * i;
      const double r = 0.1 * j;
      const DestinationProbabilities d = jump_destination_probs(MEParams::from_ratio(r), eta);
      CHECK(std::abs(d.north - 0.5) < 1e-6);
      CHECK(std::abs(d.south - 0.5) < 1e-6);
      CHECK(d.kernel.row(0).sum() == Approx(1.0).epsilon(1e-8));
      CHECK(d.kernel.row(1).sum() == Approx(1.0).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(jump_destination_probs(MEParams::from_ratio(0.0), 0.5), std::invalid_argument);
}

TEST_CASE("kernel and dwell time against the matrix inverse") {
  // int_0^inf e^{Mt} v0 dt = -M^{-1} v0
  for (double r : {0.16, 0.6}) {
    for (double eta : {0.3, 0.9}) {
      const MEParams p = MEParams::from_ratio(r);
      double dwell = 0.0;
      for (Pole pole : {Pole::north, Pole::south}) {
        const InterJumpSolution sol(p, eta, pole);
        const Eigen::Vector2d v0(1.0, pole == Pole::north ? 1.0 : -1.0);
        const Eigen::Vector2d integral = -sol.coefficients().inverse() * v0;
        dwell += 0.5 * integral(0);
        // into_north = eta g+ (p - z~) / 2 integrated
        const double k_north = 0.5 * eta * p.gamma_plus() * (integral(0) - integral(1));
        const DestinationProbabilities d = jump_destination_probs(p, eta);
        CHECK(d.kernel(pole == Pole::north ? 0 : 1, 0) == Approx(k_north).epsilon(1e-9));
      }
      CHECK(ez_average_detail(p, eta).mean_dwell_time == Approx(dwell).epsilon(1e-9));
    }
  }
}

TEST_CASE("z-unravelling average") {
  CHECK(ez_average(MEParams::from_ratio(0.3), 1.0) == Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(ez_average(MEParams::from_ratio(0.3), 0.0), std::invalid_argument);

  SUBCASE("bounded and decreasing in eta") {
    for (double r : {0.01, 0.16, 0.5, 1.0}) {
      double last = 1.0;
      for (int i = 1; i <= 10; ++i) {
        const double v = ez_average(MEParams::from_ratio(r), 0.1 * i);
        CHECK(v >= 0.0);
        CHECK(v <= last + 1e-12);
        last = v;
      }
    }
  }
  SUBCASE("tolerance halving") {
    for (double r : {0.01, 0.16, 1.0}) {
      for (double eta : {0.05, 0.455, 0.95}) {
        const MEParams p = MEParams::from_ratio(r);
        const double a = ez_average_detail(p, eta, 1e-8).transverse;
        const double b = ez_average_detail(p, eta, 5e-9).transverse;
        CHECK(std::abs(a - b) < 1e-7);
      }
    }
  }
  SUBCASE("agrees with a simulated direct-detection run") {
    const MEParams p = MEParams::from_ratio(0.16);
    JumpRunConfig cfg;
    cfg.n_jumps = 20000;
    const TrajectoryStats st = simulate_jumps_pooled(p, JumpScheme::direct(0.455), cfg, 404, 2, 1);
    const Estimate mc = st.estimate(Observable::transverse);
    CHECK(std::abs(mc.value - ez_average(p, 0.455)) <= 3 * mc.error);
  }
}
