#pragma once

#include "jumpsteer/qubit.hpp"
#include "jumpsteer/stats.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace jumpsteer {

// Conditioned state under homodyne detection of both channels at phase 0;
// it stays in the y = 0 plane.
struct PlanarState {
  double x = 0.0;
  double z = 0.0;

  double radius() const;
};

enum class SdeScheme { euler, milstein };

SdeScheme parse_sde_scheme(std::string_view name);
std::string_view to_string(SdeScheme scheme);

struct SDEConfig {
  double dt = 1e-3;
  double t_burn = 20.0;
  double t_total = 2e4;
  SdeScheme scheme = SdeScheme::milstein;
  std::uint64_t seed = 0;
  // Batch length for standard errors.
  double block_time = 50.0;

  // dt = 1e-3, t_burn = 20, t_total = 2e4, block 50, all in units of
  // 1/gamma_sigma.
  static SDEConfig defaults(const MEParams& params);
  void validate() const;
};

// One step of
//   dx = -(gs/2) x dt + sqrt(eta g-) (1 + z - x^2) dW- + sqrt(eta g+) (1 - z - x^2) dW+
//   dz = (-gs z + gd) dt - sqrt(eta g-) x (1 + z) dW- + sqrt(eta g+) x (1 - z) dW+
// Milstein adds the same-noise corrections 1/2 (L_k g_k)(dW_k^2 - dt); the
// cross-noise Levy-area terms are omitted. The result passes through the
// disk guard (see enforce_bloch_disk). The simulators below additionally
// refine an overshooting step by Brownian-bridge bisection before giving up.
PlanarState diffusive_step(const PlanarState& s, const MEParams& params, double eta, double dt,
                           double dw_lower, double dw_raise, SdeScheme scheme);

// Radius overshoot a single step may produce and still be projected back
// onto the unit circle. A finite-step scheme cannot hold a pure state on
// the boundary to kNormTolerance, so the band scales with the step.
double disk_projection_band(double dt);

// |r| <= 1 passes; 1 < |r| <= 1 + band is projected radially onto the
// circle; beyond that throws NumericFailure.
PlanarState enforce_bloch_disk(const PlanarState& s, double band);

TrajectoryStats simulate_diffusive(const MEParams& params, double eta, const SDEConfig& cfg);

// n_traj trajectories with seeds derive_seed(cfg.seed, k), pooled in order.
TrajectoryStats simulate_diffusive_pooled(const MEParams& params, double eta, const SDEConfig& cfg,
                                          std::size_t n_traj, std::size_t threads);

// Conditioned state at each ascending checkpoint time, from `initial`.
std::vector<PlanarState> diffusive_path(const MEParams& params, double eta, const PlanarState& initial,
                                        std::span<const double> times, std::uint64_t seed, double dt,
                                        SdeScheme scheme);

// Leading-order steady-state moments for R << 1:
// E[x] = 0, E[z] = 2R - 1, Var[x] = 4 eta R, Var[z] = 8 eta^2 R^2.
struct SmallRMoments {
  double mean_x = 0.0;
  double mean_z = 0.0;
  double var_x = 0.0;
  double var_z = 0.0;
};

SmallRMoments small_r_moments(double eta, double ratio);

// g(eta) = sqrt(8 eta / pi) - f (4 - eta^2) / 2, the small-R prefactor with
// the higher-moment correction dropped.
double small_r_prefactor(double eta, double f_bound);

// S ~ g(eta) sqrt(R).
double small_r_steering(double eta, double ratio, double f_bound);

// Root of g on (0, 1]; throws NumericFailure if g does not change sign.
double small_r_critical_efficiency(double f_bound);

}  // namespace jumpsteer
