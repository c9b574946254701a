#pragma once

#include "jumpsteer/qubit.hpp"

#include <Eigen/Dense>

namespace jumpsteer {

// Post-jump pole: + is the excited state (0,0,1), - the ground state.
enum class Pole { north, south };

// Unnormalized no-click evolution after a direct-detection click,
//   rho~(t) = [p(t) + z~(t) sigma_z] / 2,
// obtained from Tr[rho~] and Tr[sigma_z rho~] of the no-click equation:
//   dp/dt  = -(eta/2) (gamma_sigma p - gamma_delta z~)
//   dz~/dt = (eta/2 - 1) (gamma_sigma z~ - gamma_delta p)
// with p(0) = 1, z~(0) = +-1. The solution is the closed-form exponential of
// the 2x2 coefficient matrix.
class InterJumpSolution {
 public:
  InterJumpSolution(const MEParams& params, double eta, Pole start);

  const Eigen::Matrix2d& coefficients() const { return m_; }
  // Decay rates (negated eigenvalues), slow <= fast.
  double slow_rate() const { return slow_rate_; }
  double fast_rate() const { return fast_rate_; }

  // (p(t), z~(t)).
  Eigen::Vector2d at(double t) const;
  double survival(double t) const { return at(t)(0); }
  double z(double t) const;

  double eta() const { return eta_; }
  Pole start() const { return start_; }
  const MEParams& params() const { return params_; }

 private:
  MEParams params_;
  double eta_;
  Pole start_;
  Eigen::Matrix2d m_;
  double mean_;     // trace / 2
  double half_gap_;  // sqrt(disc) / 2
  double slow_rate_;
  double fast_rate_;
};

InterJumpSolution inter_jump_solution(const MEParams& params, double eta, Pole start);

// Click rates at time t of the no-click evolution (normalized state):
//   into_south = eta gamma_- (1 + z) / 2   (lowering channel)
//   into_north = eta gamma_+ (1 - z) / 2   (raising channel)
struct BranchRates {
  double into_north = 0.0;
  double into_south = 0.0;
  double total() const { return into_north + into_south; }
};

BranchRates branch_jump_rates(const InterJumpSolution& sol, double t);

// Stationary probabilities of landing in each pole after a click, from the
// kernel K(l, j) = int_0^inf p^l(t) w_j^l(t) dt and the 2x2 fixed point
// P_j = sum_l P_l K(l, j).
struct DestinationProbabilities {
  double north = 0.0;
  double south = 0.0;
  Eigen::Matrix2d kernel;  // rows: start pole (north, south); cols: destination
};

// Requires 0 < eta <= 1 and gamma_+ > 0. Kernel entries by adaptive
// quadrature; throws NumericFailure on non-convergence.
DestinationProbabilities jump_destination_probs(const MEParams& params, double eta);

struct ZUnravellingAverage {
  double transverse = 0.0;       // E^z[sqrt(1 - <sigma_z>^2)]
  double mean_dwell_time = 0.0;  // sum_l 1/2 int p^l dt
  double quadrature_error = 0.0;
};

// Ensemble average of sqrt(1 - z^2) under direct detection, weighting both
// post-jump poles by 1/2. Requires 0 < eta <= 1 and gamma_+ > 0.
ZUnravellingAverage ez_average_detail(const MEParams& params, double eta, double tolerance = 1e-10);

double ez_average(const MEParams& params, double eta);

}  // namespace jumpsteer
