#pragma once

#include <Eigen/Core>

#include <vector>

namespace jumpsteer {

using Vec3 = Eigen::Vector3d;

// Slack allowed on |r| <= 1 before a state is treated as unphysical.
inline constexpr double kNormTolerance = 1e-9;

// Rates of the two-channel qubit master equation
//   drho/dt = gamma_minus D[sigma_-] rho + gamma_plus D[sigma_+] rho.
class MEParams {
 public:
  MEParams(double gamma_plus, double gamma_minus);

  // Working convention: gamma_minus = 1, gamma_plus = R.
  static MEParams from_ratio(double ratio);

  double gamma_plus() const { return gamma_plus_; }
  double gamma_minus() const { return gamma_minus_; }
  double gamma_sigma() const { return gamma_plus_ + gamma_minus_; }
  double gamma_delta() const { return gamma_plus_ - gamma_minus_; }
  double ratio() const { return gamma_plus_ / gamma_minus_; }

  // Rate of the channel that raises (+1) or lowers (-1) the qubit.
  double gamma(int channel_sign) const { return channel_sign > 0 ? gamma_plus_ : gamma_minus_; }

 private:
  double gamma_plus_;
  double gamma_minus_;
};

struct BlochState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static BlochState from_vector(const Vec3& r) { return {r.x(), r.y(), r.z()}; }
  Vec3 vector() const { return {x, y, z}; }
  double radius() const;
  double purity() const { return 0.5 * (1.0 + x * x + y * y + z * z); }
};

struct EnsembleMember {
  double probability;
  BlochState state;
};

// A finite ensemble of pure states whose mean is the steady state.
class PureEnsemble {
 public:
  explicit PureEnsemble(std::vector<EnsembleMember> members);

  const std::vector<EnsembleMember>& members() const { return members_; }
  Vec3 mean() const;
  // Euclidean distance from r to the closest member.
  double distance_to_nearest(const Vec3& r) const;

 private:
  std::vector<EnsembleMember> members_;
};

// A r + b with A = -gamma_sigma diag(1/2, 1/2, 1), b = (0, 0, gamma_delta).
Vec3 bloch_drift(const BlochState& state, const MEParams& params);

// Solution of the Bloch equation at time t from r0.
BlochState bloch_relaxation(const BlochState& r0, const MEParams& params, double t);

BlochState steady_state(const MEParams& params);

// Radius C = 2 sqrt(gamma_plus gamma_minus) / gamma_sigma of the equatorial
// ensembles.
double equatorial_radius(const MEParams& params);

// Poles, occupied with probabilities gamma_+/gamma_sigma and gamma_-/gamma_sigma.
PureEnsemble pre_z(const MEParams& params);

// {(1/2, (+-C cos phi, +-C sin phi, z_ss))}. Throws std::invalid_argument if
// gamma_plus == 0 (the two members coincide at the ground state).
PureEnsemble pre_phi(const MEParams& params, double phi);

// Bloch-ball guard: states with |r| <= 1 pass unchanged, states within
// kNormTolerance outside are renormalized onto the sphere, anything further
// out throws NumericFailure.
BlochState enforce_bloch_ball(const BlochState& state, double tolerance = kNormTolerance);

}  // namespace jumpsteer
