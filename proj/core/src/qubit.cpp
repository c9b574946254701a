#include "jumpsteer/qubit.hpp"

#include "jumpsteer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace jumpsteer {

MEParams::MEParams(double gamma_plus, double gamma_minus)
    : gamma_plus_(gamma_plus), gamma_minus_(gamma_minus) {
  if (!(gamma_minus > 0.0) || !std::isfinite(gamma_minus)) {
    throw std::invalid_argument("MEParams: gamma_minus must be positive and finite");
  }
  if (!(gamma_plus >= 0.0) || !std::isfinite(gamma_plus)) {
    throw std::invalid_argument("MEParams: gamma_plus must be non-negative and finite");
  }
}

MEParams MEParams::from_ratio(double ratio) { return MEParams(ratio, 1.0); }

double BlochState::radius() const { return std::sqrt(x * x + y * y + z * z); }

PureEnsemble::PureEnsemble(std::vector<EnsembleMember> members) : members_(std::move(members)) {
  double total = 0.0;
  for (const auto& m : members_) {
    if (m.probability < 0.0 || m.probability > 1.0) {
      throw std::invalid_argument("PureEnsemble: probability outside [0, 1]");
    }
    if (std::abs(m.state.radius() - 1.0) > kNormTolerance) {
      throw std::invalid_argument("PureEnsemble: member is not a pure state");
    }
    total += m.probability;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("PureEnsemble: probabilities do not sum to one");
  }
}

Vec3 PureEnsemble::mean() const {
  Vec3 acc = Vec3::Zero();
  for (const auto& m : members_) acc += m.probability * m.state.vector();
  return acc;
}

double PureEnsemble::distance_to_nearest(const Vec3& r) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : members_) best = std::min(best, (m.state.vector() - r).norm());
  return best;
}

Vec3 bloch_drift(const BlochState& state, const MEParams& params) {
  const double gs = params.gamma_sigma();
  return {-0.5 * gs * state.x, -0.5 * gs * state.y, -gs * state.z + params.gamma_delta()};
}

BlochState bloch_relaxation(const BlochState& r0, const MEParams& params, double t) {
  const double gs = params.gamma_sigma();
  const double z_ss = params.gamma_delta() / gs;
  const double transverse = std::exp(-0.5 * gs * t);
  return {r0.x * transverse, r0.y * transverse, z_ss + (r0.z - z_ss) * std::exp(-gs * t)};
}

BlochState steady_state(const MEParams& params) {
  return {0.0, 0.0, params.gamma_delta() / params.gamma_sigma()};
}

double equatorial_radius(const MEParams& params) {
  return 2.0 * std::sqrt(params.gamma_plus() * params.gamma_minus()) / params.gamma_sigma();
}

PureEnsemble pre_z(const MEParams& params) {
  const double up = params.gamma_plus() / params.gamma_sigma();
  return PureEnsemble({{up, {0.0, 0.0, 1.0}}, {1.0 - up, {0.0, 0.0, -1.0}}});
}

PureEnsemble pre_phi(const MEParams& params, double phi) {
  if (params.gamma_plus() == 0.0) {
    throw std::invalid_argument("pre_phi: degenerate ensemble for gamma_plus = 0");
  }
  const double c = equatorial_radius(params);
  const double z_ss = steady_state(params).z;
  const double cx = c * std::cos(phi);
  const double cy = c * std::sin(phi);
  return PureEnsemble({{0.5, {cx, cy, z_ss}}, {0.5, {-cx, -cy, z_ss}}});
}

BlochState enforce_bloch_ball(const BlochState& state, double tolerance) {
  const double r = state.radius();
  if (!std::isfinite(r)) throw NumericFailure("Bloch-ball guard: non-finite state");
  if (r <= 1.0) return state;
  if (r > 1.0 + tolerance) {
    std::ostringstream msg;
    msg << "Bloch-ball guard: |r| = " << r << " exceeds 1 by more than " << tolerance;
    throw NumericFailure(msg.str());
  }
  return {state.x / r, state.y / r, state.z / r};
}

}  // namespace jumpsteer
