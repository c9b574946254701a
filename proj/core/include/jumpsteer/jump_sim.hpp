#pragma once

#include "jumpsteer/errors.hpp"
#include "jumpsteer/qubit.hpp"
#include "jumpsteer/seeding.hpp"
#include "jumpsteer/stats.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace jumpsteer {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// Unnormalized qubit state in the Pauli basis:
//   rho~ = (p I + px sigma_x + py sigma_y + pz sigma_z) / 2, trace weight p.
struct WeightedState {
  Vec4 v = Vec4(1.0, 0.0, 0.0, 0.0);

  static WeightedState from_bloch(const BlochState& s, double weight = 1.0) {
    return {Vec4(weight, weight * s.x, weight * s.y, weight * s.z)};
  }
  double trace() const { return v(0); }
  BlochState normalized() const { return {v(1) / v(0), v(2) / v(0), v(3) / v(0)}; }
  bool is_positive(double tol = kNormTolerance) const {
    return v(0) >= 0.0 && v.tail<3>().norm() <= v(0) + tol;
  }
};

// Output channel: lowering (c_- = sqrt(gamma_-) sigma_-) or raising
// (c_+ = sqrt(gamma_+) sigma_+).
enum class Channel { lowering, raising };

// Detection scheme for both channels at a common efficiency. Direct
// detection has no local oscillator. The adaptive scheme adds the weak LO
// amplitudes mu_l = lo_sign sqrt(gamma_{-l}) e^{l i phi} / 2 and swaps
// lo_sign after every click in either channel.
struct JumpScheme {
  double eta = 1.0;
  double phi = 0.0;
  int lo_sign = +1;
  bool adaptive = false;

  static JumpScheme direct(double eta) { return {eta, 0.0, +1, false}; }
  static JumpScheme adaptive_phi(double eta, double phi, int lo_sign = +1) {
    return {eta, phi, lo_sign, true};
  }

  std::complex<double> lo_amplitude(Channel channel, const MEParams& params) const;
  JumpScheme swapped() const;
  void validate() const;
};

// d v / dt = G v for the no-click evolution
//   drho~/dt = L rho~ - eta (J[c'_-] + J[c'_+]) rho~,  c'_l = c_l + mu_l.
Mat4 no_click_generator(const JumpScheme& scheme, const MEParams& params);

// v -> eta J[c'_l] v in the Pauli basis; its trace row gives the click rate.
Mat4 jump_superoperator(Channel channel, const JumpScheme& scheme, const MEParams& params);

struct JumpWeights {
  double lowering = 0.0;
  double raising = 0.0;
  double total() const { return lowering + raising; }
};

// w_l = eta Tr[c'_l^dag c'_l rho]. Throws NumericFailure if both vanish.
JumpWeights jump_weights(const BlochState& state, const JumpScheme& scheme, const MEParams& params);

// Normalized J[c'_l] rho / Tr[...]. Throws NumericFailure for a channel of
// zero weight. LO swapping is the caller's job.
BlochState apply_jump(const BlochState& state, Channel channel, const JumpScheme& scheme,
                      const MEParams& params);

// Fixed-step classical RK4 for the constant linear system dv/dt = G v. For
// a linear constant system RK4 is the polynomial map
//   P(h) = I + hG + (hG)^2/2 + (hG)^3/6 + (hG)^4/24,
// so the full step is precomputed and partial steps are evaluated on demand.
class NoClickPropagator {
 public:
  NoClickPropagator(const Mat4& generator, double dt);

  double dt() const { return dt_; }
  const Mat4& generator() const { return generator_; }
  const Mat4& step() const { return step_; }
  Mat4 partial(double tau) const;

 private:
  Mat4 generator_;
  double dt_;
  Mat4 step_;
};

// Time tau in (0, h] where trace(P(tau) v) first drops to u, given that
// trace(v) > u >= trace(P(h) v). Bisection to relative tolerance 1e-10.
double bisect_trace_crossing(const NoClickPropagator& prop, const Vec4& v, double h, double u);

struct JumpTimeSample {
  double time = 0.0;
  WeightedState state;  // unnormalized, trace == u up to tolerance
};

// Integrates dv/dt = G v from v0 (trace 1) until the trace first falls to
// u. Returns std::nullopt if t_max is reached first.
std::optional<JumpTimeSample> sample_jump_time(const WeightedState& v0, const Mat4& generator,
                                               double u, double dt, double t_max);

// Default integration step 1e-3 / gamma_sigma.
double default_jump_dt(const MEParams& params);

// Conditioned jump trajectory: piecewise no-click evolution of the
// unnormalized state, jump times by inversion of the survival probability,
// channel selection by relative weights, LO swap after each click.
class JumpProcess {
 public:
  JumpProcess(const MEParams& params, const JumpScheme& scheme, const BlochState& initial,
              std::uint64_t seed, double dt);

  // Advances until the next click or until time t_stop, whichever is first.
  // observe(duration, v_start, v_end) sees every integration segment (both
  // vectors unnormalized, same normalization). Returns true if a click
  // ended the advance.
  template <class Observer>
  bool advance(double t_stop, Observer&& observe);

  BlochState state() const { return WeightedState{v_}.normalized(); }
  double time() const { return time_; }
  std::uint64_t jumps() const { return jumps_; }
  int lo_sign() const { return lo_sign_; }
  Channel last_channel() const { return last_channel_; }
  const MEParams& params() const { return params_; }
  const JumpScheme& base_scheme() const { return scheme_; }

 private:
  struct Branch {
    NoClickPropagator propagator;
    Mat4 lowering;
    Mat4 raising;
  };

  const Branch& branch() const { return branches_[lo_sign_ > 0 ? 0 : 1]; }
  void guard(Vec4& w) const;
  void click();

  MEParams params_;
  JumpScheme scheme_;
  std::array<Branch, 2> branches_;
  Rng rng_;
  Vec4 v_;
  double u_;
  double time_ = 0.0;
  int lo_sign_;
  std::uint64_t jumps_ = 0;
  Channel last_channel_ = Channel::lowering;
};

struct JumpRunConfig {
  std::uint64_t n_burn = 10;
  std::uint64_t n_jumps = 10000;
  std::uint64_t block_jumps = 100;
  double dt = 0.0;  // <= 0 selects default_jump_dt
  int initial_lo_sign = +1;
  std::optional<BlochState> initial;  // defaults to the steady state
  // Record radius extremes and distance to the target ensemble per step.
  bool track_geometry = false;
};

// One trajectory; time averages over the n_jumps inter-click intervals
// that follow the first n_burn clicks.
TrajectoryStats simulate_jumps(const MEParams& params, const JumpScheme& scheme,
                               const JumpRunConfig& cfg, std::uint64_t seed);

// Adaptive equatorial scheme at angle phi.
TrajectoryStats simulate_phi(const MEParams& params, double eta, double phi, std::uint64_t seed,
                             std::uint64_t n_burn, std::uint64_t n_jumps);

// n_traj independent trajectories with seeds derive_seed(base_seed, k),
// pooled in index order.
TrajectoryStats simulate_jumps_pooled(const MEParams& params, const JumpScheme& scheme,
                                      const JumpRunConfig& cfg, std::uint64_t base_seed,
                                      std::size_t n_traj, std::size_t threads);

// Conditioned Bloch vector at each of the (ascending) checkpoint times.
std::vector<BlochState> jump_path(const MEParams& params, const JumpScheme& scheme,
                                  const BlochState& initial, std::span<const double> times,
                                  std::uint64_t seed, double dt = 0.0);

// ---------------------------------------------------------------------------

template <class Observer>
bool JumpProcess::advance(double t_stop, Observer&& observe) {
  for (;;) {
    const double remaining = t_stop - time_;
    if (!(remaining > 0.0)) return false;
    const NoClickPropagator& prop = branch().propagator;
    const bool partial = remaining <= prop.dt();
    const double h = partial ? remaining : prop.dt();
    Vec4 w = partial ? Vec4(prop.partial(h) * v_) : Vec4(prop.step() * v_);

    if (w(0) <= u_) {
      const double tau = bisect_trace_crossing(prop, v_, h, u_);
      w = prop.partial(tau) * v_;
      guard(w);
      observe(tau, v_, w);
      time_ += tau;
      v_ = w;
      click();
      return true;
    }
    guard(w);
    observe(h, v_, w);
    const double next = time_ + h;
    if (next == time_) throw NumericFailure("JumpProcess: step-size underflow");
    time_ = partial ? t_stop : next;
    v_ = w;
    if (partial) return false;
  }
}

}  // namespace jumpsteer
