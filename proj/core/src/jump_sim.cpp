#include "jumpsteer/jump_sim.hpp"

#include "jumpsteer/parallel.hpp"

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>

namespace jumpsteer {

namespace {

using Mat2c = Eigen::Matrix2cd;
using cdouble = std::complex<double>;

const std::array<Mat2c, 4>& pauli_basis() {
  static const std::array<Mat2c, 4> basis = [] {
    std::array<Mat2c, 4> b;
    b[0] << 1, 0, 0, 1;
    b[1] << 0, 1, 1, 0;
    b[2] << 0, cdouble(0, -1), cdouble(0, 1), 0;
    b[3] << 1, 0, 0, -1;
    return b;
  }();
  return basis;
}

// sigma_+ = |e><g|, sigma_- = |g><e| with |e> = (1, 0).
Mat2c sigma_raise() {
  Mat2c m;
  m << 0, 1, 0, 0;
  return m;
}

Mat2c sigma_lower() {
  Mat2c m;
  m << 0, 0, 1, 0;
  return m;
}

Mat2c sandwich(const Mat2c& c, const Mat2c& rho) { return c * rho * c.adjoint(); }

Mat2c dissipator(const Mat2c& c, const Mat2c& rho) {
  const Mat2c cdc = c.adjoint() * c;
  return c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc);
}

// Matrix of a linear superoperator in the (I, sx, sy, sz) coordinates.
template <class Super>
Mat4 pauli_matrix(Super&& super) {
  const auto& p = pauli_basis();
  Mat4 m;
  for (int k = 0; k < 4; ++k) {
    const Mat2c out = super(Mat2c(0.5 * p[static_cast<std::size_t>(k)]));
    for (int i = 0; i < 4; ++i) m(i, k) = (p[static_cast<std::size_t>(i)] * out).trace().real();
  }
  return m;
}

Mat2c jump_operator(Channel channel, const JumpScheme& scheme, const MEParams& params) {
  const Mat2c base = channel == Channel::raising ? Mat2c(std::sqrt(params.gamma_plus()) * sigma_raise())
                                                 : Mat2c(std::sqrt(params.gamma_minus()) * sigma_lower());
  return base + scheme.lo_amplitude(channel, params) * Mat2c::Identity();
}

struct ObservableValues {
  BlockTimeAverages::Integrals values{};

  ObservableValues() = default;
  ObservableValues(const Vec4& v, double cos_phi, double sin_phi) {
    const double x = v(1) / v(0);
    const double y = v(2) / v(0);
    const double z = v(3) / v(0);
    values[static_cast<std::size_t>(Observable::abs_sigma_phi)] = std::abs(x * cos_phi + y * sin_phi);
    values[static_cast<std::size_t>(Observable::transverse)] = std::sqrt(std::max(0.0, 1.0 - z * z));
    values[static_cast<std::size_t>(Observable::x)] = x;
    values[static_cast<std::size_t>(Observable::y)] = y;
    values[static_cast<std::size_t>(Observable::z)] = z;
    values[static_cast<std::size_t>(Observable::x_squared)] = x * x;
    values[static_cast<std::size_t>(Observable::z_squared)] = z * z;
  }
};

}  // namespace

std::complex<double> JumpScheme::lo_amplitude(Channel channel, const MEParams& params) const {
  if (!adaptive) return {0.0, 0.0};
  const double sign = lo_sign > 0 ? 1.0 : -1.0;
  if (channel == Channel::raising) {
    return sign * std::sqrt(params.gamma_minus()) * std::polar(1.0, phi) / 2.0;
  }
  return sign * std::sqrt(params.gamma_plus()) * std::polar(1.0, -phi) / 2.0;
}

JumpScheme JumpScheme::swapped() const {
  JumpScheme s = *this;
  s.lo_sign = -lo_sign;
  return s;
}

void JumpScheme::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("JumpScheme: eta outside [0, 1]");
  if (lo_sign != 1 && lo_sign != -1) throw std::invalid_argument("JumpScheme: lo_sign must be +-1");
  if (!std::isfinite(phi)) throw std::invalid_argument("JumpScheme: phi must be finite");
}

Mat4 no_click_generator(const JumpScheme& scheme, const MEParams& params) {
  scheme.validate();
  const Mat2c c_lower = std::sqrt(params.gamma_minus()) * sigma_lower();
  const Mat2c c_raise = std::sqrt(params.gamma_plus()) * sigma_raise();
  const Mat2c j_lower = jump_operator(Channel::lowering, scheme, params);
  const Mat2c j_raise = jump_operator(Channel::raising, scheme, params);
  const double eta = scheme.eta;
  return pauli_matrix([&](const Mat2c& rho) -> Mat2c {
    return dissipator(c_lower, rho) + dissipator(c_raise, rho) -
           eta * (sandwich(j_lower, rho) + sandwich(j_raise, rho));
  });
}

Mat4 jump_superoperator(Channel channel, const JumpScheme& scheme, const MEParams& params) {
  scheme.validate();
  const Mat2c c = jump_operator(channel, scheme, params);
  const double eta = scheme.eta;
  return pauli_matrix([&](const Mat2c& rho) -> Mat2c { return eta * sandwich(c, rho); });
}

JumpWeights jump_weights(const BlochState& state, const JumpScheme& scheme, const MEParams& params) {
  const Vec4 v = WeightedState::from_bloch(state).v;
  JumpWeights w;
  w.lowering = std::max(0.0, (jump_superoperator(Channel::lowering, scheme, params) * v)(0));
  w.raising = std::max(0.0, (jump_superoperator(Channel::raising, scheme, params) * v)(0));
  if (!(w.total() > 0.0)) throw NumericFailure("jump_weights: both channels have zero weight");
  return w;
}

BlochState apply_jump(const BlochState& state, Channel channel, const JumpScheme& scheme,
                      const MEParams& params) {
  const Vec4 w = jump_superoperator(channel, scheme, params) * WeightedState::from_bloch(state).v;
  if (!(w(0) > 0.0)) throw NumericFailure("apply_jump: selected channel has zero weight");
  return enforce_bloch_ball(WeightedState{w}.normalized());
}

NoClickPropagator::NoClickPropagator(const Mat4& generator, double dt)
    : generator_(generator), dt_(dt), step_(Mat4::Identity()) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("NoClickPropagator: dt must be positive");
  step_ = partial(dt);
}

Mat4 NoClickPropagator::partial(double tau) const {
  const Mat4 a = tau * generator_;
  const Mat4 id = Mat4::Identity();
  return id + a * (id + (a / 2.0) * (id + (a / 3.0) * (id + a / 4.0)));
}

double bisect_trace_crossing(const NoClickPropagator& prop, const Vec4& v, double h, double u) {
  // trace(P(tau) v) = sum_k tau^k / k! (G^k v)_0 for k <= 4.
  std::array<double, 5> coeff{};
  Vec4 gk = v;
  double factorial = 1.0;
  for (int k = 0; k < 5; ++k) {
    if (k > 0) {
      gk = prop.generator() * gk;
      factorial *= k;
    }
    coeff[static_cast<std::size_t>(k)] = gk(0) / factorial;
  }
  auto trace_at = [&coeff](double tau) {
    return coeff[0] + tau * (coeff[1] + tau * (coeff[2] + tau * (coeff[3] + tau * coeff[4])));
  };
  double lo = 0.0;
  double hi = h;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (trace_at(mid) <= u) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::optional<JumpTimeSample> sample_jump_time(const WeightedState& v0, const Mat4& generator,
                                               double u, double dt, double t_max) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("sample_jump_time: u must lie in (0, 1)");
  if (std::abs(v0.trace() - 1.0) > 1e-12) {
    throw std::invalid_argument("sample_jump_time: initial state must have unit trace");
  }
  if (!(dt > 0.0)) throw NumericFailure("sample_jump_time: step-size underflow");
  const NoClickPropagator prop(generator, dt);
  Vec4 v = v0.v;
  double t = 0.0;
  while (t < t_max) {
    const bool partial = t_max - t <= dt;
    const double h = partial ? t_max - t : dt;
    const Vec4 w = partial ? Vec4(prop.partial(h) * v) : Vec4(prop.step() * v);
    if (w(0) <= u) {
      const double tau = bisect_trace_crossing(prop, v, h, u);
      return JumpTimeSample{t + tau, WeightedState{prop.partial(tau) * v}};
    }
    if (t + h == t) throw NumericFailure("sample_jump_time: step-size underflow");
    t = partial ? t_max : t + h;
    v = w;
  }
  return std::nullopt;
}

double default_jump_dt(const MEParams& params) { return 1e-3 / params.gamma_sigma(); }

JumpProcess::JumpProcess(const MEParams& params, const JumpScheme& scheme, const BlochState& initial,
                         std::uint64_t seed, double dt)
    : params_(params),
      scheme_(scheme),
      branches_{[&] {
        JumpScheme plus = scheme;
        if (scheme.adaptive) plus.lo_sign = +1;
        return Branch{NoClickPropagator(no_click_generator(plus, params), dt),
                      jump_superoperator(Channel::lowering, plus, params),
                      jump_superoperator(Channel::raising, plus, params)};
      }(),
                [&] {
                  JumpScheme minus = scheme;
                  if (scheme.adaptive) minus.lo_sign = -1;
                  return Branch{NoClickPropagator(no_click_generator(minus, params), dt),
                                jump_superoperator(Channel::lowering, minus, params),
                                jump_superoperator(Channel::raising, minus, params)};
                }()},
      rng_(seed),
      v_(WeightedState::from_bloch(enforce_bloch_ball(initial)).v),
      u_(rng_.uniform()),
      lo_sign_(scheme.lo_sign) {}

void JumpProcess::guard(Vec4& w) const {
  if (!(w(0) > 0.0)) throw NumericFailure("JumpProcess: trace weight is no longer positive");
  const double r2 = w.tail<3>().squaredNorm();
  if (r2 > w(0) * w(0)) {
    const BlochState s = enforce_bloch_ball(WeightedState{w}.normalized());
    w.tail<3>() = w(0) * s.vector();
  }
}

void JumpProcess::click() {
  const Branch& b = branch();
  const Vec4 lower = b.lowering * v_;
  const Vec4 raise = b.raising * v_;
  const double wl = std::max(0.0, lower(0));
  const double wr = std::max(0.0, raise(0));
  if (!(wl + wr > 0.0)) throw NumericFailure("JumpProcess: click with zero total weight");
  if (rng_.uniform() * (wl + wr) < wl) {
    v_ = lower / lower(0);
    last_channel_ = Channel::lowering;
  } else {
    v_ = raise / raise(0);
    last_channel_ = Channel::raising;
  }
  guard(v_);
  if (scheme_.adaptive) lo_sign_ = -lo_sign_;
  ++jumps_;
  u_ = rng_.uniform();
}

TrajectoryStats simulate_jumps(const MEParams& params, const JumpScheme& scheme,
                               const JumpRunConfig& cfg, std::uint64_t seed) {
  if (cfg.n_jumps < 1) throw std::invalid_argument("simulate_jumps: n_jumps must be >= 1");
  if (cfg.block_jumps < 1) throw std::invalid_argument("simulate_jumps: block_jumps must be >= 1");
  JumpScheme start = scheme;
  start.lo_sign = cfg.initial_lo_sign;
  start.validate();
  const double dt = cfg.dt > 0.0 ? cfg.dt : default_jump_dt(params);
  JumpProcess proc(params, start, cfg.initial.value_or(steady_state(params)), seed, dt);

  constexpr double kForever = std::numeric_limits<double>::infinity();
  auto ignore = [](double, const Vec4&, const Vec4&) {};
  for (std::uint64_t i = 0; i < cfg.n_burn; ++i) proc.advance(kForever, ignore);

  std::optional<PureEnsemble> target;
  if (!scheme.adaptive) {
    target = pre_z(params);
  } else if (params.gamma_plus() > 0.0) {
    target = pre_phi(params, scheme.phi);
  }

  TrajectoryStats stats;
  stats.burn_in_jumps = cfg.n_burn;
  const double cos_phi = std::cos(scheme.phi);
  const double sin_phi = std::sin(scheme.phi);

  ObservableValues prev;
  bool fresh = true;
  BlockTimeAverages::Integrals interval{};
  double interval_time = 0.0;
  auto observe = [&](double duration, const Vec4& a, const Vec4& b) {
    if (fresh) {
      prev = ObservableValues(a, cos_phi, sin_phi);
      fresh = false;
    }
    const ObservableValues next(b, cos_phi, sin_phi);
    for (std::size_t i = 0; i < kObservableCount; ++i) {
      interval[i] += 0.5 * duration * (prev.values[i] + next.values[i]);
    }
    interval_time += duration;
    prev = next;

    if (!cfg.track_geometry) return;
    const Vec3 r = b.tail<3>() / b(0);
    const double radius = r.norm();
    stats.min_radius = std::min(stats.min_radius, radius);
    stats.max_radius = std::max(stats.max_radius, radius);
    if (target) {
      stats.max_ensemble_distance = std::max(stats.max_ensemble_distance, target->distance_to_nearest(r));
    }
  };

  for (std::uint64_t j = 1; j <= cfg.n_jumps; ++j) {
    fresh = true;
    while (!proc.advance(kForever, observe)) {
    }
    stats.averages.add(interval_time, interval);
    interval.fill(0.0);
    interval_time = 0.0;
    if (j % cfg.block_jumps == 0 && cfg.n_jumps - j >= cfg.block_jumps) stats.averages.close_block();
  }
  stats.averages.close_block();
  stats.jumps = cfg.n_jumps;
  return stats;
}

TrajectoryStats simulate_phi(const MEParams& params, double eta, double phi, std::uint64_t seed,
                             std::uint64_t n_burn, std::uint64_t n_jumps) {
  JumpRunConfig cfg;
  cfg.n_burn = n_burn;
  cfg.n_jumps = n_jumps;
  return simulate_jumps(params, JumpScheme::adaptive_phi(eta, phi), cfg, seed);
}

TrajectoryStats simulate_jumps_pooled(const MEParams& params, const JumpScheme& scheme,
                                      const JumpRunConfig& cfg, std::uint64_t base_seed,
                                      std::size_t n_traj, std::size_t threads) {
  if (n_traj < 1) throw std::invalid_argument("simulate_jumps_pooled: need at least one trajectory");
  std::vector<TrajectoryStats> parts(n_traj);
  parallel_for(n_traj, threads, [&](std::size_t k) {
    parts[k] = simulate_jumps(params, scheme, cfg, derive_seed(base_seed, k));
  });
  TrajectoryStats pooled = std::move(parts.front());
  for (std::size_t k = 1; k < n_traj; ++k) pooled.merge(parts[k]);
  return pooled;
}

std::vector<BlochState> jump_path(const MEParams& params, const JumpScheme& scheme,
                                  const BlochState& initial, std::span<const double> times,
                                  std::uint64_t seed, double dt) {
  JumpProcess proc(params, scheme, initial, seed, dt > 0.0 ? dt : default_jump_dt(params));
  auto ignore = [](double, const Vec4&, const Vec4&) {};
  std::vector<BlochState> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < proc.time()) throw std::invalid_argument("jump_path: checkpoint times must ascend");
    while (proc.advance(t, ignore)) {
    }
    out.push_back(proc.state());
  }
  return out;
}

}  // namespace jumpsteer
