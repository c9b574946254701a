#include "jumpsteer/diffusive_sim.hpp"

#include "jumpsteer/errors.hpp"
#include "jumpsteer/parallel.hpp"
#include "jumpsteer/seeding.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace jumpsteer {

double PlanarState::radius() const { return std::hypot(x, z); }

SdeScheme parse_sde_scheme(std::string_view name) {
  if (name == "euler") return SdeScheme::euler;
  if (name == "milstein") return SdeScheme::milstein;
  throw std::invalid_argument("unknown SDE scheme '" + std::string(name) + "'");
}

std::string_view to_string(SdeScheme scheme) {
  return scheme == SdeScheme::euler ? "euler" : "milstein";
}

SDEConfig SDEConfig::defaults(const MEParams& params) {
  const double unit = 1.0 / params.gamma_sigma();
  SDEConfig cfg;
  cfg.dt = 1e-3 * unit;
  cfg.t_burn = 20.0 * unit;
  cfg.t_total = 2e4 * unit;
  cfg.block_time = 50.0 * unit;
  return cfg;
}

void SDEConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("SDEConfig: dt must be positive");
  if (!(t_burn >= 0.0)) throw std::invalid_argument("SDEConfig: t_burn must be non-negative");
  if (!(t_total > t_burn)) throw std::invalid_argument("SDEConfig: t_total must exceed t_burn");
  if (!(block_time >= dt)) throw std::invalid_argument("SDEConfig: block_time must be at least dt");
}

double disk_projection_band(double dt) { return std::max(kNormTolerance, 10.0 * dt); }

PlanarState enforce_bloch_disk(const PlanarState& s, double band) {
  const double r = s.radius();
  if (!std::isfinite(r)) throw NumericFailure("Bloch-disk guard: non-finite state");
  if (r <= 1.0) return s;
  if (r > 1.0 + band) {
    std::ostringstream msg;
    msg << "Bloch-disk guard: |r| = " << r << " after one step; reduce dt";
    throw NumericFailure(msg.str());
  }
  return {s.x / r, s.z / r};
}

namespace {

PlanarState raw_step(const PlanarState& s, const MEParams& params, double eta, double dt,
                     double dw_lower, double dw_raise, SdeScheme scheme) {
  const double gs = params.gamma_sigma();
  const double a = std::sqrt(eta * params.gamma_minus());
  const double b = std::sqrt(eta * params.gamma_plus());
  const double x = s.x;
  const double z = s.z;

  // Diffusion vectors (x, z components) for each noise.
  const double gl_x = a * (1.0 + z - x * x);
  const double gl_z = -a * x * (1.0 + z);
  const double gr_x = b * (1.0 - z - x * x);
  const double gr_z = b * x * (1.0 - z);

  double nx = x - 0.5 * gs * x * dt + gl_x * dw_lower + gr_x * dw_raise;
  double nz = z + (-gs * z + params.gamma_delta()) * dt + gl_z * dw_lower + gr_z * dw_raise;

  if (scheme == SdeScheme::milstein) {
    // L_k g_k = g_k^x d_x g_k + g_k^z d_z g_k.
    const double ll_x = gl_x * (-2.0 * a * x) + gl_z * a;
    const double ll_z = gl_x * (-a * (1.0 + z)) + gl_z * (-a * x);
    const double lr_x = gr_x * (-2.0 * b * x) + gr_z * (-b);
    const double lr_z = gr_x * (b * (1.0 - z)) + gr_z * (-b * x);
    const double ql = 0.5 * (dw_lower * dw_lower - dt);
    const double qr = 0.5 * (dw_raise * dw_raise - dt);
    nx += ll_x * ql + lr_x * qr;
    nz += ll_z * ql + lr_z * qr;
  }
  return {nx, nz};
}

constexpr int kMaxBridgeDepth = 30;

// One guarded step. An overshoot beyond the projection band is retried as
// two half steps whose increments are drawn from the Brownian bridge
// conditioned on the original (dW-, dW+).
PlanarState bridged_step(const PlanarState& s, const MEParams& params, double eta, double dt,
                         double dw_lower, double dw_raise, SdeScheme scheme, Rng& rng, int depth = 0) {
  const PlanarState next = raw_step(s, params, eta, dt, dw_lower, dw_raise, scheme);
  if (next.radius() <= 1.0 + disk_projection_band(dt) || depth == kMaxBridgeDepth) {
    return enforce_bloch_disk(next, disk_projection_band(dt));
  }
  const double half = 0.5 * dt;
  const double spread = 0.5 * std::sqrt(dt);
  const double first_lower = 0.5 * dw_lower + spread * rng.normal();
  const double first_raise = 0.5 * dw_raise + spread * rng.normal();
  const PlanarState mid = bridged_step(s, params, eta, half, first_lower, first_raise, scheme, rng, depth + 1);
  return bridged_step(mid, params, eta, half, dw_lower - first_lower, dw_raise - first_raise, scheme, rng,
                      depth + 1);
}

}  // namespace

PlanarState diffusive_step(const PlanarState& s, const MEParams& params, double eta, double dt,
                           double dw_lower, double dw_raise, SdeScheme scheme) {
  return enforce_bloch_disk(raw_step(s, params, eta, dt, dw_lower, dw_raise, scheme), disk_projection_band(dt));
}

namespace {

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("diffusive: eta outside [0, 1]");
}

BlockTimeAverages::Integrals sample(const PlanarState& s, double dt) {
  BlockTimeAverages::Integrals v{};
  v[static_cast<std::size_t>(Observable::abs_sigma_phi)] = std::abs(s.x) * dt;
  v[static_cast<std::size_t>(Observable::transverse)] = std::sqrt(std::max(0.0, 1.0 - s.z * s.z)) * dt;
  v[static_cast<std::size_t>(Observable::x)] = s.x * dt;
  v[static_cast<std::size_t>(Observable::y)] = 0.0;
  v[static_cast<std::size_t>(Observable::z)] = s.z * dt;
  v[static_cast<std::size_t>(Observable::x_squared)] = s.x * s.x * dt;
  v[static_cast<std::size_t>(Observable::z_squared)] = s.z * s.z * dt;
  return v;
}

}  // namespace

TrajectoryStats simulate_diffusive(const MEParams& params, double eta, const SDEConfig& cfg) {
  require_eta(eta);
  cfg.validate();
  Rng rng(cfg.seed);
  const double sqdt = std::sqrt(cfg.dt);
  const BlochState ss = steady_state(params);
  PlanarState s{0.0, ss.z};

  const auto burn_steps = static_cast<std::uint64_t>(std::llround(cfg.t_burn / cfg.dt));
  const auto total_steps = static_cast<std::uint64_t>(std::llround(cfg.t_total / cfg.dt));
  const auto block_steps = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(cfg.block_time / cfg.dt)));

  TrajectoryStats stats;
  BlockTimeAverages::Integrals block{};
  std::uint64_t in_block = 0;
  for (std::uint64_t k = 0; k < total_steps; ++k) {
    const double dw_lower = sqdt * rng.normal();
    const double dw_raise = sqdt * rng.normal();
    s = bridged_step(s, params, eta, cfg.dt, dw_lower, dw_raise, cfg.scheme, rng);
    if (k < burn_steps) continue;

    const auto v = sample(s, cfg.dt);
    for (std::size_t i = 0; i < kObservableCount; ++i) block[i] += v[i];
    const double r = s.radius();
    stats.min_radius = std::min(stats.min_radius, r);
    stats.max_radius = std::max(stats.max_radius, r);
    if (++in_block == block_steps) {
      stats.averages.add(static_cast<double>(in_block) * cfg.dt, block);
      stats.averages.close_block();
      block.fill(0.0);
      in_block = 0;
    }
  }
  if (in_block > 0) {
    stats.averages.add(static_cast<double>(in_block) * cfg.dt, block);
    stats.averages.close_block();
  }
  return stats;
}

TrajectoryStats simulate_diffusive_pooled(const MEParams& params, double eta, const SDEConfig& cfg,
                                          std::size_t n_traj, std::size_t threads) {
  if (n_traj < 1) throw std::invalid_argument("simulate_diffusive_pooled: need at least one trajectory");
  std::vector<TrajectoryStats> parts(n_traj);
  parallel_for(n_traj, threads, [&](std::size_t k) {
    SDEConfig c = cfg;
    c.seed = derive_seed(cfg.seed, k);
    parts[k] = simulate_diffusive(params, eta, c);
  });
  TrajectoryStats pooled = std::move(parts.front());
  for (std::size_t k = 1; k < n_traj; ++k) pooled.merge(parts[k]);
  return pooled;
}

std::vector<PlanarState> diffusive_path(const MEParams& params, double eta, const PlanarState& initial,
                                        std::span<const double> times, std::uint64_t seed, double dt,
                                        SdeScheme scheme) {
  require_eta(eta);
  if (!(dt > 0.0)) throw std::invalid_argument("diffusive_path: dt must be positive");
  Rng rng(seed);
  PlanarState s = enforce_bloch_disk(initial, kNormTolerance);
  double t = 0.0;
  std::vector<PlanarState> out;
  out.reserve(times.size());
  for (double target : times) {
    if (target < t) throw std::invalid_argument("diffusive_path: checkpoint times must ascend");
    while (target - t > 1e-12 * std::max(1.0, target)) {
      const double h = std::min(dt, target - t);
      const double sq = std::sqrt(h);
      const double dw_lower = sq * rng.normal();
      const double dw_raise = sq * rng.normal();
      s = bridged_step(s, params, eta, h, dw_lower, dw_raise, scheme, rng);
      t += h;
    }
    t = target;
    out.push_back(s);
  }
  return out;
}

SmallRMoments small_r_moments(double eta, double ratio) {
  return {0.0, 2.0 * ratio - 1.0, 4.0 * eta * ratio, 8.0 * eta * eta * ratio * ratio};
}

double small_r_prefactor(double eta, double f_bound) {
  return std::sqrt(8.0 * eta / std::numbers::pi) - f_bound * (4.0 - eta * eta) / 2.0;
}

double small_r_steering(double eta, double ratio, double f_bound) {
  return small_r_prefactor(eta, f_bound) * std::sqrt(ratio);
}

double small_r_critical_efficiency(double f_bound) {
  auto g = [f_bound](double eta) { return small_r_prefactor(eta, f_bound); };
  const double lo = 1e-12;
  const double hi = 1.0;
  if (g(lo) * g(hi) > 0.0) throw NumericFailure("small_r_critical_efficiency: no sign change on (0, 1]");
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iterations = 200;
  const auto bracket = boost::math::tools::toms748_solve(g, lo, hi, tol, iterations);
  return 0.5 * (bracket.first + bracket.second);
}

}  // namespace jumpsteer
