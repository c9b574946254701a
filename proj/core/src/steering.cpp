#include "jumpsteer/steering.hpp"

#include "jumpsteer/direct_detect.hpp"
#include "jumpsteer/errors.hpp"
#include "jumpsteer/jump_sim.hpp"
#include "jumpsteer/parallel.hpp"
#include "jumpsteer/seeding.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jumpsteer {

Settings Settings::finite(int n) {
  if (n < 1) throw std::invalid_argument("Settings: n must be >= 1");
  return Settings(n);
}

Settings Settings::parse(std::string_view text) {
  if (text == "inf" || text == "infinity") return infinite();
  int n = 0;
  for (char c : text) {
    if (c < '0' || c > '9' || n > 1000000) throw std::invalid_argument("Settings: expected a positive integer or 'inf'");
    n = 10 * n + (c - '0');
  }
  if (text.empty()) throw std::invalid_argument("Settings: empty value");
  return finite(n);
}

std::string Settings::label() const { return is_infinite() ? "inf" : std::to_string(n_); }

double f_bound(Settings n) {
  if (n.is_infinite()) return 2.0 / std::numbers::pi;
  const int count = n.count();
  auto mean_abs_cos = [count](double theta) {
    double acc = 0.0;
    for (int j = 1; j <= count; ++j) acc += std::abs(std::cos(theta - j * std::numbers::pi / count));
    return acc / count;
  };

  constexpr int kGrid = 100000;
  const double spacing = std::numbers::pi / kGrid;
  int best = 0;
  double best_value = -1.0;
  for (int i = 0; i < kGrid; ++i) {
    const double v = mean_abs_cos(i * spacing);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double centre = best * spacing;
  const auto refined = boost::math::tools::brent_find_minima(
      [&](double theta) { return -mean_abs_cos(theta); }, centre - spacing, centre + spacing,
      std::numeric_limits<double>::digits / 2);
  return std::max(best_value, -refined.second);
}

Mode parse_mode(std::string_view name) {
  if (name == "jump") return Mode::jump;
  if (name == "diffusive") return Mode::diffusive;
  throw std::invalid_argument("unknown mode '" + std::string(name) + "'");
}

std::string_view to_string(Mode mode) { return mode == Mode::jump ? "jump" : "diffusive"; }

SDEConfig SteeringRunConfig::sde_config(const MEParams& params, std::uint64_t seed) const {
  SDEConfig cfg = SDEConfig::defaults(params);
  if (sde_dt) cfg.dt = *sde_dt;
  if (t_burn) cfg.t_burn = *t_burn;
  if (t_total) cfg.t_total = *t_total;
  cfg.scheme = sde_scheme;
  cfg.seed = seed;
  cfg.block_time = std::max(cfg.block_time, cfg.dt);
  return cfg;
}

SteeringEstimate steering_parameter(const MEParams& params, double eta, Settings n, Mode mode,
                                    const SteeringRunConfig& run, std::uint64_t seed) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("steering_parameter: eta must lie in (0, 1]");
  SteeringEstimate out;
  out.mode = mode;
  out.f_n = f_bound(n);
  if (mode == Mode::jump) {
    JumpRunConfig cfg;
    cfg.n_burn = run.n_burn;
    cfg.n_jumps = run.n_jumps;
    cfg.dt = run.jump_dt;
    const TrajectoryStats stats = simulate_jumps_pooled(params, JumpScheme::adaptive_phi(eta, 0.0), cfg, seed,
                                                        run.jump_trajectories, run.threads);
    out.term1 = stats.estimate(Observable::abs_sigma_phi);
    out.term2 = {ez_average(params, eta), 0.0};
  } else {
    const TrajectoryStats stats = simulate_diffusive_pooled(params, eta, run.sde_config(params, seed),
                                                            run.diffusive_trajectories, run.threads);
    out.term1 = stats.estimate(Observable::abs_sigma_phi);
    out.term2 = stats.estimate(Observable::transverse);
  }
  out.s = combine(out.term1, out.f_n, out.term2);
  return out;
}

ThresholdResult find_eta_c(const MEParams& params, Settings n, Mode mode, const SteeringRunConfig& run,
                           const EtaSearchConfig& search, std::uint64_t seed) {
  if (!(search.lo > 0.0 && search.lo < search.hi && search.hi <= 1.0)) {
    throw std::invalid_argument("find_eta_c: need 0 < lo < hi <= 1");
  }
  if (!(search.tolerance > 0.0)) throw std::invalid_argument("find_eta_c: tolerance must be positive");
  ThresholdResult out;
  auto evaluate = [&](double eta) {
    out.evaluations.push_back({eta, steering_parameter(params, eta, n, mode, run, seed)});
    return out.evaluations.back().estimate.s;
  };

  double lo = search.lo;
  double hi = search.hi;
  const Estimate s_lo = evaluate(lo);
  const Estimate s_hi = evaluate(hi);
  if ((s_lo.value > 0.0) == (s_hi.value > 0.0)) {
    throw NegativeVerdict("find_eta_c: S has the same sign at both ends of [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  const bool rising = s_hi.value > 0.0;

  while (hi - lo > search.tolerance) {
    if (static_cast<int>(out.evaluations.size()) >= search.max_evaluations) break;
    const double mid = 0.5 * (lo + hi);
    const Estimate s_mid = evaluate(mid);
    if (std::abs(s_mid.value) <= search.significance * s_mid.error) {
      out.eta_c = mid;
      out.bracket_width = hi - lo;
      out.noise_limited = true;
      return out;
    }
    if ((s_mid.value > 0.0) == rising) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  out.eta_c = 0.5 * (lo + hi);
  out.bracket_width = hi - lo;
  return out;
}

RatioOptimum find_r_opt(double eta, Settings n, Mode mode, const SteeringRunConfig& run,
                        const RatioSearchConfig& search, std::uint64_t seed) {
  if (!(search.r_min > 0.0 && search.r_min < search.r_max)) {
    throw std::invalid_argument("find_r_opt: need 0 < r_min < r_max");
  }
  if (search.grid_points < 3) throw std::invalid_argument("find_r_opt: need at least three grid points");
  RatioOptimum out;
  auto evaluate = [&](double ratio) {
    return steering_parameter(MEParams::from_ratio(ratio), eta, n, mode, run, seed);
  };

  const int points = search.grid_points;
  const double step = (search.r_max - search.r_min) / (points - 1);
  for (int i = 0; i < points; ++i) {
    const double r = search.r_min + i * step;
    out.grid.push_back({r, evaluate(r)});
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    const double s = out.grid[i].estimate.s.value;
    if (s > out.grid[best].estimate.s.value) best = i;
    const bool left = i == 0 || s > out.grid[i - 1].estimate.s.value;
    const bool right = i + 1 == out.grid.size() || s > out.grid[i + 1].estimate.s.value;
    if (left && right) out.local_maxima.push_back(out.grid[i].ratio);
  }
  out.violation = out.grid[best].estimate.s.value > 0.0;
  out.r_opt = out.grid[best].ratio;
  out.at_opt = out.grid[best].estimate;
  if (!out.violation) return out;

  // Golden-section search on [best - step, best + step] clipped to the grid.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(search.r_min, out.r_opt - step);
  double b = std::min(search.r_max, out.r_opt + step);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  SteeringEstimate sc = evaluate(c);
  SteeringEstimate sd = evaluate(d);
  for (int it = 0; it < search.refine_iterations; ++it) {
    if (sc.s.value > sd.s.value) {
      b = d;
      d = c;
      sd = sc;
      c = b - inv_phi * (b - a);
      sc = evaluate(c);
    } else {
      a = c;
      c = d;
      sc = sd;
      d = a + inv_phi * (b - a);
      sd = evaluate(d);
    }
  }
  const bool c_wins = sc.s.value > sd.s.value;
  const double r_ref = c_wins ? c : d;
  const SteeringEstimate& s_ref = c_wins ? sc : sd;
  if (s_ref.s.value > out.at_opt.s.value) {
    out.r_opt = r_ref;
    out.at_opt = s_ref;
  }
  return out;
}

std::vector<SweepPoint> sweep_grid(std::span<const double> etas, std::span<const double> ratios,
                                   std::span<const Settings> ns, std::span<const Mode> modes) {
  std::vector<SweepPoint> points;
  points.reserve(etas.size() * ratios.size() * ns.size() * modes.size());
  for (double eta : etas) {
    for (double r : ratios) {
      for (const Settings& n : ns) {
        for (Mode m : modes) points.push_back({eta, r, n, m});
      }
    }
  }
  return points;
}

std::vector<SweepRow> sweep(std::span<const SweepPoint> points, const SteeringRunConfig& run,
                            std::uint64_t base_seed) {
  std::vector<SweepRow> rows(points.size());
  SteeringRunConfig inner = run;
  const std::size_t outer_threads = points.size() > 1 ? run.threads : 1;
  if (outer_threads > 1) inner.threads = 1;
  parallel_for(points.size(), outer_threads, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.point = points[i];
    row.seed = derive_seed(base_seed, i);
    const auto start = std::chrono::steady_clock::now();
    try {
      row.estimate = steering_parameter(MEParams::from_ratio(row.point.ratio), row.point.eta, row.point.n,
                                        row.point.mode, inner, row.seed);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.walltime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  });
  return rows;
}

}  // namespace jumpsteer
