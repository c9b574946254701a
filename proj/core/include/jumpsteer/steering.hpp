#pragma once

#include "jumpsteer/diffusive_sim.hpp"
#include "jumpsteer/qubit.hpp"
#include "jumpsteer/stats.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jumpsteer {

// Number of equatorial measurement settings phi_j = j pi / n, or the n -> inf
// limit.
class Settings {
 public:
  static Settings finite(int n);
  static Settings infinite() { return Settings(0); }
  // "inf" or a positive integer.
  static Settings parse(std::string_view text);

  bool is_infinite() const { return n_ == 0; }
  int count() const { return n_; }
  std::string label() const;

  friend bool operator==(const Settings&, const Settings&) = default;

 private:
  explicit Settings(int n) : n_(n) {}
  int n_;
};

// Largest value of (1/n) sum_j |cos(theta - j pi / n)| over theta: the ratio
// of the two steering terms attainable by a pure state. 2/pi for n = inf.
// Dense grid (1e5 points) followed by Brent refinement.
double f_bound(Settings n);

enum class Mode { jump, diffusive };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode mode);

struct SteeringRunConfig {
  // jump mode
  std::uint64_t n_burn = 10;
  std::uint64_t n_jumps = 10000;
  std::size_t jump_trajectories = 10;
  double jump_dt = 0.0;  // <= 0: 1e-3 / gamma_sigma

  // diffusive mode; unset values take SDEConfig::defaults
  std::optional<double> sde_dt;
  std::optional<double> t_burn;
  std::optional<double> t_total;
  SdeScheme sde_scheme = SdeScheme::milstein;
  std::size_t diffusive_trajectories = 1;

  std::size_t threads = 1;

  SDEConfig sde_config(const MEParams& params, std::uint64_t seed) const;
};

struct SteeringEstimate {
  Mode mode = Mode::jump;
  Estimate term1;  // mean over settings of E[|<sigma_phi>|]
  Estimate term2;  // E^z[sqrt(1 - <sigma_z>^2)]
  double f_n = 0.0;
  Estimate s;      // term1 - f_n term2
};

// Jump mode: term1 from the adaptive equatorial scheme at phi = 0, term2
// from the direct-detection quadrature (zero error). Diffusive mode: both
// terms from one homodyne run.
SteeringEstimate steering_parameter(const MEParams& params, double eta, Settings n, Mode mode,
                                    const SteeringRunConfig& run, std::uint64_t seed);

struct EtaSearchConfig {
  double lo = 0.2;
  double hi = 0.95;
  double tolerance = 0.01;   // final bracket width
  double significance = 2.0; // stop once |S| <= significance * stderr
  int max_evaluations = 40;
};

struct EtaSample {
  double eta;
  SteeringEstimate estimate;
};

struct ThresholdResult {
  double eta_c = 0.0;
  double bracket_width = 0.0;
  bool noise_limited = false;  // stopped on an insignificant midpoint
  std::vector<EtaSample> evaluations;
};

// Bisection on the sign of S(eta) with common random numbers across
// evaluations. Throws NegativeVerdict if S has the same sign at both ends.
ThresholdResult find_eta_c(const MEParams& params, Settings n, Mode mode, const SteeringRunConfig& run,
                           const EtaSearchConfig& search, std::uint64_t seed);

struct RatioSearchConfig {
  double r_min = 0.02;
  double r_max = 0.5;
  int grid_points = 13;
  int refine_iterations = 8;
};

struct RatioSample {
  double ratio;
  SteeringEstimate estimate;
};

struct RatioOptimum {
  bool violation = false;  // some grid point has S > 0
  double r_opt = 0.0;
  SteeringEstimate at_opt;
  std::vector<RatioSample> grid;
  std::vector<double> local_maxima;  // grid ratios that beat both neighbours
};

// Coarse linear grid in R, then golden-section refinement around the best
// grid point. All evaluations share one seed.
RatioOptimum find_r_opt(double eta, Settings n, Mode mode, const SteeringRunConfig& run,
                        const RatioSearchConfig& search, std::uint64_t seed);

struct SweepPoint {
  double eta = 0.0;
  double ratio = 0.0;
  Settings n = Settings::infinite();
  Mode mode = Mode::jump;
};

struct SweepRow {
  SweepPoint point;
  std::uint64_t seed = 0;
  std::optional<SteeringEstimate> estimate;  // empty if the point failed
  std::string error;
  double walltime_s = 0.0;
};

// Cartesian product in eta-major order: eta, then R, then n, then mode.
std::vector<SweepPoint> sweep_grid(std::span<const double> etas, std::span<const double> ratios,
                                   std::span<const Settings> ns, std::span<const Mode> modes);

// One row per point in input order; seeds derive_seed(base_seed, index);
// failures are recorded in the row and the sweep continues.
std::vector<SweepRow> sweep(std::span<const SweepPoint> points, const SteeringRunConfig& run,
                            std::uint64_t base_seed);

}  // namespace jumpsteer
