#include "jumpsteer/direct_detect.hpp"

#include "jumpsteer/errors.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <stdexcept>

namespace jumpsteer {

namespace {

void require_detection(const MEParams& params, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("direct detection: eta must lie in (0, 1]");
  if (!(params.gamma_plus() > 0.0)) {
    throw std::invalid_argument("direct detection: gamma_plus must be positive (ground state is absorbing)");
  }
}

// sinh(x)/x, accurate near zero.
double sinhc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

// Integral over t in [0, inf) by the substitution t = -ln(s) / rate, which
// turns an integrand decaying like exp(-rate t) into a bounded function on
// (0, 1]. tanh-sinh absorbs the sqrt-type behaviour at t = 0.
template <class F>
double integrate_half_line(F&& f, double rate, double tolerance, double& error_out) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto mapped = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double t = -std::log(s) / rate;
    return f(t) / (rate * s);
  };
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(mapped, 0.0, 1.0, tolerance, &error, &l1);
  if (!std::isfinite(value) || error > std::max(1e-8, 1e-6 * std::abs(value))) {
    throw NumericFailure("direct detection: quadrature did not converge");
  }
  error_out = std::max(error_out, error);
  return value;
}

}  // namespace

InterJumpSolution::InterJumpSolution(const MEParams& params, double eta, Pole start)
    : params_(params), eta_(eta), start_(start) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("InterJumpSolution: eta outside [0, 1]");
  const double gs = params.gamma_sigma();
  const double gd = params.gamma_delta();
  m_ << -0.5 * eta * gs, 0.5 * eta * gd,
        (1.0 - 0.5 * eta) * gd, (0.5 * eta - 1.0) * gs;
  mean_ = 0.5 * m_.trace();
  const double det = m_.determinant();
  half_gap_ = std::sqrt(std::max(0.0, mean_ * mean_ - det));
  slow_rate_ = -(mean_ + half_gap_);
  fast_rate_ = -(mean_ - half_gap_);
}

Eigen::Vector2d InterJumpSolution::at(double t) const {
  // exp(M t) = e^{mean t} [cosh(g t) I + (sinh(g t) / g) (M - mean I)]
  const Eigen::Vector2d v0(1.0, start_ == Pole::north ? 1.0 : -1.0);
  const Eigen::Vector2d shifted = (m_ - mean_ * Eigen::Matrix2d::Identity()) * v0;
  const double gt = half_gap_ * t;
  if (gt < 1e-4) {
    return std::exp(mean_ * t) * ((1.0 + 0.5 * gt * gt) * v0 + t * sinhc(gt) * shifted);
  }
  // Separate exponentials so that large t underflows to zero instead of
  // producing 0 * inf.
  const double slow = std::exp((mean_ + half_gap_) * t);
  const double fast = std::exp((mean_ - half_gap_) * t);
  return 0.5 * (slow + fast) * v0 + (0.5 * (slow - fast) / half_gap_) * shifted;
}

double InterJumpSolution::z(double t) const {
  const Eigen::Vector2d v = at(t);
  return v(1) / v(0);
}

InterJumpSolution inter_jump_solution(const MEParams& params, double eta, Pole start) {
  return InterJumpSolution(params, eta, start);
}

BranchRates branch_jump_rates(const InterJumpSolution& sol, double t) {
  const double z = sol.z(t);
  const double eta = sol.eta();
  return {eta * sol.params().gamma_plus() * 0.5 * (1.0 - z),
          eta * sol.params().gamma_minus() * 0.5 * (1.0 + z)};
}

DestinationProbabilities jump_destination_probs(const MEParams& params, double eta) {
  require_detection(params, eta);
  DestinationProbabilities out;
  double error = 0.0;
  const double gp = params.gamma_plus();
  const double gm = params.gamma_minus();
  for (int row = 0; row < 2; ++row) {
    const InterJumpSolution sol(params, eta, row == 0 ? Pole::north : Pole::south);
    // p w_j is linear in (p, z~): p w_north = eta g+ (p - z~)/2, p w_south = eta g- (p + z~)/2.
    out.kernel(row, 0) = integrate_half_line(
        [&](double t) {
          const Eigen::Vector2d v = sol.at(t);
          return 0.5 * eta * gp * (v(0) - v(1));
        },
        sol.slow_rate(), 1e-12, error);
    out.kernel(row, 1) = integrate_half_line(
        [&](double t) {
          const Eigen::Vector2d v = sol.at(t);
          return 0.5 * eta * gm * (v(0) + v(1));
        },
        sol.slow_rate(), 1e-12, error);
  }
  // Stationary vector of the row-stochastic kernel:
  // P_n = P_n K(n,n) + P_s K(s,n), P_n + P_s = 1.
  const double to_north_from_south = out.kernel(1, 0);
  const double to_south_from_north = out.kernel(0, 1);
  const double denom = to_north_from_south + to_south_from_north;
  if (!(denom > 0.0)) throw NumericFailure("jump_destination_probs: degenerate kernel");
  out.north = to_north_from_south / denom;
  out.south = to_south_from_north / denom;
  return out;
}

ZUnravellingAverage ez_average_detail(const MEParams& params, double eta, double tolerance) {
  require_detection(params, eta);
  ZUnravellingAverage out;
  double numerator = 0.0;
  double denominator = 0.0;
  for (Pole start : {Pole::north, Pole::south}) {
    const InterJumpSolution sol(params, eta, start);
    // p sqrt(1 - z^2) = sqrt((p - z~)(p + z~)).
    numerator += 0.5 * integrate_half_line(
                           [&](double t) {
                             const Eigen::Vector2d v = sol.at(t);
                             return std::sqrt(std::max(0.0, (v(0) - v(1)) * (v(0) + v(1))));
                           },
                           sol.slow_rate(), tolerance, out.quadrature_error);
    denominator += 0.5 * integrate_half_line([&](double t) { return sol.at(t)(0); }, sol.slow_rate(),
                                             tolerance, out.quadrature_error);
  }
  out.transverse = numerator / denominator;
  out.mean_dwell_time = denominator;
  return out;
}

double ez_average(const MEParams& params, double eta) { return ez_average_detail(params, eta).transverse; }

}  // namespace jumpsteer
