#include "jumpsteer/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jumpsteer {

Estimate combine(const Estimate& a, double k, const Estimate& b) {
  return {a.value - k * b.value, std::hypot(a.error, k * b.error)};
}

void BlockTimeAverages::add(double duration, const Integrals& integrals) {
  open_duration_ += duration;
  for (std::size_t i = 0; i < kObservableCount; ++i) open_integrals_[i] += integrals[i];
}

void BlockTimeAverages::close_block() {
  if (open_duration_ <= 0.0) return;
  durations_.push_back(open_duration_);
  integrals_.push_back(open_integrals_);
  open_duration_ = 0.0;
  open_integrals_.fill(0.0);
}

void BlockTimeAverages::merge(const BlockTimeAverages& other) {
  durations_.insert(durations_.end(), other.durations_.begin(), other.durations_.end());
  integrals_.insert(integrals_.end(), other.integrals_.begin(), other.integrals_.end());
}

double BlockTimeAverages::total_time() const {
  return std::accumulate(durations_.begin(), durations_.end(), 0.0);
}

Estimate BlockTimeAverages::estimate(Observable obs) const {
  const auto idx = static_cast<std::size_t>(obs);
  const std::size_t n = durations_.size();
  if (n == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()};

  double total_t = 0.0;
  double total_a = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    total_t += durations_[b];
    total_a += integrals_[b][idx];
  }
  const double mean = total_a / total_t;
  if (n < 2) return {mean, std::numeric_limits<double>::infinity()};

  const double tbar = total_t / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double r = integrals_[b][idx] - mean * durations_[b];
    ss += r * r;
  }
  const double nn = static_cast<double>(n);
  return {mean, std::sqrt(ss / (nn * (nn - 1.0))) / tbar};
}

double BlockTimeAverages::variance(Observable value, Observable square) const {
  const double m = estimate(value).value;
  return estimate(square).value - m * m;
}

void TrajectoryStats::merge(const TrajectoryStats& other) {
  averages.merge(other.averages);
  jumps += other.jumps;
  burn_in_jumps += other.burn_in_jumps;
  min_radius = std::min(min_radius, other.min_radius);
  max_radius = std::max(max_radius, other.max_radius);
  max_ensemble_distance = std::max(max_ensemble_distance, other.max_ensemble_distance);
}

void RunningMean::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningMean::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningMean::stderr_of_mean() const {
  return n_ < 2 ? std::numeric_limits<double>::infinity()
                : std::sqrt(variance() / static_cast<double>(n_));
}

}  // namespace jumpsteer
