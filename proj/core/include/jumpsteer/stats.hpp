#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace jumpsteer {

struct Estimate {
  double value = 0.0;
  double error = 0.0;  // one standard error
};

// Quadrature-sum error propagation for a - k b.
Estimate combine(const Estimate& a, double k, const Estimate& b);

// Time-averaged observables of a conditioned qubit trajectory.
enum class Observable : std::size_t {
  abs_sigma_phi,  // |<sigma_phi>|, the equatorial projection
  transverse,     // sqrt(1 - <sigma_z>^2)
  x,
  y,
  z,
  x_squared,
  z_squared,
};
inline constexpr std::size_t kObservableCount = 7;

// Accumulates time integrals of the observables in contiguous blocks. The
// block boundaries are chosen by the caller (every N jumps, or every fixed
// stretch of time); standard errors come from batch means of the blocks.
class BlockTimeAverages {
 public:
  using Integrals = std::array<double, kObservableCount>;

  void add(double duration, const Integrals& integrals);
  // Finishes the current block; a no-op if the block is empty.
  void close_block();
  // Appends the other accumulator's blocks after this one's.
  void merge(const BlockTimeAverages& other);

  double total_time() const;
  std::size_t block_count() const { return durations_.size(); }

  // Ratio estimator sum(A_b) / sum(T_b) with batch-means standard error
  // sqrt(sum (A_b - mean T_b)^2 / (n (n - 1) Tbar^2)). Open partial blocks
  // are ignored. stderr is infinite with fewer than two blocks.
  Estimate estimate(Observable obs) const;

  // E[q^2] - E[q]^2 from the two time averages (no error estimate).
  double variance(Observable value, Observable square) const;

 private:
  double open_duration_ = 0.0;
  Integrals open_integrals_{};
  std::vector<double> durations_;
  std::vector<Integrals> integrals_;
};

// Pooled summary of one or more trajectories.
struct TrajectoryStats {
  BlockTimeAverages averages;
  std::uint64_t jumps = 0;          // counted after burn-in
  std::uint64_t burn_in_jumps = 0;
  double min_radius = std::numeric_limits<double>::infinity();
  double max_radius = 0.0;
  // Largest distance from a sampled state to the scheme's target pure
  // ensemble; only meaningful at unit efficiency.
  double max_ensemble_distance = 0.0;

  double total_time() const { return averages.total_time(); }
  Estimate estimate(Observable obs) const { return averages.estimate(obs); }
  void merge(const TrajectoryStats& other);
};

// Welford mean with standard error.
class RunningMean {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace jumpsteer
