#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include "jumpsteer/seeding.hpp"
#include <span>
#include <vector>

namespace jumpsteer {

// Relative tolerance shared by every PSD decision; scaled by max(1, ||m||).
inline constexpr double kPsdRelativeTolerance = 1e-10;

// A diffusive unravelling of an L-channel master equation: channel
// efficiencies (the diagonal of Theta) and the complex symmetric correlation
// matrix Upsilon.
struct DiffusiveUnravelling {
  std::vector<double> etas;
  Eigen::MatrixXcd upsilon;

  std::size_t channels() const { return etas.size(); }

  // U(I, 0): every channel monitored with unit efficiency, no phase
  // preference.
  static DiffusiveUnravelling ideal(std::size_t channels);
};

// 2L x 2L real symmetric unravelling matrix
//   U = 1/2 [[Theta + Re Y, Im Y], [Im Y, Theta - Re Y]].
using UMatrix = Eigen::MatrixXd;

// Checks L >= 1, etas in [0, 1], Upsilon square of size L and symmetric.
// PSD validity is not checked here.
void validate_structure(const DiffusiveUnravelling& u);

UMatrix build_u(const DiffusiveUnravelling& u);

double psd_tolerance(const Eigen::MatrixXd& m);

// Smallest eigenvalue of a symmetric matrix (full self-adjoint solve).
double min_eigenvalue(const Eigen::MatrixXd& m);

// Sorted spectrum of a symmetric matrix.
Eigen::VectorXd spectrum(const Eigen::MatrixXd& m);

// lambda_min(m) >= -tol; a negative tol selects psd_tolerance(m).
bool is_psd(const Eigen::MatrixXd& m, double tol = -1.0);

// True iff U is PSD, i.e. the unravelling is physically valid.
bool is_valid(const DiffusiveUnravelling& u);

// True iff build_u(u0) - build_u(u) is PSD.
bool is_coarse_graining(const DiffusiveUnravelling& u0, const DiffusiveUnravelling& u);

struct DominanceWitness {
  std::size_t index = 0;
  double max_eta = 0.0;
  double lambda_min = 0.0;  // of U(I,0) - U^m
  double tolerance = 0.0;
  bool dominated = false;
};

struct NoGoCertificate {
  std::size_t channels = 0;
  // All efficiencies <= 1/2, the regime where dominance by U(I,0) is
  // guaranteed.
  bool efficiencies_in_nogo_regime = true;
  // Every member is dominated by U(I,0).
  bool found = true;
  UMatrix dominating;
  std::vector<DominanceWitness> witnesses;
};

// Tests whether U(I,0) dominates every member of the set. Members must share
// L and be valid unravellings (std::invalid_argument otherwise).
NoGoCertificate nogo_certificate(std::span<const DiffusiveUnravelling> set);

// Spectra of U(Theta, Y) and U(Theta, -Y) agree to tol.
bool eig_reflection_check(const DiffusiveUnravelling& u, double tol = 1e-10);

// Random valid unravelling with etas ~ U[0, max_eta] and Y = S D S^T
// (S complex Gaussian, D diagonal), scaled and rejection-sampled against
// the PSD constraint.
DiffusiveUnravelling sample_unravelling(Rng& rng, std::size_t channels, double max_eta);

}  // namespace jumpsteer
