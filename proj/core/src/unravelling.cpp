#include "jumpsteer/unravelling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace jumpsteer {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

void require_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix is not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolver did not converge");
  }
  return solver.eigenvalues();  // ascending
}

}  // namespace

DiffusiveUnravelling DiffusiveUnravelling::ideal(std::size_t channels) {
  return {std::vector<double>(channels, 1.0),
          Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(channels),
                                 static_cast<Eigen::Index>(channels))};
}

void validate_structure(const DiffusiveUnravelling& u) {
  const auto l = static_cast<Eigen::Index>(u.channels());
  if (l < 1) throw std::invalid_argument("unravelling: need at least one channel");
  for (double eta : u.etas) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw std::invalid_argument("unravelling: efficiency outside [0, 1]");
    }
  }
  if (u.upsilon.rows() != l || u.upsilon.cols() != l) {
    throw std::invalid_argument("unravelling: Upsilon must be L x L");
  }
  const double scale = std::max(1.0, u.upsilon.cwiseAbs().maxCoeff());
  if ((u.upsilon - u.upsilon.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw std::invalid_argument("unravelling: Upsilon is not symmetric");
  }
}

UMatrix build_u(const DiffusiveUnravelling& u) {
  validate_structure(u);
  const auto l = static_cast<Eigen::Index>(u.channels());
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(l, l);
  for (Eigen::Index i = 0; i < l; ++i) theta(i, i) = u.etas[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd re = u.upsilon.real();
  const Eigen::MatrixXd im = u.upsilon.imag();

  UMatrix m(2 * l, 2 * l);
  m.topLeftCorner(l, l) = theta + re;
  m.topRightCorner(l, l) = im;
  m.bottomLeftCorner(l, l) = im;
  m.bottomRightCorner(l, l) = theta - re;
  m *= 0.5;
  // Exact symmetry; Upsilon may carry asymmetric rounding within tolerance.
  return 0.5 * (m + m.transpose());
}

double psd_tolerance(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd ev = eigenvalues(m);
  const double norm = ev.size() == 0 ? 0.0 : std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return kPsdRelativeTolerance * std::max(1.0, norm);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  require_symmetric(m, "min_eigenvalue");
  return eigenvalues(m)(0);
}

Eigen::VectorXd spectrum(const Eigen::MatrixXd& m) {
  require_symmetric(m, "spectrum");
  return eigenvalues(m);
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  require_symmetric(m, "is_psd");
  const Eigen::VectorXd ev = eigenvalues(m);
  if (tol < 0.0) {
    const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    tol = kPsdRelativeTolerance * std::max(1.0, norm);
  }
  return ev(0) >= -tol;
}

bool is_valid(const DiffusiveUnravelling& u) { return is_psd(build_u(u)); }

bool is_coarse_graining(const DiffusiveUnravelling& u0, const DiffusiveUnravelling& u) {
  if (u0.channels() != u.channels()) {
    throw std::invalid_argument("is_coarse_graining: channel counts differ");
  }
  return is_psd(build_u(u0) - build_u(u));
}

NoGoCertificate nogo_certificate(std::span<const DiffusiveUnravelling> set) {
  NoGoCertificate cert;
  if (set.empty()) return cert;

  cert.channels = set.front().channels();
  cert.dominating = build_u(DiffusiveUnravelling::ideal(cert.channels));
  cert.witnesses.reserve(set.size());

  for (std::size_t m = 0; m < set.size(); ++m) {
    const auto& member = set[m];
    if (member.channels() != cert.channels) {
      std::ostringstream msg;
      msg << "nogo_certificate: member " << m << " has " << member.channels()
          << " channels, expected " << cert.channels;
      throw std::invalid_argument(msg.str());
    }
    const UMatrix um = build_u(member);
    if (!is_psd(um)) {
      std::ostringstream msg;
      msg << "nogo_certificate: member " << m << " is not a valid unravelling (U not PSD)";
      throw std::invalid_argument(msg.str());
    }
    DominanceWitness w;
    w.index = m;
    w.max_eta = *std::max_element(member.etas.begin(), member.etas.end());
    const Eigen::MatrixXd diff = cert.dominating - um;
    w.lambda_min = min_eigenvalue(diff);
    w.tolerance = psd_tolerance(diff);
    w.dominated = w.lambda_min >= -w.tolerance;
    cert.efficiencies_in_nogo_regime = cert.efficiencies_in_nogo_regime && w.max_eta <= 0.5;
    cert.found = cert.found && w.dominated;
    cert.witnesses.push_back(w);
  }
  return cert;
}

bool eig_reflection_check(const DiffusiveUnravelling& u, double tol) {
  DiffusiveUnravelling reflected = u;
  reflected.upsilon = -u.upsilon;
  const Eigen::VectorXd a = spectrum(build_u(u));
  const Eigen::VectorXd b = spectrum(build_u(reflected));
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

DiffusiveUnravelling sample_unravelling(Rng& rng, std::size_t channels, double max_eta) {
  if (channels < 1) throw std::invalid_argument("sample_unravelling: need at least one channel");
  if (!(max_eta >= 0.0 && max_eta <= 1.0)) {
    throw std::invalid_argument("sample_unravelling: max_eta outside [0, 1]");
  }
  auto unit = [&rng] { return rng.uniform(); };
  auto gauss = [&rng] { return rng.normal(); };
  const auto l = static_cast<Eigen::Index>(channels);

  for (;;) {
    DiffusiveUnravelling u;
    u.etas.resize(channels);
    for (auto& eta : u.etas) eta = max_eta * unit();

    Eigen::MatrixXcd s(l, l);
    for (Eigen::Index i = 0; i < l; ++i) {
      for (Eigen::Index j = 0; j < l; ++j) s(i, j) = {gauss(), gauss()};
    }
    Eigen::VectorXcd d(l);
    for (Eigen::Index i = 0; i < l; ++i) d(i) = {gauss(), gauss()};
    Eigen::MatrixXcd y = s * d.asDiagonal() * s.transpose();
    y = 0.5 * (y + y.transpose()).eval();

    // Scale to a random fraction of the largest efficiency; the PSD test
    // below rejects the excess. A quarter of the draws sit on the boundary
    // of the rank-one slice (largest singular value equal to min eta).
    const double sigma_max = Eigen::JacobiSVD<Eigen::MatrixXcd>(y).singularValues()(0);
    if (sigma_max == 0.0) continue;
    const double eta_max = *std::max_element(u.etas.begin(), u.etas.end());
    const double eta_min = *std::min_element(u.etas.begin(), u.etas.end());
    const double target = unit() < 0.25 ? eta_min : 1.2 * eta_max * unit();
    u.upsilon = (target / sigma_max) * y;

    if (is_valid(u)) return u;
  }
}

}  // namespace jumpsteer
