#pragma once

// Field-free and field-parametrized eigenproblems, the adiabatic table over
// an electric-field grid and the nonadiabatic coupling matrices K.

#include "qdc/operators.hpp"

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdc {

struct EigenSolution {
  Eigen::VectorXd energies;  // ascending
  Eigen::MatrixXd vectors;   // column k = expansion coefficients of state k
  double xi = 0.0;           // field value at which solved
};

enum class EigenMode { dense, iterative };

struct EigenSolveError : std::runtime_error {
  double residual;
  EigenSolveError(const std::string& msg, double res)
      : std::runtime_error(msg), residual(res) {}
};

namespace detail {

// Lanczos with full reorthogonalization for the k lowest eigenpairs.
inline EigenSolution lanczos_lowest(const Eigen::MatrixXd& h, int k, double tol) {
  const int dim = static_cast<int>(h.rows());
  const int m_max = std::min(dim, std::max(8 * k + 80, 240));
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Eigen::VectorXd v0(dim);
  for (int i = 0; i < dim; ++i) v0(i) = nd(rng);
  v0.normalize();

  Eigen::MatrixXd vbasis(dim, m_max);
  std::vector<double> alpha, beta;
  vbasis.col(0) = v0;
  Eigen::VectorXd w;
  double hnorm = 1.0;
  int m = 0;
  EigenSolution out;
  for (int j = 0; j < m_max; ++j) {
    w = h * vbasis.col(j);
    hnorm = std::max(hnorm, w.norm());
    const double a = vbasis.col(j).dot(w);
    alpha.push_back(a);
    w -= a * vbasis.col(j);
    if (j > 0) w -= beta[j - 1] * vbasis.col(j - 1);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      w -= vbasis.leftCols(j + 1) * (vbasis.leftCols(j + 1).transpose() * w);
    const double b = w.norm();
    m = j + 1;
    if (b < 1e-14 * hnorm) break;  // invariant subspace found
    if (j + 1 < m_max) {
      beta.push_back(b);
      vbasis.col(j + 1) = w / b;
    }
    // convergence check every few steps once we have enough vectors
    if (m >= std::max(2 * k, k + 10) && (m % 10 == 0 || j + 1 == m_max)) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
      for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      double worst = 0.0;
      for (int s = 0; s < k; ++s)
        worst = std::max(worst, beta.back() * std::abs(es.eigenvectors()(m - 1, s)));
      if (worst < tol * hnorm) break;
    }
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
  for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (m < k) throw EigenSolveError("lanczos: Krylov space smaller than k", 1.0);
  out.energies = es.eigenvalues().head(k);
  out.vectors = vbasis.leftCols(m) * es.eigenvectors().leftCols(k);
  // re-orthonormalize the Ritz vectors
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(out.vectors);
  out.vectors = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
  // fix possible sign flips from QR against the Ritz vectors
  double worst = 0.0;
  for (int s = 0; s < k; ++s) {
    Eigen::VectorXd r = h * out.vectors.col(s) - out.energies(s) * out.vectors.col(s);
    worst = std::max(worst, r.norm() / hnorm);
  }
  if (worst > tol) throw EigenSolveError("lanczos: not converged", worst);
  return out;
}

}  // namespace detail

// Lowest k eigenpairs of a real symmetric matrix.
inline EigenSolution solve_eigen(const Eigen::MatrixXd& h, int k,
                                 EigenMode mode = EigenMode::dense, double tol = 1e-10) {
  const int dim = static_cast<int>(h.rows());
  if (k > dim) throw std::invalid_argument("solve_eigen: k exceeds dimension");
  if (mode == EigenMode::iterative && k < dim / 3 && dim > 200)
    return detail::lanczos_lowest(h, k, tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success)
    throw EigenSolveError("solve_eigen: dense solver failed", 1.0);
  EigenSolution out;
  out.energies = es.eigenvalues().head(k);
  out.vectors = es.eigenvectors().leftCols(k);
  return out;
}

struct AdiabaticTable {
  std::vector<double> xi_grid;            // ascending internal field values
  std::vector<EigenSolution> solutions;   // gauge-fixed, n_keep states each
  std::vector<Eigen::MatrixXd> k_matrices;  // real antisymmetric, per point
  int n_keep = 0;
  bool gauge_fixed = false;
  double min_successive_overlap = 1.0;    // worst diagonal overlap between neighbors
};

// Eigenstates of H0 - xi*X over the grid, gauge-fixed by positive overlap
// with the previous grid point, plus K_kl = <k|X|l>/(e_k - e_l).
inline AdiabaticTable build_adiabatic_table(const Eigen::MatrixXd& h0,
                                            const Eigen::MatrixXd& x_dipole,
                                            const std::vector<double>& xi_grid, int n_keep,
                                            EigenMode mode = EigenMode::dense,
                                            double degeneracy_threshold = 1e-10) {
  for (size_t m = 1; m < xi_grid.size(); ++m)
    if (!(xi_grid[m] > xi_grid[m - 1]))
      throw std::invalid_argument("build_adiabatic_table: xi_grid must be ascending");
  AdiabaticTable tab;
  tab.xi_grid = xi_grid;
  tab.n_keep = n_keep;
  for (size_t m = 0; m < xi_grid.size(); ++m) {
    Eigen::MatrixXd h = h0 - xi_grid[m] * x_dipole;
    EigenSolution sol = solve_eigen(h, n_keep, mode);
    sol.xi = xi_grid[m];
    if (m > 0) {
      const auto& prev = tab.solutions.back();
      for (int s = 0; s < n_keep; ++s) {
        const double ov = prev.vectors.col(s).dot(sol.vectors.col(s));
        if (ov < 0) sol.vectors.col(s) *= -1.0;
        tab.min_successive_overlap = std::min(tab.min_successive_overlap, std::abs(ov));
      }
    }
    // K matrix
    Eigen::MatrixXd xe = sol.vectors.transpose() * x_dipole * sol.vectors;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n_keep, n_keep);
    for (int a = 0; a < n_keep; ++a)
      for (int b = 0; b < n_keep; ++b) {
        if (a == b) continue;
        const double de = sol.energies(a) - sol.energies(b);
        if (std::abs(de) < degeneracy_threshold)
          throw std::runtime_error(
              "build_adiabatic_table: degenerate pair (" + std::to_string(a) + "," +
              std::to_string(b) + ") at xi = " + std::to_string(xi_grid[m]));
        k(a, b) = xe(a, b) / de;
      }
    tab.solutions.push_back(std::move(sol));
    tab.k_matrices.push_back(std::move(k));
  }
  tab.gauge_fixed = true;
  return tab;
}

struct Anticrossing {
  double xi;   // interpolated position
  double gap;  // interpolated minimal gap
};

// Local minima of e_l(xi) - e_k(xi) over the table grid, with parabolic
// refinement of interior minima.
inline std::vector<Anticrossing> locate_anticrossings(const AdiabaticTable& tab, int k, int l) {
  if (k < 0 || l < 0 || k >= tab.n_keep || l >= tab.n_keep || k == l)
    throw std::out_of_range("locate_anticrossings: invalid state pair");
  std::vector<Anticrossing> out;
  const int n = static_cast<int>(tab.xi_grid.size());
  auto gap = [&](int m) {
    return std::abs(tab.solutions[m].energies(l) - tab.solutions[m].energies(k));
  };
  for (int m = 1; m + 1 < n; ++m) {
    const double g0 = gap(m - 1), g1 = gap(m), g2 = gap(m + 1);
    if (g1 <= g0 && g1 <= g2 && (g1 < g0 || g1 < g2)) {
      // parabola through the three points
      const double x0 = tab.xi_grid[m - 1], x1 = tab.xi_grid[m], x2 = tab.xi_grid[m + 1];
      const double denom = (g0 - 2 * g1 + g2);
      double xm = x1, gm = g1;
      if (std::abs(denom) > 1e-300) {
        const double h = 0.5 * (x2 - x0) / 2.0;
        const double shift = 0.5 * (g0 - g2) / denom;
        xm = x1 + shift * (x2 - x1 + x1 - x0) / 2.0;
        gm = g1 - 0.125 * (g0 - g2) * (g0 - g2) / denom;
        (void)h;
      }
      out.push_back({xm, gm});
    }
  }
  return out;
}

}  // namespace qdc
