#pragma once

// Krotov iterative pulse optimization with energy (J_a) and structure (J_b)
// penalties, the good/bad control subspace machinery, spectral filtering and
// pulse spectra.

#include "qdc/dynamics.hpp"
#include "qdc/pulse.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qdc {

enum class PenaltyKind { energy, structure };
enum class LambdaProfile { constant, inverse_sin2, inverse_sin };

struct StructureSubspace {
  Eigen::MatrixXd good_basis;  // orthonormal columns spanning the good controls
  int rank = 0;                // retained rank after dropping dependent vectors
  int requested = 0;           // number of f_ij vectors before orthonormalization
};

// Discretized vectors f_ij(t_k) = sin^2(pi t_k/T) cos((E_i - E_j) t_k) for
// the 10 lowest states, orthonormalized.  t_k are the control interval
// start times.
inline StructureSubspace structure_subspace(const Eigen::VectorXd& energies, double T,
                                            double dt) {
  if (energies.size() < 10)
    throw std::invalid_argument("structure_subspace: need at least 10 energies");
  const int m = static_cast<int>(std::ceil(T / dt - 1e-12));
  StructureSubspace ss;
  Eigen::MatrixXd f(m, 45);
  int col = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < i; ++j) {
      const double w = energies(i) - energies(j);
      for (int k = 0; k < m; ++k) {
        const double t = k * dt;
        const double env = std::sin(M_PI * t / T);
        f(k, col) = env * env * std::cos(w * t);
      }
      ++col;
    }
  ss.requested = col;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(f, Eigen::ComputeThinU);
  const double tol = 1e-10 * svd.singularValues()(0);
  int r = 0;
  while (r < svd.singularValues().size() && svd.singularValues()(r) > tol) ++r;
  ss.good_basis = svd.matrixU().leftCols(r);
  ss.rank = r;
  return ss;
}

struct PenaltyConfig {
  PenaltyKind kind = PenaltyKind::energy;
  LambdaProfile profile = LambdaProfile::constant;
  double lambda = 1.0;
  double lambda1 = 0.0;   // weight on the good subspace (structure kind)
  double lambda2 = 10.0;  // weight on the bad subspace (structure kind)
  bool backward_update = false;
  std::optional<double> lowpass_cutoff;  // internal angular frequency

  // Endpoint-divergent profiles are clamped to a large finite cap.
  double lambda_at(double t, double T) const {
    constexpr double kCap = 1e12;
    switch (profile) {
      case LambdaProfile::constant: return lambda;
      case LambdaProfile::inverse_sin2: {
        const double s = std::sin(M_PI * t / T);
        return (s * s < lambda / kCap) ? kCap : lambda / (s * s);
      }
      case LambdaProfile::inverse_sin: {
        const double s = std::abs(std::sin(M_PI * t / T));
        return (s < lambda / kCap) ? kCap : lambda / s;
      }
    }
    return lambda;
  }
};

struct ControlProblem {
  VecC initial_state;
  VecC target_state;
  double T = 1.0;
  double dt = 0.5;
  PenaltyConfig penalty;
  PulseWaveform initial_guess;  // empty -> zero pulse
  int max_iterations = 100;
  double target_yield = 0.999;
};

struct OptimizedPulse {
  PulseWaveform pulse;                // best-yield iterate
  std::vector<double> yield_history;  // per-iteration yields
  double final_yield = 0.0;           // last entry of yield_history
  double best_yield = 0.0;            // yield of the returned pulse
  int best_iteration = 0;
  int iterations_used = 0;
};

// ---------------------------------------------------------------------------
// Spectral tools

// Real DFT magnitudes: returns {angular frequency (internal), |F|} for
// k = 0 .. M/2.
inline std::pair<std::vector<double>, std::vector<double>> pulse_spectrum(
    const PulseWaveform& p) {
  if (p.samples.empty()) throw std::invalid_argument("pulse_spectrum: empty pulse");
  const int m = p.n_intervals();
  std::vector<double> freq, mag;
  for (int k = 0; k <= m / 2; ++k) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * M_PI * k / m;
    for (int n = 0; n < m; ++n) acc += p.samples[n] * std::polar(1.0, w * n);
    freq.push_back(2.0 * M_PI * k / (m * p.dt));
    mag.push_back(std::abs(acc) / m);
  }
  return {freq, mag};
}

struct FilteredPulse {
  PulseWaveform pulse;
  bool applied = false;  // false when the cutoff was at/above Nyquist
};

// Hard spectral truncation above the cutoff (internal angular frequency).
inline FilteredPulse lowpass_filter(const PulseWaveform& p, double cutoff) {
  FilteredPulse out;
  out.pulse = p;
  const int m = p.n_intervals();
  const double nyquist = M_PI / p.dt;
  if (cutoff >= nyquist) return out;
  std::vector<std::complex<double>> spec(m);
  for (int k = 0; k < m; ++k) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * M_PI * k / m;
    for (int n = 0; n < m; ++n) acc += p.samples[n] * std::polar(1.0, w * n);
    spec[k] = acc;
  }
  for (int k = 0; k < m; ++k) {
    const int kk = (k <= m / 2) ? k : m - k;  // fold to the positive branch
    const double omega = 2.0 * M_PI * kk / (m * p.dt);
    if (omega > cutoff) spec[k] = 0.0;
  }
  for (int n = 0; n < m; ++n) {
    std::complex<double> acc = 0.0;
    const double w = 2.0 * M_PI * n / m;
    for (int k = 0; k < m; ++k) acc += spec[k] * std::polar(1.0, w * k);
    out.pulse.samples[n] = acc.real() / m;
  }
  out.applied = true;
  return out;
}

namespace detail {

// Propagate across one control interval.
inline void step_interval(Dopri5& stepper, const Eigen::VectorXd& energies,
                          const Eigen::MatrixXd& mu, double eps, double t0, double t1,
                          VecC& y, double direction_sign) {
  // direction_sign = -1: i y' = H y (forward); +1: backward-in-time traversal
  const std::complex<double> pre(0.0, direction_sign);
  VecC tmp(y.size());
  auto rhs = [&](double, const VecC& c, VecC& dc) {
    dc = pre * (energies.array() * c.array()).matrix();
    if (eps != 0.0) {
      real_mat_apply(mu, c, tmp);
      dc -= pre * eps * tmp;
    }
  };
  stepper.integrate(rhs, t0, t1, y);
}

}  // namespace detail

// Krotov loop with the zeroth-order pointwise update
//   eps_i = -Im <chi(t_i)| mu |Psi(t_i)> / lambda(t_i),
// where the structure penalty replaces the division by the solve against
// (lambda(t) I + lambda1 P_good + lambda2 P_bad) on the control grid.
// Convergence is not monotone; the best iterate is returned.
inline OptimizedPulse krotov_optimize(const ControlProblem& problem,
                                      const Eigen::VectorXd& energies,
                                      const Eigen::MatrixXd& dipole_eig,
                                      const PropagateOptions& opt = {}) {
  const int dim = static_cast<int>(energies.size());
  if (problem.initial_state.size() != dim || problem.target_state.size() != dim)
    throw std::invalid_argument("krotov_optimize: state dimension mismatch");

  PulseWaveform u = problem.initial_guess.samples.empty()
                        ? PulseWaveform::zero(problem.T, problem.dt)
                        : problem.initial_guess;
  const int m = u.n_intervals();

  Dopri5 stepper;
  stepper.rtol = opt.rtol;
  stepper.atol = opt.atol;
  const Eigen::MatrixXd& mu = dipole_eig;

  StructureSubspace good;
  Eigen::VectorXd lambda_grid(m);
  for (int i = 0; i < m; ++i) lambda_grid(i) = problem.penalty.lambda_at(u.t_start(i), problem.T);
  if (problem.penalty.kind == PenaltyKind::structure)
    good = structure_subspace(energies, problem.T, problem.dt);

  // u_new = (diag(lambda) + l1 P_good + l2 P_bad)^{-1} b via Woodbury.
  auto structure_solve = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd {
    const double l1 = problem.penalty.lambda1, l2 = problem.penalty.lambda2;
    Eigen::VectorXd m1inv = (lambda_grid.array() + l2).inverse();
    Eigen::VectorXd z = m1inv.cwiseProduct(b);
    if (std::abs(l1 - l2) < 1e-300 || good.rank == 0) return z;
    const auto& q = good.good_basis;
    Eigen::MatrixXd s = (1.0 / (l1 - l2)) * Eigen::MatrixXd::Identity(good.rank, good.rank);
    s += q.transpose() * m1inv.asDiagonal() * q;
    Eigen::VectorXd y = s.ldlt().solve(q.transpose() * z);
    return z - m1inv.cwiseProduct(q * y);
  };

  auto forward_states = [&](const PulseWaveform& pulse) {
    std::vector<VecC> states(m + 1);
    VecC y = problem.initial_state;
    states[0] = y;
    for (int i = 0; i < m; ++i) {
      detail::step_interval(stepper, energies, mu, pulse.samples[i], pulse.t_start(i),
                            pulse.t_end(i), y, -1.0);
      states[i + 1] = y;
    }
    return states;
  };

  auto overlap_imag = [&](const VecC& chi, const VecC& psi) {
    VecC tmp(dim);
    real_mat_apply(mu, psi, tmp);
    return std::imag(chi.dot(tmp));
  };

  OptimizedPulse result;
  result.pulse = u;
  double best = -1.0;

  for (int iter = 0; iter <= problem.max_iterations; ++iter) {
    auto psi = forward_states(u);
    const std::complex<double> amp = problem.target_state.dot(psi[m]);
    const double yield = std::norm(amp);
    result.yield_history.push_back(yield);
    result.iterations_used = iter;
    if (yield > best) {
      best = yield;
      result.pulse = u;
      result.best_iteration = iter;
    }
    if (yield >= problem.target_yield || iter == problem.max_iterations) break;

    // terminal value problem for chi, integrated backward
    std::vector<VecC> chi(m + 1);
    VecC y = problem.target_state * amp;
    chi[m] = y;
    for (int i = m - 1; i >= 0; --i) {
      double eps = u.samples[i];
      if (problem.penalty.backward_update) {
        const double b = -overlap_imag(y, psi[i + 1]);
        eps = b / lambda_grid(i);
        u.samples[i] = eps;
      }
      detail::step_interval(stepper, energies, mu, eps, u.t_end(i), u.t_start(i), y, -1.0);
      chi[i] = y;
    }

    // forward update sweep
    Eigen::VectorXd b(m);
    VecC psi_new = problem.initial_state;
    for (int i = 0; i < m; ++i) {
      b(i) = -overlap_imag(chi[i], psi_new);
      const double eps = b(i) / lambda_grid(i);
      detail::step_interval(stepper, energies, mu, eps, u.t_start(i), u.t_end(i), psi_new, -1.0);
      if (!std::isfinite(eps))
        throw std::runtime_error("krotov_optimize: non-finite control update at iteration " +
                                 std::to_string(iter));
    }
    if (problem.penalty.kind == PenaltyKind::structure) {
      Eigen::VectorXd unew = structure_solve(b);
      for (int i = 0; i < m; ++i) u.samples[i] = unew(i);
    } else {
      for (int i = 0; i < m; ++i) u.samples[i] = b(i) / lambda_grid(i);
    }
    if (problem.penalty.lowpass_cutoff)
      u = lowpass_filter(u, *problem.penalty.lowpass_cutoff).pulse;
  }

  result.final_yield = result.yield_history.back();
  result.best_yield = best;
  return result;
}

}  // namespace qdc
