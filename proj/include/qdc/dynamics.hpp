#pragma once

// Time propagation of the expansion coefficients in the eigenstate basis and
// in the adiabatic (field-parametrized) basis, plus observables.

#include "qdc/basis.hpp"
#include "qdc/pulse.hpp"
#include "qdc/spectrum.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace qdc {

using VecC = Eigen::VectorXcd;

enum class BasisTag { eigenstate, adiabatic };

struct Trajectory {
  std::vector<double> times;
  std::vector<VecC> coefficients;
  BasisTag basis_tag = BasisTag::eigenstate;

  const VecC& final_state() const { return coefficients.back(); }
};

// Embedded Dormand-Prince 5(4) with adaptive step control.
class Dopri5 {
 public:
  using Rhs = std::function<void(double, const VecC&, VecC&)>;

  double rtol = 1e-9;
  double atol = 1e-12;

  // Integrate y from t0 to t1 (either direction).  Throws if the required
  // step size underflows.
  void integrate(const Rhs& rhs, double t0, double t1, VecC& y) const {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = (t1 >= t0) ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    if (span == 0.0) return;
    double t = t0;
    double h = dir * std::min(span, 0.1);
    VecC k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()), k6(y.size()),
        k7(y.size()), ytmp(y.size()), y5(y.size());
    rhs(t, y, k1);
    int rejected_in_a_row = 0;
    while (dir * (t1 - t) > 1e-14 * span) {
      if (dir * (t + h - t1) > 0) h = t1 - t;
      ytmp = y + h * a21 * k1;
      rhs(t + c2 * h, ytmp, k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      rhs(t + c3 * h, ytmp, k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      rhs(t + c4 * h, ytmp, k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      rhs(t + c5 * h, ytmp, k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      rhs(t + h, ytmp, k6);
      y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      rhs(t + h, y5, k7);
      // error estimate
      double err = 0.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const std::complex<double> de =
            h * (e1 * k1(i) + e3 * k3(i) + e4 * k4(i) + e5 * k5(i) + e6 * k6(i) + e7 * k7(i));
        const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
        err += std::norm(de) / (sc * sc);
      }
      err = std::sqrt(err / static_cast<double>(y.size()));
      if (err <= 1.0) {
        t += h;
        y.swap(y5);
        k1.swap(k7);  // FSAL
        rejected_in_a_row = 0;
      } else if (++rejected_in_a_row > 60) {
        throw std::runtime_error("dopri5: step size underflow, local error " +
                                 std::to_string(err));
      }
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
      fac = std::min(5.0, std::max(0.2, fac));
      h *= fac;
      if (std::abs(h) < 1e-14 * span)
        throw std::runtime_error("dopri5: vanishing step size");
    }
  }
};

// y = A * c for real A and complex c.
inline void real_mat_apply(const Eigen::MatrixXd& a, const VecC& c, VecC& y) {
  y.real() = a * c.real();
  y.imag() = a * c.imag();
}

struct PropagateOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  int store_stride = 1;  // store every n-th control interval boundary
};

// Eq.-(6)-type propagation: i d' = (diag(E) - eps(t) X) d, with eps(t)
// piecewise constant; the integrator is restarted at control breakpoints.
inline Trajectory propagate_eigenbasis(const VecC& initial, const PulseWaveform& pulse,
                                       const Eigen::VectorXd& energies,
                                       const Eigen::MatrixXd& dipole_eig,
                                       const PropagateOptions& opt = {}) {
  if (initial.size() != energies.size() || dipole_eig.rows() != energies.size())
    throw std::invalid_argument("propagate_eigenbasis: dimension mismatch");
  Dopri5 stepper;
  stepper.rtol = opt.rtol;
  stepper.atol = opt.atol;
  const std::complex<double> mi(0.0, -1.0);
  Trajectory traj;
  traj.basis_tag = BasisTag::eigenstate;
  VecC y = initial;
  VecC tmp(initial.size());
  traj.times.push_back(0.0);
  traj.coefficients.push_back(y);
  for (int i = 0; i < pulse.n_intervals(); ++i) {
    const double eps = pulse.samples[i];
    auto rhs = [&](double, const VecC& c, VecC& dc) {
      dc = mi * (energies.array() * c.array()).matrix();
      if (eps != 0.0) {
        real_mat_apply(dipole_eig, c, tmp);
        dc += (mi * -eps) * tmp;
      }
    };
    stepper.integrate(rhs, pulse.t_start(i), pulse.t_end(i), y);
    if ((i + 1) % opt.store_stride == 0 || i + 1 == pulse.n_intervals()) {
      traj.times.push_back(pulse.t_end(i));
      traj.coefficients.push_back(y);
    }
  }
  return traj;
}

// Field-free propagation for a plain hold: exact phases.
inline VecC evolve_free(const VecC& c, const Eigen::VectorXd& energies, double t) {
  VecC out(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k)
    out(k) = c(k) * std::exp(std::complex<double>(0.0, -energies(k) * t));
  return out;
}

// Electric-field switch schedule xi(t) between xi_start and xi_end.
struct SwitchSchedule {
  enum class Shape { linear, sin2, tanh_ramp };
  Shape shape = Shape::sin2;
  double xi_start = 0.0;
  double xi_end = 0.0;
  double duration = 1.0;

  double value(double t) const {
    const double s = std::clamp(t / duration, 0.0, 1.0);
    return xi_start + (xi_end - xi_start) * ramp(s);
  }
  double derivative(double t) const {
    const double s = std::clamp(t / duration, 0.0, 1.0);
    return (xi_end - xi_start) * dramp(s) / duration;
  }

 private:
  double ramp(double s) const {
    switch (shape) {
      case Shape::linear: return s;
      case Shape::sin2: {
        const double v = std::sin(0.5 * M_PI * s);
        return v * v;
      }
      case Shape::tanh_ramp: return 0.5 * (1.0 + std::tanh(6.0 * (s - 0.5)) / std::tanh(3.0));
    }
    return s;
  }
  double dramp(double s) const {
    switch (shape) {
      case Shape::linear: return 1.0;
      case Shape::sin2: return 0.5 * M_PI * std::sin(M_PI * s);
      case Shape::tanh_ramp: {
        const double c = std::cosh(6.0 * (s - 0.5));
        return 3.0 / (std::tanh(3.0) * c * c);
      }
    }
    return 1.0;
  }
};

// Linear interpolation of the adiabatic table in xi.
struct AdiabaticInterpolant {
  const AdiabaticTable* table;

  void eval(double xi, Eigen::VectorXd& energies, Eigen::MatrixXd& k) const {
    const auto& grid = table->xi_grid;
    if (xi < grid.front() - 1e-12 || xi > grid.back() + 1e-12)
      throw std::out_of_range("adiabatic interpolation: xi outside table range");
    size_t hi = std::upper_bound(grid.begin(), grid.end(), xi) - grid.begin();
    if (hi == 0) hi = 1;
    if (hi >= grid.size()) hi = grid.size() - 1;
    const size_t lo = hi - 1;
    const double w = std::clamp((xi - grid[lo]) / (grid[hi] - grid[lo]), 0.0, 1.0);
    energies = (1.0 - w) * table->solutions[lo].energies + w * table->solutions[hi].energies;
    k = (1.0 - w) * table->k_matrices[lo] + w * table->k_matrices[hi];
  }
};

// Eq.-(11)-type propagation: c' = (-xi'(t) K(xi) + i eps(xi)) c.
inline Trajectory propagate_adiabatic(const VecC& initial, const SwitchSchedule& sw,
                                      const AdiabaticTable& table,
                                      const PropagateOptions& opt = {}, int n_store = 200) {
  if (!table.gauge_fixed)
    throw std::runtime_error("propagate_adiabatic: table is not gauge-fixed");
  if (initial.size() != table.n_keep)
    throw std::invalid_argument("propagate_adiabatic: dimension mismatch");
  Dopri5 stepper;
  stepper.rtol = opt.rtol;
  stepper.atol = opt.atol;
  AdiabaticInterpolant interp{&table};
  Eigen::VectorXd en(table.n_keep);
  Eigen::MatrixXd k(table.n_keep, table.n_keep);
  const std::complex<double> im(0.0, 1.0);
  VecC tmp(initial.size());
  auto rhs = [&](double t, const VecC& c, VecC& dc) {
    interp.eval(sw.value(t), en, k);
    const double xidot = sw.derivative(t);
    dc = im * (en.array() * c.array()).matrix();
    if (xidot != 0.0) {
      real_mat_apply(k, c, tmp);
      dc -= xidot * tmp;
    }
  };
  Trajectory traj;
  traj.basis_tag = BasisTag::adiabatic;
  VecC y = initial;
  double t = 0.0;
  traj.times.push_back(t);
  traj.coefficients.push_back(y);
  const double tstep = sw.duration / n_store;
  for (int i = 0; i < n_store; ++i) {
    const double tnext = (i + 1 == n_store) ? sw.duration : (i + 1) * tstep;
    stepper.integrate(rhs, t, tnext, y);
    t = tnext;
    traj.times.push_back(t);
    traj.coefficients.push_back(y);
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Observables

inline Eigen::VectorXd populations(const VecC& c) { return c.cwiseAbs2(); }

// <c|A|c> for real symmetric A.
inline double expectation_real(const VecC& c, const Eigen::MatrixXd& op) {
  const Eigen::VectorXd re = c.real(), imv = c.imag();
  return re.dot(op * re) + imv.dot(op * imv);
}

// One-electron density rho(x) = int dy1 d^2r2 |Psi|^2 on a grid of x values
// (internal lengths), from pair-basis coefficients.
inline Eigen::VectorXd reduced_density_x(const VecC& pair_coeffs, const TwoElectronBasis& basis,
                                         double osc_length,
                                         const Eigen::VectorXd& x_grid) {
  const int n = basis.n_orbitals();
  // expand to the unsymmetrized product matrix W[a][b]
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n, n);
  const double s = (basis.sector == Sector::symmetric) ? 1.0 : -1.0;
  for (int p = 0; p < basis.size(); ++p) {
    const int a = basis.pairs[p].i, b = basis.pairs[p].j;
    const std::complex<double> c = pair_coeffs(p);
    if (a == b) {
      w(a, a) += c;
    } else {
      w(a, b) += c * 0.7071067811865475244;
      w(b, a) += s * c * 0.7071067811865475244;
    }
  }
  // one-particle density matrix (trace 1)
  Eigen::MatrixXcd gamma = w * w.adjoint();
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(x_grid.size());
  std::vector<double> phi(basis.n_x_max + 1);
  for (Eigen::Index g = 0; g < x_grid.size(); ++g) {
    hermite_eval(basis.n_x_max, x_grid(g) / osc_length, phi.data());
    double v = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (basis.orbitals[a].n_y != basis.orbitals[b].n_y) continue;
        v += std::real(gamma(a, b)) * phi[basis.orbitals[a].n_x] * phi[basis.orbitals[b].n_x];
      }
    rho(g) = v / osc_length;  // normalization of phi(x/l)
  }
  return rho;
}

}  // namespace qdc
