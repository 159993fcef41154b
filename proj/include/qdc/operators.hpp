#pragma once

// Assembly of all operator matrices in the symmetrized two-electron basis:
// field-free Hamiltonian, dipole X = x1 + x2, magnetic terms and the
// half-space overlaps used by the hyperfine coupling.

#include "qdc/basis.hpp"
#include "qdc/coulomb.hpp"
#include "qdc/hermite1d.hpp"
#include "qdc/units.hpp"

#include <Eigen/Dense>

#include <complex>
#include <functional>

namespace qdc {

// One-body matrix o in the orbital basis lifted to the pair basis as
// o(1) + o(2) (sign = +1) or o(1) - o(2) (sign = -1).  bra and ket may be
// different sectors; the -1 combination connects symmetric to antisymmetric.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pair_one_body(
    const TwoElectronBasis& bra, const TwoElectronBasis& ket,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& o, int sign) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const double s_bra = (bra.sector == Sector::symmetric) ? 1.0 : -1.0;
  const double s_ket = (ket.sector == Sector::symmetric) ? 1.0 : -1.0;
  Mat m = Mat::Zero(bra.size(), ket.size());
  for (int p = 0; p < bra.size(); ++p) {
    const int a = bra.pairs[p].i, b = bra.pairs[p].j;
    const double npf = (a == b) ? 0.5 : 0.7071067811865475244;
    for (int q = 0; q < ket.size(); ++q) {
      const int c = ket.pairs[q].i, d = ket.pairs[q].j;
      const double nqf = (c == d) ? 0.5 : 0.7071067811865475244;
      // <ab|O|cd> with O = o(1) +/- o(2)
      auto elem = [&](int ai, int bi, int ci, int di) -> Scalar {
        Scalar v{};
        if (bi == di) v += o(ai, ci);
        if (ai == ci) v += Scalar(sign) * o(bi, di);
        return v;
      };
      // expand bra (s_bra) and ket (s_ket) symmetrization; exchange symmetry
      // of the operator collapses the four terms to two.
      Scalar t1 = elem(a, b, c, d);
      Scalar t2 = elem(a, b, d, c);
      Scalar t3 = elem(b, a, c, d);
      Scalar t4 = elem(b, a, d, c);
      m(p, q) = npf * nqf * (t1 + Scalar(s_ket) * t2 + Scalar(s_bra) * t3 +
                             Scalar(s_bra * s_ket) * t4);
    }
  }
  return m;
}

struct OperatorSet {
  TwoElectronBasis basis;
  InternalParams ip;
  Eigen::MatrixXd h0;                  // field-free Hamiltonian, internal energies
  Eigen::MatrixXd x_dipole;            // X = x1 + x2, internal lengths
  Eigen::MatrixXd magnetic_quadratic;  // x1^2+y1^2+x2^2+y2^2
  Eigen::MatrixXcd lz;                 // L_z1 + L_z2 (purely imaginary entries)
  Eigen::MatrixXd halfspace_overlap;   // P[a,b] = <a| Theta(x) |b> over orbitals
};

// Single-orbital matrix of an operator separable as fx(n_x,m_x)*fy(n_y,m_y).
inline Eigen::MatrixXd orbital_matrix(const TwoElectronBasis& b,
                                      const std::function<double(int, int)>& fx,
                                      const std::function<double(int, int)>& fy) {
  const int n = b.n_orbitals();
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      m(a, c) = fx(b.orbitals[a].n_x, b.orbitals[c].n_x) *
                fy(b.orbitals[a].n_y, b.orbitals[c].n_y);
  return m;
}

inline double kron_delta(int n, int m) { return n == m ? 1.0 : 0.0; }

// One-body part of h0 in the orbital basis:
//   -1/2 nabla^2 + 1/2 omega^2 [(|x|-d/2)^2 + y^2]
// = omega(n_x+n_y+1) delta - 1/2 omega^2 d l <|u|> + omega^2 d^2/8 delta,
// with l = 1/sqrt(omega) the oscillator length.
inline Eigen::MatrixXd h0_one_body(const TwoElectronBasis& b, const InternalParams& ip) {
  const int n = b.n_orbitals();
  const double w = ip.omega, l = ip.osc_length, d = ip.d;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    m(a, a) = w * (b.orbitals[a].n_x + b.orbitals[a].n_y + 1) + w * w * d * d / 8.0;
    for (int c = 0; c < n; ++c) {
      if (b.orbitals[a].n_y != b.orbitals[c].n_y) continue;
      m(a, c) += -0.5 * w * w * d * l * absx_matrix_element(b.orbitals[a].n_x, b.orbitals[c].n_x);
    }
  }
  return m;
}

inline Eigen::MatrixXd halfspace_orbital_matrix(const TwoElectronBasis& b) {
  return orbital_matrix(b, [](int n, int m) { return hermite_half_integral(n, m); },
                        kron_delta);
}

// Full operator set for one sector.  Coulomb assembly dominates the cost.
inline OperatorSet assemble_operators(const TwoElectronBasis& basis, const InternalParams& ip,
                                      bool with_coulomb = true) {
  OperatorSet ops;
  ops.basis = basis;
  ops.ip = ip;
  const double l = ip.osc_length;

  ops.h0 = pair_one_body<double>(basis, basis, h0_one_body(basis, ip), +1);
  if (with_coulomb) ops.h0 += coulomb_pair_matrix(basis, ip.omega);

  Eigen::MatrixXd x_orb = orbital_matrix(
      basis, [l](int n, int m) { return l * x_matrix_element(n, m); }, kron_delta);
  ops.x_dipole = pair_one_body<double>(basis, basis, x_orb, +1);

  Eigen::MatrixXd r2_orb = orbital_matrix(
      basis, [l](int n, int m) { return l * l * x2_matrix_element(n, m); }, kron_delta);
  r2_orb += orbital_matrix(basis, kron_delta, [l](int n, int m) {
    return l * l * x2_matrix_element(n, m);
  });
  ops.magnetic_quadratic = pair_one_body<double>(basis, basis, r2_orb, +1);

  // L_z = x p_y - y p_x; x,y elements real, p elements purely imaginary.
  const int n = basis.n_orbitals();
  Eigen::MatrixXcd lz_orb(n, n);
  const std::complex<double> im(0.0, 1.0);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      const auto& oa = basis.orbitals[a];
      const auto& oc = basis.orbitals[c];
      // oscillator length cancels between the coordinate and the momentum
      const double xp = x_matrix_element(oa.n_x, oc.n_x) * p_matrix_element_imag(oa.n_y, oc.n_y);
      const double yp = x_matrix_element(oa.n_y, oc.n_y) * p_matrix_element_imag(oa.n_x, oc.n_x);
      lz_orb(a, c) = im * (xp - yp);
    }
  ops.lz = pair_one_body<std::complex<double>>(basis, basis, lz_orb, +1);

  ops.halfspace_overlap = halfspace_orbital_matrix(basis);
  return ops;
}

// Magnetic field pieces of Eq.-(3) form, internal units: for a field B
// (internal units) the pair-basis Hamiltonian gains
//   B^2/8 * magnetic_quadratic + B/2 * lz  (+ spin Zeeman handled in spin space).
struct MagneticPieces {
  Eigen::MatrixXd quadratic;   // includes the B^2/8 factor
  Eigen::MatrixXcd paramagnetic;  // includes the B/2 factor
  double spin_zeeman_coeff;    // gamma_e * B per unit s_z, internal energy
};

inline MagneticPieces assemble_external(const OperatorSet& ops, const InternalParams& ip,
                                        double b_internal, double b_tesla) {
  MagneticPieces mp;
  mp.quadratic = (b_internal * b_internal / 8.0) * ops.magnetic_quadratic;
  mp.paramagnetic = (b_internal / 2.0) * ops.lz;
  mp.spin_zeeman_coeff = ip.zeeman_per_tesla * b_tesla;
  return mp;
}

}  // namespace qdc
