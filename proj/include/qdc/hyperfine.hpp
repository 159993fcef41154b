#pragma once

// Hyperfine interaction of the two electrons with a semiclassical nuclear
// field acting over the x >= 0 half plane: spin-space blocks between the
// singlet and triplet eigenbases, random field sampling and ensemble
// dephasing simulations.

#include "qdc/operators.hpp"
#include "qdc/spectrum.hpp"

#include <Eigen/Dense>

#include <complex>
#include <random>
#include <vector>

namespace qdc {

struct NuclearField {
  double b_x = 0.0, b_y = 0.0, b_z = 0.0;  // Tesla; support x >= 0 is structural
};

// Three independent normal components with standard deviation b_nuc.
inline NuclearField sample_nuclear_field(double b_nuc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, b_nuc);
  NuclearField f;
  f.b_x = nd(rng);
  f.b_y = nd(rng);
  f.b_z = nd(rng);
  return f;
}

// Two-electron spin space in the {S, T+, T0, T-} order.
// spin_minus_c = <S| S1c - S2c |T_a> (rows: S only, cols: T+,T0,T-),
// spin_plus_c  = <T_a| S1c + S2c |T_b>.
struct SpinCouplingTables {
  // [c][alpha], c in {x,y,z}, alpha in {T+,T0,T-}
  std::complex<double> singlet_triplet[3][3];
  // [c][alpha][beta]
  std::complex<double> triplet_triplet[3][3][3];

  SpinCouplingTables() {
    using C = std::complex<double>;
    const C i(0.0, 1.0);
    // two-spin product space basis: uu, ud, du, dd
    Eigen::Matrix2cd sx, sy, sz, id;
    sx << 0, 0.5, 0.5, 0;
    sy << 0, C(0, -0.5), C(0, 0.5), 0;
    sz << 0.5, 0, 0, -0.5;
    id.setIdentity();
    Eigen::Matrix4cd s1[3], s2[3];
    const Eigen::Matrix2cd ops[3] = {sx, sy, sz};
    for (int c = 0; c < 3; ++c) {
      s1[c] = Eigen::Matrix4cd::Zero();
      s2[c] = Eigen::Matrix4cd::Zero();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int ap = 0; ap < 2; ++ap)
            for (int bp = 0; bp < 2; ++bp) {
              s1[c](a * 2 + b, ap * 2 + bp) = ops[c](a, ap) * id(b, bp);
              s2[c](a * 2 + b, ap * 2 + bp) = id(a, ap) * ops[c](b, bp);
            }
    }
    Eigen::Vector4cd singlet, triplet[3];
    const double r = 0.7071067811865475244;
    singlet << 0, r, -r, 0;
    triplet[0] << 1, 0, 0, 0;       // T+
    triplet[1] << 0, r, r, 0;       // T0
    triplet[2] << 0, 0, 0, 1;       // T-
    for (int c = 0; c < 3; ++c) {
      for (int a = 0; a < 3; ++a) {
        singlet_triplet[c][a] = singlet.dot((s1[c] - s2[c]) * triplet[a]);
        for (int b = 0; b < 3; ++b)
          triplet_triplet[c][a][b] = triplet[a].dot((s1[c] + s2[c]) * triplet[b]);
      }
    }
  }
};

inline const SpinCouplingTables& spin_coupling_tables() {
  static const SpinCouplingTables t;
  return t;
}

struct SpinSpaceModel {
  int n_states = 0;  // eigenstates retained per sector
  Eigen::VectorXd singlet_energies;
  Eigen::VectorXd triplet_energies;
  // half-space one-body operator lifted to the eigenbases:
  Eigen::MatrixXd st_spatial;  // U_S^T <sym|(Theta1 - Theta2)|antisym> U_T
  Eigen::MatrixXd tt_spatial;  // U_T^T <antisym|(Theta1 + Theta2)|antisym> U_T
  double zeeman_per_tesla = 0.0;

  int dim() const { return 4 * n_states; }

  // Full spin-space Hamiltonian for a given nuclear field, internal units,
  // basis order [S(n), T+(n), T0(n), T-(n)].
  Eigen::MatrixXcd hamiltonian(const NuclearField& f) const {
    const int n = n_states;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(4 * n, 4 * n);
    for (int k = 0; k < n; ++k) {
      h(k, k) = singlet_energies(k);
      for (int a = 0; a < 3; ++a) h((1 + a) * n + k, (1 + a) * n + k) = triplet_energies(k);
    }
    const auto& tab = spin_coupling_tables();
    const double b[3] = {f.b_x, f.b_y, f.b_z};
    for (int c = 0; c < 3; ++c) {
      if (b[c] == 0.0) continue;
      const double g = 0.5 * zeeman_per_tesla * b[c];
      for (int a = 0; a < 3; ++a) {
        const std::complex<double> st = g * tab.singlet_triplet[c][a];
        if (st != 0.0) h.block(0, (1 + a) * n, n, n) += st * st_spatial;
        for (int bb = 0; bb < 3; ++bb) {
          const std::complex<double> tt = g * tab.triplet_triplet[c][a][bb];
          if (tt != 0.0) h.block((1 + a) * n, (1 + bb) * n, n, n) += tt * tt_spatial;
        }
      }
    }
    // mirror the S-T blocks
    for (int a = 0; a < 3; ++a)
      h.block((1 + a) * n, 0, n_states, n_states) =
          h.block(0, (1 + a) * n, n_states, n_states).adjoint();
    return h;
  }
};

// Assemble the spin-space model from singlet/triplet eigensolutions in the
// corresponding pair bases.
inline SpinSpaceModel build_spin_space_model(const TwoElectronBasis& sym,
                                             const TwoElectronBasis& antisym,
                                             const EigenSolution& singlets,
                                             const EigenSolution& triplets,
                                             const Eigen::MatrixXd& halfspace_orbital,
                                             double zeeman_per_tesla) {
  SpinSpaceModel m;
  m.n_states = static_cast<int>(singlets.energies.size());
  if (triplets.energies.size() != m.n_states)
    throw std::invalid_argument("build_spin_space_model: sector size mismatch");
  m.singlet_energies = singlets.energies;
  m.triplet_energies = triplets.energies;
  Eigen::MatrixXd st_pair = pair_one_body<double>(sym, antisym, halfspace_orbital, -1);
  Eigen::MatrixXd tt_pair = pair_one_body<double>(antisym, antisym, halfspace_orbital, +1);
  m.st_spatial = singlets.vectors.transpose() * st_pair * triplets.vectors;
  m.tt_spatial = triplets.vectors.transpose() * tt_pair * triplets.vectors;
  m.zeeman_per_tesla = zeeman_per_tesla;
  return m;
}

struct DephasingResult {
  std::vector<double> times;         // internal time
  std::vector<double> mean_singlet;  // ensemble mean singlet probability
  std::vector<double> stderr_singlet;
  // final full spin-space states per sample (for protocol continuations)
  std::vector<Eigen::VectorXcd> final_states;
};

// Hold the given spin-space state for `hold_time` under H = E + H_N(B) with
// a frozen random field per sample; returns ensemble statistics of the
// singlet-sector probability.
inline DephasingResult ensemble_dephasing(const SpinSpaceModel& model,
                                          const Eigen::VectorXcd& initial, double hold_time,
                                          int n_samples, double b_nuc, std::uint64_t seed,
                                          int n_times = 100) {
  if (n_samples < 1) throw std::invalid_argument("ensemble_dephasing: n_samples < 1");
  const int n = model.n_states;
  DephasingResult res;
  for (int it = 0; it <= n_times; ++it) res.times.push_back(hold_time * it / n_times);
  std::vector<double> sum(n_times + 1, 0.0), sum2(n_times + 1, 0.0);
  for (int s = 0; s < n_samples; ++s) {
    const NuclearField f = (b_nuc > 0.0) ? sample_nuclear_field(b_nuc, seed + s)
                                         : NuclearField{};
    Eigen::MatrixXcd h = model.hamiltonian(f);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd c0 = es.eigenvectors().adjoint() * initial;
    Eigen::VectorXcd state;
    for (int it = 0; it <= n_times; ++it) {
      const double t = res.times[it];
      Eigen::VectorXcd phase(c0.size());
      for (Eigen::Index k = 0; k < c0.size(); ++k)
        phase(k) = c0(k) * std::exp(std::complex<double>(0.0, -es.eigenvalues()(k) * t));
      state = es.eigenvectors() * phase;
      const double ps = state.head(n).squaredNorm();
      sum[it] += ps;
      sum2[it] += ps * ps;
    }
    res.final_states.push_back(state);
  }
  for (int it = 0; it <= n_times; ++it) {
    const double mean = sum[it] / n_samples;
    res.mean_singlet.push_back(mean);
    const double var = std::max(0.0, sum2[it] / n_samples - mean * mean);
    res.stderr_singlet.push_back(n_samples > 1 ? std::sqrt(var / (n_samples - 1)) : 0.0);
  }
  return res;
}

}  // namespace qdc
