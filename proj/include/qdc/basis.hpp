#pragma once

// Symmetrized two-electron basis of products of 2D harmonic oscillator
// (Hermite) functions.  Symmetric spatial pairs pair with the singlet spin
// function, antisymmetric pairs with the triplets.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qdc {

struct OrbitalIndex {
  int n_x = 0;
  int n_y = 0;
  bool operator==(const OrbitalIndex&) const = default;
};

enum class Sector { symmetric, antisymmetric };

struct PairIndex {
  int i = 0;  // orbital index, i <= j (symmetric) or i < j (antisymmetric)
  int j = 0;
};

struct TwoElectronBasis {
  std::vector<OrbitalIndex> orbitals;
  std::vector<PairIndex> pairs;
  Sector sector = Sector::symmetric;
  int n_x_max = 0;
  int n_y_max = 0;

  int n_orbitals() const { return static_cast<int>(orbitals.size()); }
  int size() const { return static_cast<int>(pairs.size()); }

  // Normalization factor of pair p: 1/sqrt(2) for i != j, 1 for i == j.
  double norm_factor(int p) const {
    return pairs[p].i == pairs[p].j ? 1.0 : 0.7071067811865475244;
  }
};

// Orbitals enumerated lexicographically in (n_x, n_y); pairs lexicographic
// in (i, j).  This ordering is part of the cache format.
inline TwoElectronBasis build_basis(int n_x_max, int n_y_max, Sector sector) {
  if (n_x_max < 0 || n_y_max < 0)
    throw std::invalid_argument("build_basis: negative quantum number limit");
  TwoElectronBasis b;
  b.sector = sector;
  b.n_x_max = n_x_max;
  b.n_y_max = n_y_max;
  for (int nx = 0; nx <= n_x_max; ++nx)
    for (int ny = 0; ny <= n_y_max; ++ny)
      b.orbitals.push_back({nx, ny});
  const int n = b.n_orbitals();
  for (int i = 0; i < n; ++i) {
    const int j0 = (sector == Sector::symmetric) ? i : i + 1;
    for (int j = j0; j < n; ++j) b.pairs.push_back({i, j});
  }
  return b;
}

// (x_parity, y_parity) of pair p: (-1)^(n_x(i)+n_x(j)), (-1)^(n_y(i)+n_y(j)).
inline std::pair<int, int> pair_parity(const TwoElectronBasis& b, int p) {
  if (p < 0 || p >= b.size()) throw std::out_of_range("pair_parity: index out of range");
  const auto& oi = b.orbitals[b.pairs[p].i];
  const auto& oj = b.orbitals[b.pairs[p].j];
  const int px = ((oi.n_x + oj.n_x) % 2 == 0) ? 1 : -1;
  const int py = ((oi.n_y + oj.n_y) % 2 == 0) ? 1 : -1;
  return {px, py};
}

// Total oscillator quanta of pair p.
inline int pair_quanta(const TwoElectronBasis& b, int p) {
  const auto& oi = b.orbitals[b.pairs[p].i];
  const auto& oj = b.orbitals[b.pairs[p].j];
  return oi.n_x + oi.n_y + oj.n_x + oj.n_y;
}

}  // namespace qdc
