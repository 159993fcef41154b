#pragma once

// Coulomb matrix elements 1/r12 in the 2D Cartesian oscillator basis.
//
// Strategy: transform each product phi_a(r1) phi_b(r2) to center-of-mass /
// relative coordinates u = (r1-r2)/sqrt(2), v = (r1+r2)/sqrt(2) with the 1D
// two-mode rotation coefficients, then use 1/|r1-r2| = 1/(sqrt(2)|u|) and a
// precomputed table of relative-coordinate integrals
//   R(n,m;n',m') = <phi_n phi_m| 1/|u| |phi_n' phi_m'>,
// evaluated through 1/|u| = (2/sqrt(pi)) int_0^inf exp(-s^2 u^2) ds, which
// factorizes into 1D Gaussian-damped overlaps.

#include "qdc/basis.hpp"
#include "qdc/hermite1d.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace qdc {

// Coefficients of phi_{n1}(x1) phi_{n2}(x2) = sum_k B(n1,n2,k)
// phi_k((x1-x2)/sqrt(2)) phi_{n1+n2-k}((x1+x2)/sqrt(2)).
class MoshinskyTable {
 public:
  explicit MoshinskyTable(int n_max) : n_max_(n_max), coef_((n_max + 1) * (n_max + 1)) {
    std::vector<double> lf(2 * n_max + 2, 0.0);
    for (int k = 1; k < static_cast<int>(lf.size()); ++k)
      lf[k] = lf[k - 1] + std::log(static_cast<double>(k));
    for (int n1 = 0; n1 <= n_max; ++n1)
      for (int n2 = 0; n2 <= n_max; ++n2) {
        const int N = n1 + n2;
        auto& row = coef_[n1 * (n_max_ + 1) + n2];
        row.resize(N + 1);
        for (int k = 0; k <= N; ++k) {
          double sum = 0.0;
          for (int j = std::max(0, k - n2); j <= std::min(n1, k); ++j) {
            const double lc = lf[n1] - lf[j] - lf[n1 - j] + lf[n2] - lf[k - j] - lf[n2 - k + j];
            sum += ((k - j) % 2 ? -1.0 : 1.0) * std::exp(lc);
          }
          const double lpre = 0.5 * (lf[k] + lf[N - k] - lf[n1] - lf[n2]) -
                              0.5 * N * std::log(2.0);
          row[k] = sum * std::exp(lpre);
        }
      }
  }

  double operator()(int n1, int n2, int k) const { return coef_[n1 * (n_max_ + 1) + n2][k]; }
  int n_max() const { return n_max_; }

 private:
  int n_max_;
  std::vector<std::vector<double>> coef_;
};

// Table of relative-coordinate integrals R(nx,mx;ny,my) for indices up to
// (x_max, y_max).  Entries with odd nx+mx or ny+my vanish by parity.
class RelativeCoulombTable {
 public:
  RelativeCoulombTable(int x_max, int y_max, int n_s = 256, int n_gh = 48)
      : x_max_(x_max), y_max_(y_max) {
    const auto theta = gauss_legendre(n_s, 0.0, M_PI / 2.0);
    const auto gh = gauss_hermite(n_gh);
    const int nx = x_max_ + 1, ny = y_max_ + 1;
    data_.assign(static_cast<size_t>(nx) * nx * ny * ny, 0.0);

    const int nmax = std::max(x_max_, y_max_);
    std::vector<double> gx(static_cast<size_t>(nx) * nx), gy(static_cast<size_t>(ny) * ny);
    std::vector<double> phi((nmax + 1) * n_gh);

    for (int q = 0; q < n_s; ++q) {
      const double t = theta.nodes[q];
      const double s = std::tan(t);
      const double sec2 = 1.0 + s * s;
      const double c = 1.0 + s * s;  // Gaussian exponent 1 + s^2
      const double inv_sqrt_c = 1.0 / std::sqrt(c);
      // phi_n at scaled Gauss-Hermite nodes y/sqrt(c); the e^{-x^2} factor
      // of the Hermite functions is replaced by the GH weight, so evaluate
      // the polynomial part only: phi_n(x) * e^{+x^2/2} at x = y/sqrt(c).
      for (int g = 0; g < n_gh; ++g) {
        const double x = gh.nodes[g] * inv_sqrt_c;
        hermite_eval(nmax, x, &phi[static_cast<size_t>(g) * (nmax + 1)]);
        const double corr = std::exp(0.5 * x * x);
        for (int n = 0; n <= nmax; ++n) phi[static_cast<size_t>(g) * (nmax + 1) + n] *= corr;
      }
      auto damped_overlap = [&](int n, int m) {
        // int phi_n phi_m e^{-s^2 x^2} dx = (1/sqrt(c)) int e^{-y^2} Pn Pm dy
        double acc = 0.0;
        for (int g = 0; g < n_gh; ++g)
          acc += gh.weights[g] * phi[static_cast<size_t>(g) * (nmax + 1) + n] *
                 phi[static_cast<size_t>(g) * (nmax + 1) + m];
        return acc * inv_sqrt_c;
      };
      for (int n = 0; n <= x_max_; ++n)
        for (int m = n; m <= x_max_; ++m) {
          const double v = ((n + m) % 2 == 0) ? damped_overlap(n, m) : 0.0;
          gx[static_cast<size_t>(n) * nx + m] = gx[static_cast<size_t>(m) * nx + n] = v;
        }
      for (int n = 0; n <= y_max_; ++n)
        for (int m = n; m <= y_max_; ++m) {
          const double v = ((n + m) % 2 == 0) ? damped_overlap(n, m) : 0.0;
          gy[static_cast<size_t>(n) * ny + m] = gy[static_cast<size_t>(m) * ny + n] = v;
        }
      const double w = theta.weights[q] * sec2 * 2.0 / std::sqrt(M_PI);
      for (int a = 0; a <= x_max_; ++a)
        for (int b = 0; b <= x_max_; ++b) {
          const double gxv = gx[static_cast<size_t>(a) * nx + b];
          if (gxv == 0.0) continue;
          for (int cidx = 0; cidx <= y_max_; ++cidx)
            for (int d = 0; d <= y_max_; ++d)
              data_[index(a, b, cidx, d)] += w * gxv * gy[static_cast<size_t>(cidx) * ny + d];
        }
    }
  }

  // <phi_nx phi_ny | 1/|u| | phi_mx phi_my>
  double operator()(int nx, int mx, int ny, int my) const {
    return data_[index(nx, mx, ny, my)];
  }

 private:
  size_t index(int nx, int mx, int ny, int my) const {
    return ((static_cast<size_t>(nx) * (x_max_ + 1) + mx) * (y_max_ + 1) + ny) *
               (y_max_ + 1) + my;
  }
  int x_max_, y_max_;
  std::vector<double> data_;
};

// Primitive two-body integral <ab| 1/|r1 - r2| |cd> over unsymmetrized
// orbital products, oscillator units.
class CoulombEngine {
 public:
  CoulombEngine(int n_x_max, int n_y_max)
      : mosh_(std::max(n_x_max, n_y_max)),
        rel_(2 * n_x_max, 2 * n_y_max) {}

  double primitive(const OrbitalIndex& a, const OrbitalIndex& b,
                   const OrbitalIndex& c, const OrbitalIndex& d) const {
    const int sx_bra = a.n_x + b.n_x, sx_ket = c.n_x + d.n_x;
    const int sy_bra = a.n_y + b.n_y, sy_ket = c.n_y + d.n_y;
    if ((sx_bra + sx_ket) % 2 != 0 || (sy_bra + sy_ket) % 2 != 0) return 0.0;
    const int dx = sx_ket - sx_bra, dy = sy_ket - sy_bra;
    double total = 0.0;
    for (int kx = 0; kx <= sx_bra; ++kx) {
      const int kxp = kx + dx;
      if (kxp < 0 || kxp > sx_ket) continue;
      const double bx = mosh_(a.n_x, b.n_x, kx) * mosh_(c.n_x, d.n_x, kxp);
      if (bx == 0.0) continue;
      for (int ky = 0; ky <= sy_bra; ++ky) {
        const int kyp = ky + dy;
        if (kyp < 0 || kyp > sy_ket) continue;
        const double by = mosh_(a.n_y, b.n_y, ky) * mosh_(c.n_y, d.n_y, kyp);
        if (by == 0.0) continue;
        total += bx * by * rel_(kx, kxp, ky, kyp);
      }
    }
    return total / std::sqrt(2.0);
  }

 private:
  MoshinskyTable mosh_;
  RelativeCoulombTable rel_;
};

// Matrix of 1/r12 in the symmetrized pair basis, internal units (the
// oscillator-unit integrals scale as 1/l = sqrt(omega)).
inline Eigen::MatrixXd coulomb_pair_matrix(const TwoElectronBasis& basis, double omega) {
  const CoulombEngine eng(basis.n_x_max, basis.n_y_max);
  const double s = (basis.sector == Sector::symmetric) ? 1.0 : -1.0;
  const double scale = std::sqrt(omega);
  const int np = basis.size();
  Eigen::MatrixXd v(np, np);
  for (int p = 0; p < np; ++p) {
    const auto& a = basis.orbitals[basis.pairs[p].i];
    const auto& b = basis.orbitals[basis.pairs[p].j];
    const double npf = (basis.pairs[p].i == basis.pairs[p].j) ? 0.5 : 0.7071067811865475244;
    for (int q = p; q < np; ++q) {
      const auto& c = basis.orbitals[basis.pairs[q].i];
      const auto& d = basis.orbitals[basis.pairs[q].j];
      const double nqf = (basis.pairs[q].i == basis.pairs[q].j) ? 0.5 : 0.7071067811865475244;
      const double direct = eng.primitive(a, b, c, d);
      const double exch = eng.primitive(a, b, d, c);
      const double val = 2.0 * npf * nqf * (direct + s * exch) * scale;
      v(p, q) = v(q, p) = val;
    }
  }
  return v;
}

}  // namespace qdc
