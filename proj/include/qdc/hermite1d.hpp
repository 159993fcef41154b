#pragma once

// Analytic 1D matrix elements of the harmonic oscillator (Hermite) functions
// phi_n in oscillator units (unit oscillator length), plus quadrature node
// generation used by the Coulomb tables.
//
// Half-interval integrals are obtained from the Wronskian identity
//   int_0^inf phi_n phi_m dx = W(phi_n, phi_m)(0) / (2(n - m)),  n != m,
// which is exact and stable for all index pairs.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qdc {

// phi_n(0): phi_0(0) = pi^{-1/4}, phi_{n+1}(0) = -sqrt(n/(n+1)) phi_{n-1}(0).
inline double hermite_phi0(int n) {
  if (n < 0) throw std::invalid_argument("hermite_phi0: negative index");
  if (n % 2 == 1) return 0.0;
  double v = 0.7511255444649425;  // pi^{-1/4}
  for (int k = 2; k <= n; k += 2) v *= -std::sqrt((k - 1.0) / k);
  return v;
}

// phi_n'(0) = sqrt(2n) phi_{n-1}(0).
inline double hermite_dphi0(int n) {
  if (n <= 0) return 0.0;
  return std::sqrt(2.0 * n) * hermite_phi0(n - 1);
}

// int_0^inf phi_n(x) phi_m(x) dx.
// Equal parity: delta_nm / 2 (the product is even).  Opposite parity: from
// the Wronskian at the origin.
inline double hermite_half_integral(int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("hermite_half_integral: negative index");
  if ((n + m) % 2 == 0) return n == m ? 0.5 : 0.0;
  return (hermite_phi0(m) * hermite_dphi0(n) - hermite_phi0(n) * hermite_dphi0(m)) /
         (2.0 * (n - m));
}

// int_0^inf x phi_n(x) phi_m(x) dx, via x phi_m = sqrt(m/2) phi_{m-1} +
// sqrt((m+1)/2) phi_{m+1}.
inline double hermite_half_x_integral(int n, int m) {
  double v = std::sqrt((m + 1) / 2.0) * hermite_half_integral(n, m + 1);
  if (m > 0) v += std::sqrt(m / 2.0) * hermite_half_integral(n, m - 1);
  return v;
}

// <n| |x| |m> over the full line; vanishes for opposite parity.
inline double absx_matrix_element(int n, int m) {
  if (n < 0 || m < 0) throw std::invalid_argument("absx_matrix_element: negative index");
  if ((n + m) % 2 == 1) return 0.0;
  return 2.0 * hermite_half_x_integral(n, m);
}

// <n| x |m> over the full line.
inline double x_matrix_element(int n, int m) {
  if (n == m + 1) return std::sqrt((m + 1) / 2.0);
  if (n == m - 1) return std::sqrt(m / 2.0);
  return 0.0;
}

// <n| x^2 |m> over the full line.
inline double x2_matrix_element(int n, int m) {
  if (n == m) return n + 0.5;
  if (n == m + 2) return 0.5 * std::sqrt((m + 1.0) * (m + 2.0));
  if (n == m - 2) return 0.5 * std::sqrt(m * (m - 1.0));
  return 0.0;
}

// <n| p |m> = i(sqrt((m+1)/2) delta_{n,m+1} - sqrt(m/2) delta_{n,m-1});
// returns the imaginary part (the element is purely imaginary).
inline double p_matrix_element_imag(int n, int m) {
  if (n == m + 1) return std::sqrt((m + 1) / 2.0);
  if (n == m - 1) return -std::sqrt(m / 2.0);
  return 0.0;
}

// phi_0..phi_nmax evaluated at x (oscillator units), by upward recursion.
inline void hermite_eval(int nmax, double x, double* out) {
  const double g = std::exp(-0.5 * x * x) * 0.7511255444649425;
  out[0] = g;
  if (nmax == 0) return;
  out[1] = std::sqrt(2.0) * x * g;
  for (int n = 1; n < nmax; ++n)
    out[n + 1] = std::sqrt(2.0 / (n + 1.0)) * x * out[n] -
                 std::sqrt(n / (n + 1.0)) * out[n - 1];
}

inline std::vector<double> hermite_eval(int nmax, double x) {
  std::vector<double> v(nmax + 1);
  hermite_eval(nmax, x, v.data());
  return v;
}

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule (weight e^{-x^2}) via Golub-Welsch.
inline QuadratureRule gauss_hermite(int n) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  QuadratureRule r;
  const double mu0 = std::sqrt(M_PI);
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(es.eigenvalues()(k));
    const double v = es.eigenvectors()(0, k);
    r.weights.push_back(mu0 * v * v);
  }
  return r;
}

// Gauss-Legendre rule on [a, b].
inline QuadratureRule gauss_legendre(int n, double a, double b) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double c = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = j(k - 1, k) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  QuadratureRule r;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int k = 0; k < n; ++k) {
    r.nodes.push_back(mid + half * es.eigenvalues()(k));
    const double v = es.eigenvectors()(0, k);
    r.weights.push_back(2.0 * half * v * v);
  }
  return r;
}

}  // namespace qdc
