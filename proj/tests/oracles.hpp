#pragma once

// Reference computations used by the tests. Each one takes a different route
// from the library code it checks.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "gim/gim.hpp"

namespace oracle {

using gim::CMatrix;
using gim::Complex;
using gim::Matrix;

inline Matrix random_spd(int d, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix b(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) b(i, k) = n(rng);
  return b * b.transpose() / d + ridge * Matrix::Identity(d, d);
}

/// Spectral radius of the VAR companion matrix, via a general eigensolver.
inline double companion_radius(const gim::VarParams& v) {
  if (v.p == 0) return 0.0;
  const int n = v.d * v.p;
  Matrix c = Matrix::Zero(n, n);
  for (int u = 0; u < v.p; ++u) c.block(0, u * v.d, v.d, v.d) = v.a[u];
  if (v.p > 1) c.block(v.d, 0, n - v.d, n - v.d).setIdentity();
  return Eigen::EigenSolver<Matrix>(c, false).eigenvalues().cwiseAbs().maxCoeff();
}

/// Random VAR(p) with companion radius at most `radius`.
inline gim::VarParams random_stable_var(int d, int p, std::mt19937_64& rng, double radius = 0.8) {
  std::normal_distribution<double> n(0.0, 1.0);
  gim::VarParams v;
  v.d = d;
  v.p = p;
  v.a.assign(p, Matrix::Zero(d, d));
  for (auto& m : v.a)
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) m(i, k) = n(rng) / (d * p);
  const double r = companion_radius(v);
  if (r > radius) {
    // a(u) -> s^u a(u) scales every companion eigenvalue by s.
    const double s = radius / r;
    double f = 1.0;
    for (auto& m : v.a) {
      f *= s;
      m *= f;
    }
  }
  v.sigma = random_spd(d, rng);
  return v;
}

/// Autocovariances from the MA(infinity) representation, truncated at `terms`.
/// Gamma(u) = sum_k Psi_{k+u} Sigma Psi_k'.
inline std::vector<Matrix> var_autocov(const gim::VarParams& v, int L, int terms = 4000) {
  const int d = v.d;
  std::vector<Matrix> psi(static_cast<std::size_t>(terms + L + 1), Matrix::Zero(d, d));
  psi[0].setIdentity();
  for (std::size_t k = 1; k < psi.size(); ++k)
    for (int u = 1; u <= v.p && u <= static_cast<int>(k); ++u) psi[k] += v.a[u - 1] * psi[k - u];
  std::vector<Matrix> g(static_cast<std::size_t>(L + 1), Matrix::Zero(d, d));
  for (int u = 0; u <= L; ++u)
    for (int k = 0; k < terms; ++k) g[u] += psi[k + u] * v.sigma * psi[k].transpose();
  return g;
}

inline gim::CovSeq to_covseq(const std::vector<Matrix>& g) {
  gim::CovSeq c = gim::CovSeq::zeros(static_cast<int>(g.front().rows()),
                                     static_cast<int>(g.size()) - 1);
  for (std::size_t u = 0; u < g.size(); ++u) c.gamma[u] = g[u];
  return c;
}

/// f(lambda) for a VAR evaluated from the transfer function with explicit sums.
inline CMatrix var_spectrum_at(const gim::VarParams& v, double lambda) {
  const int d = v.d;
  CMatrix A = CMatrix::Identity(d, d);
  for (int u = 1; u <= v.p; ++u)
    A -= v.a[u - 1].cast<Complex>() * std::polar(1.0, -lambda * u);
  const CMatrix Ainv = A.inverse();
  return Ainv * v.sigma.cast<Complex>() * Ainv.adjoint() / (2.0 * std::numbers::pi);
}

/// Random Hermitian pd grid with conjugate symmetry f(2pi - lambda) = conj f(lambda).
inline gim::SpectralGrid random_hpd_grid(int d, int N, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  gim::SpectralGrid g(d, N);
  for (int j = 0; j <= N / 2; ++j) {
    CMatrix b(d, d);
    const bool real = j == 0 || j == N / 2;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) b(i, k) = Complex(n(rng), real ? 0.0 : n(rng));
    CMatrix m = b * b.adjoint() / d + 0.3 * CMatrix::Identity(d, d);
    m = 0.5 * (m + m.adjoint());
    g[j] = m;
    if (j > 0 && j < N / 2) g[N - j] = m.conjugate();
  }
  return g;
}

/// Periodogram ordinate by the direct DFT sum, no taper.
inline CMatrix direct_periodogram(const Matrix& x, double lambda) {
  const int T = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  Eigen::VectorXcd dft = Eigen::VectorXcd::Zero(d);
  for (int t = 0; t < T; ++t)
    for (int a = 0; a < d; ++a) dft(a) += x(t, a) * std::polar(1.0, -lambda * t);
  return dft * dft.adjoint() / (2.0 * std::numbers::pi * T);
}

/// Does some path from a to b avoid S? Explicit DFS over simple paths.
inline bool path_avoiding(const gim::UndirectedGraph& g, int a, int b, const std::vector<int>& S) {
  const int d = g.dim();
  std::vector<bool> blocked(d, false), on_path(d, false);
  for (int s : S) blocked[s] = true;
  std::function<bool(int)> dfs = [&](int v) {
    if (v == b) return true;
    on_path[v] = true;
    for (int w = 0; w < d; ++w)
      if (w != v && g.has_edge(v, w) && !on_path[w] && !blocked[w] && dfs(w)) return true;
    on_path[v] = false;
    return false;
  };
  return dfs(a);
}

/// Univariate Yule-Walker by Levinson-Durbin recursion.
inline std::pair<std::vector<double>, double> levinson(const std::vector<double>& r, int p) {
  std::vector<double> phi;
  double err = r[0];
  for (int k = 1; k <= p; ++k) {
    double acc = r[k];
    for (int j = 1; j < k; ++j) acc -= phi[j - 1] * r[k - j];
    const double kappa = acc / err;
    std::vector<double> next(k);
    for (int j = 1; j < k; ++j) next[j - 1] = phi[j - 1] - kappa * phi[k - j - 1];
    next[k - 1] = kappa;
    phi = next;
    err *= 1.0 - kappa * kappa;
  }
  return {phi, err};
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace oracle
