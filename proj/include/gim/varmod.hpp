#pragma once

// Vector autoregressions: Yule-Walker solving, spectra, the map to inverse
// covariances, stability and simulation.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gim/core.hpp"
#include "gim/errors.hpp"
#include "gim/spectral.hpp"

namespace gim {

inline constexpr double kDefaultStabilityMargin = 1e-8;

struct StabilityReport {
  bool stable = true;
  double radius = 0.0;
};

namespace detail {

/// Smallest/largest eigenvalue ratio of a symmetric matrix; <= 0 if indefinite.
inline double spd_ratio(const Matrix& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                                 Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  if (!(hi > 0.0)) return 0.0;
  return lo / hi;
}

inline void validate_var(const VarParams& v) {
  if (v.d < 1 || v.p < 0) throw ArgumentError("VAR parameters need d >= 1 and p >= 0");
  if (static_cast<int>(v.a.size()) != v.p) throw ArgumentError("VAR has wrong number of lags");
  for (const auto& m : v.a)
    if (m.rows() != v.d || m.cols() != v.d) throw ArgumentError("VAR coefficient shape");
  if (v.sigma.rows() != v.d || v.sigma.cols() != v.d)
    throw ArgumentError("innovation covariance shape");
}

/// A(e^{-i lambda}) = 1 - sum_v a(v) e^{-i lambda v}.
inline CMatrix char_poly(const VarParams& v, int j, int N) {
  CMatrix A = CMatrix::Identity(v.d, v.d);
  for (int u = 1; u <= v.p; ++u) {
    const double ang = kTwoPi * static_cast<double>((static_cast<long>(j) * u) % N) / N;
    A -= v.a[u - 1].cast<Complex>() * Complex(std::cos(ang), -std::sin(ang));
  }
  return A;
}

}  // namespace detail

/// Spectral radius of the companion matrix; stable iff radius < 1 - margin.
inline StabilityReport stability_check(const VarParams& v,
                                       double margin = kDefaultStabilityMargin) {
  detail::validate_var(v);
  if (v.p == 0) return {true, 0.0};
  const int n = v.d * v.p;
  Matrix comp = Matrix::Zero(n, n);
  for (int u = 0; u < v.p; ++u) comp.block(0, u * v.d, v.d, v.d) = v.a[u];
  if (v.p > 1) comp.block(v.d, 0, n - v.d, n - v.d).setIdentity();
  const Eigen::EigenSolver<Matrix> es(comp, false);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  return {radius < 1.0 - margin, radius};
}

/// Solves Gamma(u) = sum_v a(v) Gamma(u-v) + Sigma delta_{u0}, u = 0..p, as one
/// dense symmetric block-Toeplitz system.
inline VarParams yule_walker(const CovSeq& gamma, int p) {
  if (p < 0) throw ArgumentError("model order must be non-negative");
  if (gamma.max_lag < p) throw ArgumentError("covariance sequence shorter than the order");
  const int d = gamma.d;
  VarParams v;
  v.d = d;
  v.p = p;
  const double kMinRatio = 1e-12;

  if (p > 0) {
    const int n = d * p;
    Matrix R(n, n);
    Matrix rhs(d, n);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) R.block(r * d, c * d, d, d) = gamma.lag(c - r);
      rhs.block(0, r * d, d, d) = gamma.gamma[r + 1];
    }
    R = 0.5 * (R + R.transpose());
    if (detail::spd_ratio(R) < kMinRatio)
      throw DegeneracyError("block-Toeplitz covariance matrix is singular or indefinite "
                            "(constant or collinear series?)");
    const Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success)
      throw DegeneracyError("block-Toeplitz covariance matrix is not positive definite");
    const Matrix coeffs = llt.solve(rhs.transpose()).transpose();
    for (int u = 0; u < p; ++u) v.a.push_back(coeffs.block(0, u * d, d, d));
  }

  Matrix sigma = gamma.gamma[0];
  for (int u = 1; u <= p; ++u) sigma -= v.a[u - 1] * gamma.gamma[u].transpose();
  v.sigma = 0.5 * (sigma + sigma.transpose());
  if (detail::spd_ratio(v.sigma) < kMinRatio)
    throw DegeneracyError("innovation covariance is singular or indefinite "
                          "(constant or collinear series?)");
  return v;
}

/// f(lambda_j) = (1/2pi) A(e^{-i lambda})^{-1} Sigma A(e^{-i lambda})^{-*}.
inline SpectralGrid var_spectrum(const VarParams& v, int N) {
  const auto st = stability_check(v);
  if (!st.stable)
    throw StabilityError("VAR is not stable (companion spectral radius " +
                         std::to_string(st.radius) + ")");
  SpectralGrid f(v.d, N);
  const CMatrix sigma = v.sigma.cast<Complex>() / kTwoPi;
  for (int j = 0; j < N; ++j) {
    const CMatrix H = detail::char_poly(v, j, N).partialPivLu().inverse();
    f[j] = hermitian_part(H * sigma * H.adjoint());
  }
  return f;
}

/// f(lambda_j)^{-1} = 2pi A(e^{i lambda})' K A(e^{-i lambda}), K = Sigma^{-1}.
inline SpectralGrid var_inverse_spectrum(const VarParams& v, int N) {
  detail::validate_var(v);
  if (detail::spd_ratio(v.sigma) < 1e-14) throw DegeneracyError("innovation covariance singular");
  const CMatrix K = v.sigma.inverse().cast<Complex>();
  SpectralGrid g(v.d, N);
  for (int j = 0; j < N; ++j) {
    const CMatrix A = detail::char_poly(v, j, N);
    g[j] = hermitian_part(kTwoPi * A.adjoint() * K * A);
  }
  return g;
}

/// Gamma_i(u) = sum_{v=0}^{p-u} a(v)' K a(v+u) with a(0) = -1.
inline GIParams inv_cov_from_var(const VarParams& v) {
  detail::validate_var(v);
  if (detail::spd_ratio(v.sigma) < 1e-14) throw DegeneracyError("innovation covariance singular");
  const Matrix K = v.sigma.llt().solve(Matrix::Identity(v.d, v.d));
  const Matrix Ks = 0.5 * (K + K.transpose());
  auto coef = [&](int u) -> Matrix {
    return u == 0 ? Matrix(-Matrix::Identity(v.d, v.d)) : v.a[u - 1];
  };
  GIParams gi = GIParams::zeros(v.d, v.p);
  for (int u = 0; u <= v.p; ++u) {
    Matrix acc = Matrix::Zero(v.d, v.d);
    for (int w = 0; w <= v.p - u; ++w) acc += coef(w).transpose() * Ks * coef(w + u);
    gi.gamma_inv[u] = acc;
  }
  gi.gamma_inv[0] = 0.5 * (gi.gamma_inv[0] + gi.gamma_inv[0].transpose());
  return gi;
}

inline int default_burnin(int p) { return 10 * p + 100; }

/// Gaussian simulation from a zero initial state. burnin < 0 selects 10p + 100.
inline TimeSeries simulate_var(const VarParams& v, int T, int burnin, std::uint64_t seed) {
  const auto st = stability_check(v);
  if (!st.stable)
    throw StabilityError("cannot simulate an unstable VAR (companion spectral radius " +
                         std::to_string(st.radius) + ")");
  if (T < 1) throw ArgumentError("simulation length must be >= 1");
  if (burnin < 0) burnin = default_burnin(v.p);

  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (v.sigma + v.sigma.transpose()));
  if (es.eigenvalues().minCoeff() < 0.0)
    throw DegeneracyError("innovation covariance is not positive semidefinite");
  const Matrix root = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int total = T + burnin;
  Matrix x = Matrix::Zero(total, v.d);
  Vector z(v.d);
  for (int t = 0; t < total; ++t) {
    for (int a = 0; a < v.d; ++a) z(a) = normal(rng);
    Vector xt = root * z;
    for (int u = 1; u <= v.p && t - u >= 0; ++u) xt += v.a[u - 1] * x.row(t - u).transpose();
    x.row(t) = xt.transpose();
  }
  return TimeSeries(x.bottomRows(T));
}

}  // namespace gim
