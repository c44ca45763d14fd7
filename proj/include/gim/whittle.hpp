#pragma once

// Whittle likelihood, its gradient in the inverse-covariance parameterization,
// likelihood-equation residuals and the asymptotic covariance of the estimator.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gim/core.hpp"
#include "gim/errors.hpp"
#include "gim/spectral.hpp"
#include "gim/varmod.hpp"

namespace gim {

namespace detail {

inline void require_same_grid(const SpectralGrid& x, const SpectralGrid& y) {
  if (x.d != y.d || x.N != y.N)
    throw ArgumentError("spectral grids differ in dimension or size");
}

inline double finish_loglik(double re, double im, long N) {
  if (std::abs(im) > 1e-10 * std::max(1.0, std::abs(re)))
    throw InconsistencyError("Whittle integrand has imaginary residue " + std::to_string(im));
  return re / (2.0 * static_cast<double>(N));
}

}  // namespace detail

/// (1/4pi) int [log det f + tr(I f^{-1})] d lambda on the grid.
inline double whittle_loglik(const SpectralGrid& f, const SpectralGrid& I) {
  detail::require_same_grid(f, I);
  double re = 0.0;
  double im = 0.0;
  for (int j = 0; j < f.N; ++j) {
    const Eigen::LLT<CMatrix> llt(hermitian_part(f[j]));
    if (llt.info() != Eigen::Success)
      throw SingularityError("model spectrum not positive definite at frequency index " +
                                 std::to_string(j),
                             j);
    double logdet = 0.0;
    for (int a = 0; a < f.d; ++a) logdet += std::log(llt.matrixL()(a, a).real());
    const Complex tr = llt.solve(I[j]).trace();
    re += 2.0 * logdet + tr.real();
    im += tr.imag();
  }
  return detail::finish_loglik(re, im, f.N);
}

/// Same value computed from the inverse spectrum g = f^{-1}, e.g. of GI parameters.
inline double whittle_loglik_inverse(const SpectralGrid& g, const SpectralGrid& I) {
  detail::require_same_grid(g, I);
  double re = 0.0;
  double im = 0.0;
  for (int j = 0; j < g.N; ++j) {
    const double logdet_g = detail::logdet_hpd(g[j], j);
    const Complex tr = (I[j] * g[j]).trace();
    re += -logdet_g + tr.real();
    im += tr.imag();
  }
  return detail::finish_loglik(re, im, g.N);
}

inline double whittle_loglik(const GIParams& theta, const SpectralGrid& I) {
  return whittle_loglik_inverse(gi_inverse_spectrum(theta, I.N), I);
}

/// Whittle likelihood of a VAR(p) against the periodogram whose integrals are
/// gammahat (lags 0..p), in closed form:
///   (1/2)(log det Sigma - d log 2pi) + (1/2) sum_{|u|<=p} tr(Gamma_i(u) Gamma_hat(-u)).
inline double var_whittle_loglik(const VarParams& v, const CovSeq& gammahat) {
  if (gammahat.max_lag < v.p) throw ArgumentError("gammahat must cover lags 0..p");
  const GIParams gi = inv_cov_from_var(v);
  const Eigen::LLT<Matrix> llt(0.5 * (v.sigma + v.sigma.transpose()));
  if (llt.info() != Eigen::Success)
    throw DegeneracyError("innovation covariance not positive definite");
  double logdet = 0.0;
  for (int a = 0; a < v.d; ++a) logdet += 2.0 * std::log(llt.matrixL()(a, a));
  double tr = (gi.gamma_inv[0] * gammahat.gamma[0]).trace();
  for (int u = 1; u <= v.p; ++u) tr += 2.0 * (gi.gamma_inv[u] * gammahat.gamma[u].transpose()).trace();
  return 0.5 * (logdet - v.d * std::log(kTwoPi)) + 0.5 * tr;
}

namespace detail {

inline void require_zero_pattern(const GIParams& theta, const UndirectedGraph& g) {
  if (theta.d != g.dim()) throw ArgumentError("GI parameters and graph differ in dimension");
  for (auto [a, b] : g.missing_edges())
    for (const auto& m : theta.gamma_inv)
      if (m(a, b) != 0.0 || m(b, a) != 0.0)
        throw ArgumentError("GI parameters violate the zero pattern of the graph at pair {" +
                            std::to_string(a) + "," + std::to_string(b) + "}");
}

}  // namespace detail

/// Exact derivative of whittle_loglik(theta, I) with respect to the free
/// coordinates of theta, in theta layout order. With D(u) = Gamma_hat(u) - Gamma_theta(u)
/// (both as grid integrals), the component for Gamma_i(u)_{ab} is D_ab(u), except the
/// diagonal lag-0 components, which are D_aa(0)/2.
inline Vector whittle_gradient(const GIParams& theta, const UndirectedGraph& g,
                               const SpectralGrid& I) {
  detail::require_zero_pattern(theta, g);
  if (I.d != theta.d) throw ArgumentError("periodogram and parameters differ in dimension");
  const SpectralGrid f = gi_spectrum(theta, I.N);
  const CovSeq emp = cov_from_spectrum(I, theta.p);
  const CovSeq model = cov_from_spectrum(f, theta.p);
  const ZeroPattern z = make_zero_pattern(theta.p, g);
  Vector out(static_cast<Eigen::Index>(z.free_count()));
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < z.layout.size(); ++i) {
    if (!z.free[i]) continue;
    const auto [a, b, u] = z.layout[i];
    const Matrix D = emp.gamma[u] - model.gamma[u];
    if (u == 0)
      out(k++) = a == b ? 0.5 * D(a, a) : 0.5 * (D(a, b) + D(b, a));
    else
      out(k++) = D(a, b);
  }
  return out;
}

struct ResidualEntry {
  enum class Kind { Moment, Constraint };
  Kind kind = Kind::Moment;
  int a = 0;
  int b = 0;
  int u = 0;
  double value = 0.0;  // scaled absolute residual
};

struct ResidualReport {
  double moment_residual = 0.0;
  double constraint_residual = 0.0;
  std::vector<ResidualEntry> table;

  double max() const { return std::max(moment_residual, constraint_residual); }
};

/// Scaled residuals of the likelihood equations given model covariances and
/// inverse covariances at lags 0..p.
inline ResidualReport residual_report(const CovSeq& model_cov, const GIParams& gi,
                                      const UndirectedGraph& g, const CovSeq& gammahat) {
  const int p = gi.p;
  const int d = gi.d;
  if (gammahat.max_lag < p || model_cov.max_lag < p)
    throw ArgumentError("covariances needed at lags 0..p");
  ResidualReport rep;
  auto scale = [](double x, double y) {
    const double s = std::sqrt(std::abs(x * y));
    return s > 0.0 ? s : 1.0;
  };
  for (int u = 0; u <= p; ++u) {
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (u == 0 && b < a) continue;
        if (g.adjacent_or_equal(a, b)) {
          const double r = std::abs(model_cov.gamma[u](a, b) - gammahat.gamma[u](a, b)) /
                           scale(gammahat.gamma[0](a, a), gammahat.gamma[0](b, b));
          rep.moment_residual = std::max(rep.moment_residual, r);
          rep.table.push_back({ResidualEntry::Kind::Moment, a, b, u, r});
        } else {
          const double r = std::abs(gi.gamma_inv[u](a, b)) /
                           scale(gi.gamma_inv[0](a, a), gi.gamma_inv[0](b, b));
          rep.constraint_residual = std::max(rep.constraint_residual, r);
          rep.table.push_back({ResidualEntry::Kind::Constraint, a, b, u, r});
        }
      }
    }
  }
  return rep;
}

/// Residuals of the likelihood equations: model covariances against gammahat on
/// free triples, inverse covariances on constrained triples. N = 0 picks the
/// default model grid.
inline ResidualReport likelihood_residuals(const GIParams& theta, const UndirectedGraph& g,
                                           const CovSeq& gammahat, int N = 0) {
  if (theta.d != g.dim() || gammahat.d != theta.d)
    throw ArgumentError("dimension mismatch in likelihood_residuals");
  if (gammahat.max_lag < theta.p) throw ArgumentError("gammahat must cover lags 0..p");
  if (N == 0) N = model_grid_size(theta.p);
  const CovSeq model = cov_from_spectrum(gi_spectrum(theta, N), theta.p);
  return residual_report(model, theta, g, gammahat);
}

struct AsymptoticCovariance {
  ZeroPattern pattern;
  Matrix xi;      // over the full theta layout
  Matrix lambda;  // P' (P xi P')^{-1} P
  int N = 0;
};

namespace detail {

struct DerivTerm {
  int row;
  int col;
  int sign;  // exponent sign: e^{-i lambda u} for -1, e^{+i lambda u} for +1, none for 0
};

inline std::vector<DerivTerm> derivative_terms(const ThetaIndex& t) {
  if (t.u == 0) {
    if (t.a == t.b) return {{t.a, t.a, 0}};
    return {{t.a, t.b, 0}, {t.b, t.a, 0}};
  }
  return {{t.a, t.b, -1}, {t.b, t.a, +1}};
}

/// xi_kl = (1/4pi) int tr[f dg_k f dg_l] with dg_k = 2pi sum_terms c E_{row,col}.
inline Matrix information_matrix(const GIParams& theta, const std::vector<ThetaIndex>& layout,
                                 int N) {
  const SpectralGrid f = gi_spectrum(theta, N);
  const auto r = static_cast<Eigen::Index>(layout.size());
  std::vector<std::vector<DerivTerm>> terms;
  for (const auto& t : layout) terms.push_back(derivative_terms(t));
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(r, r);
  std::vector<std::vector<Complex>> coef(layout.size());
  for (int j = 0; j < N; ++j) {
    for (std::size_t k = 0; k < layout.size(); ++k) {
      coef[k].clear();
      const double ang = f.lambda(j) * layout[k].u;
      for (const auto& s : terms[k])
        coef[k].push_back(s.sign == 0 ? Complex(1.0)
                                      : Complex(std::cos(ang), s.sign * std::sin(ang)));
    }
    const CMatrix& fj = f[j];
    for (Eigen::Index k = 0; k < r; ++k) {
      for (Eigen::Index l = 0; l <= k; ++l) {
        Complex s = 0.0;
        const auto& tk = terms[static_cast<std::size_t>(k)];
        const auto& tl = terms[static_cast<std::size_t>(l)];
        for (std::size_t x = 0; x < tk.size(); ++x)
          for (std::size_t y = 0; y < tl.size(); ++y)
            // tr(f E_{ab} f E_{cd}) = f_{da} f_{bc}
            s += coef[k][x] * coef[l][y] * fj(tl[y].col, tk[x].row) * fj(tk[x].col, tl[y].row);
        acc(k, l) += s;
      }
    }
  }
  Matrix xi = (acc.real() * (2.0 * kPi * kPi / N)).triangularView<Eigen::Lower>();
  xi.triangularView<Eigen::StrictlyUpper>() = xi.transpose().triangularView<Eigen::StrictlyUpper>();
  return xi;
}

}  // namespace detail

/// Lambda = P_G' (P_G Xi P_G')^{-1} P_G. N = 0 doubles the grid from the default
/// model grid until Xi changes by less than 1e-8 (relative to its largest entry).
inline AsymptoticCovariance asymptotic_covariance(const GIParams& theta, const UndirectedGraph& g,
                                                  int N = 0) {
  if (theta.d != g.dim()) throw ArgumentError("GI parameters and graph differ in dimension");
  AsymptoticCovariance out;
  out.pattern = make_zero_pattern(theta.p, g);
  const auto& layout = out.pattern.layout;
  if (N > 0) {
    out.N = N;
    out.xi = detail::information_matrix(theta, layout, N);
  } else {
    int n = model_grid_size(theta.p);
    Matrix xi = detail::information_matrix(theta, layout, n);
    constexpr int kMaxGrid = 1 << 16;
    while (n < kMaxGrid) {
      const Matrix next = detail::information_matrix(theta, layout, 2 * n);
      const double change = (next - xi).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
      xi = next;
      n *= 2;
      if (change < 1e-8 * scale) break;
    }
    out.N = n;
    out.xi = xi;
  }

  const auto pos = out.pattern.free_positions();
  const auto q = static_cast<Eigen::Index>(pos.size());
  Matrix sub(q, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index k = 0; k < q; ++k) sub(i, k) = out.xi(pos[i], pos[k]);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || lo < 1e-12 * hi)
    throw IdentifiabilityError("restricted information matrix is singular");
  const Matrix inv = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
                     es.eigenvectors().transpose();
  const auto r = static_cast<Eigen::Index>(layout.size());
  out.lambda = Matrix::Zero(r, r);
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index k = 0; k < q; ++k) out.lambda(pos[i], pos[k]) = inv(i, k);
  return out;
}

}  // namespace gim
