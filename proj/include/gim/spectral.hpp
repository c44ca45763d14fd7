#pragma once

// Periodograms, tapers, empirical covariances and per-frequency matrix
// arithmetic on the Fourier grid lambda_j = 2 pi j / N, j = 0..N-1.
//
// Conventions: Gamma(u) = E X(t) X(t-u)', f(lambda) = (1/2pi) sum_u Gamma(u) e^{-i lambda u},
// so Gamma(u) = int f(lambda) e^{i lambda u} d lambda. Every integral over [-pi, pi]
// is the Riemann sum (2pi/N) sum_j over the full grid.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "gim/core.hpp"
#include "gim/errors.hpp"

namespace gim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// T x d observations, one row per time point.
struct TimeSeries {
  Matrix data;
  std::vector<std::string> labels;
  bool demeaned = false;

  TimeSeries() = default;
  explicit TimeSeries(Matrix x, std::vector<std::string> names = {}, bool centred = false)
      : data(std::move(x)), labels(std::move(names)), demeaned(centred) {
    if (labels.empty())
      for (Eigen::Index a = 0; a < data.cols(); ++a) labels.push_back("x" + std::to_string(a));
  }

  int length() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }

  void validate() const {
    if (data.rows() < 2) throw DataError("time series needs at least two observations");
    if (data.cols() < 1) throw DataError("time series has no columns");
    if (static_cast<Eigen::Index>(labels.size()) != data.cols())
      throw DataError("label count does not match column count");
    for (Eigen::Index t = 0; t < data.rows(); ++t)
      for (Eigen::Index a = 0; a < data.cols(); ++a)
        if (!std::isfinite(data(t, a)))
          throw DataError("non-finite value at row " + std::to_string(t + 1) + ", column " +
                          std::to_string(a + 1));
  }
};

/// Gamma(0..L). Negative lags are implicit: Gamma(-u) = Gamma(u)'.
struct CovSeq {
  int d = 0;
  int max_lag = 0;
  std::vector<Matrix> gamma;

  static CovSeq zeros(int d, int max_lag) {
    CovSeq c;
    c.d = d;
    c.max_lag = max_lag;
    c.gamma.assign(static_cast<std::size_t>(max_lag) + 1, Matrix::Zero(d, d));
    return c;
  }

  Matrix lag(int u) const {
    if (u > max_lag || -u > max_lag) throw ArgumentError("lag beyond stored range");
    return u >= 0 ? gamma[u] : Matrix(gamma[-u].transpose());
  }

  /// Restriction to lags 0..L.
  CovSeq truncated(int L) const {
    if (L > max_lag) throw ArgumentError("cannot extend a covariance sequence");
    CovSeq c = *this;
    c.max_lag = L;
    c.gamma.resize(static_cast<std::size_t>(L) + 1);
    return c;
  }
};

/// Complex d x d matrices on the N Fourier frequencies.
struct SpectralGrid {
  int d = 0;
  int N = 0;
  std::vector<CMatrix> values;

  SpectralGrid() = default;
  SpectralGrid(int dim, int n) : d(dim), N(n) {
    if (dim < 1) throw ArgumentError("spectral grid needs d >= 1");
    if (n < 2 || n % 2 != 0) throw ArgumentError("grid size N must be even and >= 2");
    values.assign(static_cast<std::size_t>(n), CMatrix::Zero(dim, dim));
  }

  double lambda(int j) const { return kTwoPi * j / N; }
  CMatrix& operator[](int j) { return values[static_cast<std::size_t>(j)]; }
  const CMatrix& operator[](int j) const { return values[static_cast<std::size_t>(j)]; }
};

struct TaperSpec {
  enum class Kind { None, CosineBell };

  Kind kind = Kind::CosineBell;
  double fraction = 0.1;  // of each end

  static TaperSpec none() { return {Kind::None, 0.0}; }
  static TaperSpec cosine_bell(double frac = 0.1) { return {Kind::CosineBell, frac}; }

  void validate() const {
    if (!(fraction >= 0.0 && fraction <= 1.0))
      throw ArgumentError("taper fraction must lie in [0, 1]");
  }

  /// Split cosine bell: raised-cosine ramps over `fraction` of each end.
  Vector weights(int T) const {
    validate();
    Vector h = Vector::Ones(T);
    if (kind == Kind::None || fraction == 0.0) return h;
    const double rho = std::min(fraction, 0.5);
    for (int t = 0; t < T; ++t) {
      const double x = (t + 0.5) / T;
      const double edge = std::min(x, 1.0 - x);
      if (edge < rho) h(t) = 0.5 * (1.0 - std::cos(kPi * edge / rho));
    }
    return h;
  }

  double h2(int T) const { return weights(T).squaredNorm(); }

  std::string name() const { return kind == Kind::None ? "none" : "cosine-bell"; }
};

inline int next_pow2(long n) {
  int m = 1;
  while (m < n) m <<= 1;
  return m;
}

/// max(512, smallest power of two >= 4T).
inline int data_grid_size(int T) { return std::max(512, next_pow2(4L * T)); }

/// max(512, smallest power of two >= 64 (p+1)).
inline int model_grid_size(int p) { return std::max(512, next_pow2(64L * (p + 1))); }

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

// --- grid diagnostics -------------------------------------------------------

/// max_j ||M_j - M_j^*||_max / max(1, ||M_j||_max).
inline double hermitian_defect(const SpectralGrid& g) {
  double worst = 0.0;
  for (const auto& m : g.values) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    worst = std::max(worst, (m - m.adjoint()).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

/// max_j ||M_{N-j} - conj(M_j)||_max / max(1, ||M_j||_max).
inline double conjugate_symmetry_defect(const SpectralGrid& g) {
  double worst = 0.0;
  for (int j = 1; j < g.N; ++j) {
    const double scale = std::max(1.0, g[j].cwiseAbs().maxCoeff());
    worst = std::max(worst, (g[g.N - j] - g[j].conjugate()).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

/// Conjugate symmetry M_{N-j} = conj(M_j) imposed exactly by averaging.
inline void symmetrize_grid(SpectralGrid& g) {
  for (int j = 1; j < g.N / 2; ++j) {
    const CMatrix avg = 0.5 * (g[j] + g[g.N - j].conjugate());
    g[j] = avg;
    g[g.N - j] = avg.conjugate();
  }
  for (int j : {0, g.N / 2}) g[j] = CMatrix(g[j].real().cast<Complex>());
}

// --- per-frequency inversion -----------------------------------------------

inline constexpr double kMaxCondition = 1e12;

namespace detail {

/// Inverse of a Hermitian positive definite matrix; throws on condition > 1e12.
inline CMatrix invert_hpd(const CMatrix& m, long freq) {
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  if (es.info() != Eigen::Success)
    throw SingularityError("eigendecomposition failed at frequency index " + std::to_string(freq),
                           freq);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw SingularityError("matrix not positive definite or condition number above 1e12 at "
                           "frequency index " +
                               std::to_string(freq),
                           freq);
  const CMatrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                      es.eigenvectors().adjoint();
  return hermitian_part(inv);
}

/// log det of a Hermitian positive definite matrix.
inline double logdet_hpd(const CMatrix& m, long freq) {
  const Eigen::LLT<CMatrix> llt(hermitian_part(m));
  if (llt.info() != Eigen::Success)
    throw SingularityError("matrix not positive definite at frequency index " +
                               std::to_string(freq),
                           freq);
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += std::log(llt.matrixL()(i, i).real());
  return 2.0 * s;
}

/// (2pi/N) sum_j M_j e^{i lambda_j u} for u = 0..L, real part, imaginary residue checked.
inline CovSeq fourier_coefficients(const SpectralGrid& g, int L, double scale,
                                   const char* what) {
  if (L < 0 || 2 * L >= g.N)
    throw ArgumentError(std::string(what) + ": need 0 <= L < N/2");
  CovSeq out = CovSeq::zeros(g.d, L);
  double max_imag = 0.0;
  const double w = scale * kTwoPi / g.N;
  for (int u = 0; u <= L; ++u) {
    CMatrix acc = CMatrix::Zero(g.d, g.d);
    for (int j = 0; j < g.N; ++j) {
      const long k = (static_cast<long>(j) * u) % g.N;
      const double ang = kTwoPi * static_cast<double>(k) / g.N;
      acc += g[j] * Complex(std::cos(ang), std::sin(ang));
    }
    acc *= w;
    out.gamma[u] = acc.real();
    max_imag = std::max(max_imag, acc.imag().cwiseAbs().maxCoeff());
  }
  out.gamma[0] = 0.5 * (out.gamma[0] + out.gamma[0].transpose());
  const double ref = out.gamma[0].norm();
  if (max_imag > 1e-8 * ref && max_imag > 0.0)
    throw InconsistencyError(std::string(what) + ": imaginary residue " +
                             std::to_string(max_imag) + " relative to ||Gamma(0)|| = " +
                             std::to_string(ref) + " (grid not conjugate-symmetric)");
  return out;
}

}  // namespace detail

/// Frequency-wise inverse of a Hermitian positive definite grid.
inline SpectralGrid invert_grid(const SpectralGrid& m) {
  SpectralGrid out(m.d, m.N);
  for (int j = 0; j < m.N; ++j) out[j] = detail::invert_hpd(m[j], j);
  return out;
}

// --- time domain ------------------------------------------------------------

inline TimeSeries demean(const TimeSeries& x) {
  x.validate();
  TimeSeries out = x;
  const Eigen::RowVectorXd mean = x.data.colwise().mean();
  out.data.rowwise() -= mean;
  out.demeaned = true;
  return out;
}

/// Biased estimator Gamma_hat(u) = (1/T) sum_{t=1}^{T-u} X(t+u) X(t)'.
inline CovSeq empirical_covariances(const TimeSeries& x, int L) {
  x.validate();
  const int T = x.length();
  if (L < 0 || L >= T) throw ArgumentError("need 0 <= L < T for empirical covariances");
  CovSeq c = CovSeq::zeros(x.dim(), L);
  for (int u = 0; u <= L; ++u) {
    const auto lead = x.data.bottomRows(T - u);
    const auto lagged = x.data.topRows(T - u);
    c.gamma[u] = lead.transpose() * lagged / static_cast<double>(T);
  }
  c.gamma[0] = 0.5 * (c.gamma[0] + c.gamma[0].transpose());
  return c;
}

/// I(lambda_j) = (2 pi H2)^{-1} d(lambda_j) d(lambda_j)^*, d_a = sum_t h_t X_a(t) e^{-i lambda t}.
/// Zero-padded to N >= T.
inline SpectralGrid periodogram(const TimeSeries& x, const TaperSpec& taper, int N) {
  x.validate();
  const int T = x.length();
  const int d = x.dim();
  if (N < T) throw ArgumentError("grid size N must be >= T for the periodogram");
  SpectralGrid out(d, N);
  const Vector h = taper.weights(T);
  const double h2 = h.squaredNorm();
  if (!(h2 > 0.0)) throw ArgumentError("taper has zero energy");

  Eigen::FFT<double> fft;
  Eigen::MatrixXcd dft(N, d);
  std::vector<Complex> in(static_cast<std::size_t>(N)), freq;
  for (int a = 0; a < d; ++a) {
    std::fill(in.begin(), in.end(), Complex(0.0));
    for (int t = 0; t < T; ++t) in[t] = h(t) * x.data(t, a);
    fft.fwd(freq, in);
    for (int j = 0; j < N; ++j) dft(j, a) = freq[j];
  }
  const double norm = 1.0 / (kTwoPi * h2);
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXcd dj = dft.row(j).transpose();
    out[j] = norm * (dj * dj.adjoint());
  }
  symmetrize_grid(out);
  return out;
}

/// Circular moving average with triangular weights across frequencies.
inline SpectralGrid smooth_periodogram(const SpectralGrid& I, int bandwidth) {
  if (bandwidth < 1 || bandwidth % 2 == 0)
    throw ArgumentError("smoothing bandwidth must be a positive odd integer");
  if (bandwidth >= I.N) throw ArgumentError("smoothing bandwidth must be smaller than N");
  if (bandwidth == 1) return I;
  const int half = bandwidth / 2;
  std::vector<double> w;
  double total = 0.0;
  for (int l = -half; l <= half; ++l) {
    w.push_back(static_cast<double>(half + 1 - std::abs(l)));
    total += w.back();
  }
  for (auto& v : w) v /= total;
  SpectralGrid out(I.d, I.N);
  for (int j = 0; j < I.N; ++j) {
    CMatrix acc = CMatrix::Zero(I.d, I.d);
    for (int l = -half; l <= half; ++l) acc += w[l + half] * I[((j + l) % I.N + I.N) % I.N];
    out[j] = hermitian_part(acc);
  }
  return out;
}

/// Partial coherencies R_ab = -g_ab / sqrt(g_aa g_bb), g = f^{-1}. Diagonal set to 1.
inline SpectralGrid partial_coherence(const SpectralGrid& f) {
  const SpectralGrid g = invert_grid(f);
  SpectralGrid r(f.d, f.N);
  for (int j = 0; j < f.N; ++j) {
    for (int a = 0; a < f.d; ++a) {
      r[j](a, a) = 1.0;
      for (int b = a + 1; b < f.d; ++b) {
        const double s = std::sqrt(g[j](a, a).real() * g[j](b, b).real());
        r[j](a, b) = -g[j](a, b) / s;
        r[j](b, a) = std::conj(r[j](a, b));
      }
    }
  }
  return r;
}

/// Ordinary coherencies f_ab / sqrt(f_aa f_bb).
inline SpectralGrid coherence(const SpectralGrid& f) {
  SpectralGrid r(f.d, f.N);
  for (int j = 0; j < f.N; ++j)
    for (int a = 0; a < f.d; ++a)
      for (int b = 0; b < f.d; ++b)
        r[j](a, b) = f[j](a, b) / std::sqrt(f[j](a, a).real() * f[j](b, b).real());
  return r;
}

/// Gamma(u) = (2pi/N) sum_j f(lambda_j) e^{i lambda_j u}, u = 0..L.
inline CovSeq cov_from_spectrum(const SpectralGrid& f, int L) {
  return detail::fourier_coefficients(f, L, 1.0, "cov_from_spectrum");
}

/// Gamma_i(u) = (1/4pi^2) (2pi/N) sum_j f(lambda_j)^{-1} e^{i lambda_j u}, u = 0..L.
inline CovSeq inv_cov_from_spectrum(const SpectralGrid& f, int L) {
  return detail::fourier_coefficients(invert_grid(f), L, 1.0 / (4.0 * kPi * kPi),
                                      "inv_cov_from_spectrum");
}

/// g(lambda) = 2pi sum_{|u|<=p} Gamma_i(u) e^{-i lambda u} on an N-point grid.
inline SpectralGrid gi_inverse_spectrum(const GIParams& gi, int N) {
  SpectralGrid g(gi.d, N);
  for (int j = 0; j < N; ++j) {
    CMatrix acc = gi.gamma_inv[0].cast<Complex>();
    for (int u = 1; u <= gi.p; ++u) {
      const double ang = kTwoPi * static_cast<double>((static_cast<long>(j) * u) % N) / N;
      const Complex e(std::cos(ang), -std::sin(ang));
      acc += gi.gamma_inv[u].cast<Complex>() * e +
             gi.gamma_inv[u].transpose().cast<Complex>() * std::conj(e);
    }
    g[j] = hermitian_part(kTwoPi * acc);
  }
  return g;
}

/// Spectral matrix implied by inverse covariances, f = g^{-1}.
inline SpectralGrid gi_spectrum(const GIParams& gi, int N) {
  return invert_grid(gi_inverse_spectrum(gi, N));
}

}  // namespace gim
