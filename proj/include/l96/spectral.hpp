#pragma once

// Closed-form spectral analysis around the trivial equilibrium, the parity
// test separating folds from pitchforks at a zero eigenvalue, closed forms
// for the branch born at the first pitchfork, and the normal-form
// coefficients of the first two pitchforks.

#include "l96/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <complex>
#include <numbers>
#include <utility>

namespace l96 {

using Complex = std::complex<double>;

enum class SpectrumOrder {
  by_mode_index,  // closed forms: j = 0..n-1
  by_real_part,   // numerical spectra: descending real part
};

struct Spectrum {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  // columns; empty when not computed
  SpectrumOrder order = SpectrumOrder::by_real_part;

  bool has_vectors() const { return vectors.size() > 0; }
};

/// Eigenvalues of the Jacobian at the trivial equilibrium, which is circulant:
/// lambda_j = -1 + F rho_j - F rho_j^{n-2} with rho_j = exp(-2 pi i j / n).
/// On the unit roots rho^{n-2} = conj(rho)^2, which is how the term is
/// evaluated; entries for j and n-j are exact complex conjugates.
/// Optional eigenvectors v_j = n^{-1/2} (1, rho_j, ..., rho_j^{n-1}).
inline Spectrum trivial_spectrum(const ModelParams& p, bool with_vectors = false) {
  detail::check_params(p);
  const int n = p.n;
  Spectrum s;
  s.order = SpectrumOrder::by_mode_index;
  s.values.resize(n);
  if (with_vectors) s.vectors.resize(n, n);

  const double scale = 1.0 / std::sqrt(double(n));
  for (int j = 0; 2 * j <= n; ++j) {
    const double theta = -2.0 * std::numbers::pi * double(j) / double(n);
    // pin the real modes exactly so lambda_0 = -1 and lambda_{n/2} = -1 - 2F hold bitwise
    const Complex rho = j == 0 ? Complex(1, 0) : (2 * j == n ? Complex(-1, 0) : std::polar(1.0, theta));
    const Complex lam = -1.0 + p.F * rho - p.F * std::conj(rho) * std::conj(rho);
    s.values[j] = lam;
    if (j != 0 && 2 * j != n) s.values[n - j] = std::conj(lam);
    if (with_vectors) {
      Complex pw = 1.0;
      for (int r = 0; r < n; ++r) {
        s.vectors(r, j) = scale * pw;
        if (j != 0 && 2 * j != n) s.vectors(r, n - j) = scale * std::conj(pw);
        pw *= rho;
      }
    }
  }
  return s;
}

/// The only F-dependent purely real eigenvalue of the trivial equilibrium,
/// lambda_{n/2} = -1 - 2F. Requires even n.
inline double half_mode_eigenvalue(const ModelParams& p) {
  detail::check_params(p);
  if (p.n % 2 != 0) throw std::invalid_argument("half_mode_eigenvalue: n must be even");
  return -1.0 - 2.0 * p.F;
}

/// Forcing at which the mode-j eigenvalue pair of the trivial equilibrium
/// crosses the imaginary axis: 1 / (cos(2 pi j / n) - cos(4 pi j / n)).
/// Throws when the denominator vanishes (no crossing for that mode).
inline double hopf_forcing(int j, int n) {
  if (n < 1) throw std::invalid_argument("hopf_forcing: n must be >= 1");
  const double a = 2.0 * std::numbers::pi * double(j) / double(n);
  const double denom = std::cos(a) - std::cos(2.0 * a);
  if (std::abs(denom) < 1e-12)
    throw NumericalError("hopf_forcing: mode has no imaginary-axis crossing (zero denominator)");
  return 1.0 / denom;
}

enum class ZeroBifurcation { fold, pitchfork };

/// Parity test at a zero eigenvalue: with the involution R acting as a cyclic
/// shift by half_shift, an antisymmetric eigenvector (Rv = -v) signals a
/// pitchfork, a symmetric one (Rv = v) a fold. Requires R^2 v = v; anything
/// else is a non-generic or misdetected point and throws.
inline ZeroBifurcation classify_zero_bifurcation(const State& v, long half_shift,
                                                 double tol = 1e-6) {
  const double norm = v.norm();
  if (norm == 0) throw std::invalid_argument("classify_zero_bifurcation: zero vector");
  const State rv = shift(v, half_shift);
  if ((shift(rv, half_shift) - v).norm() > tol * norm)
    throw NumericalError("classify_zero_bifurcation: R^2 != identity on this vector");
  const double anti = (rv + v).norm();
  const double sym = (rv - v).norm();
  if (anti <= tol * norm) return ZeroBifurcation::pitchfork;
  if (sym <= tol * norm) return ZeroBifurcation::fold;
  throw NumericalError("classify_zero_bifurcation: eigenvector has no parity under R");
}

/// The two equilibria born at the first pitchfork (even n, F <= -1/2):
/// alternating coordinates a_pm = -1/2 +- (1/2) sqrt(-1 - 2F). The second
/// one is the first shifted by one site.
inline std::pair<State, State> first_pitchfork_branch(const ModelParams& p) {
  detail::check_params(p);
  if (p.n % 2 != 0) throw std::invalid_argument("first_pitchfork_branch: n must be even");
  if (p.F > -0.5)
    throw std::invalid_argument("first_pitchfork_branch: branch exists only for F <= -1/2");
  const double root = std::sqrt(-1.0 - 2.0 * p.F);
  const double a_plus = -0.5 + 0.5 * root;
  const double a_minus = -0.5 - 0.5 * root;
  State xi0(p.n), xi1(p.n);
  for (int j = 0; j < p.n; ++j) {
    xi0[j] = (j % 2 == 0) ? a_plus : a_minus;
    xi1[j] = (j % 2 == 0) ? a_minus : a_plus;
  }
  return {xi0, xi1};
}

/// Eigenvalues of the first-pitchfork equilibria in dimension 4:
/// (-1 +- sqrt(9 + 16F))/2 and (-3 +- sqrt(-3 - 4F))/2, complex roots allowed.
inline std::array<Complex, 4> first_branch_eigenvalues_dim4(double F) {
  const Complex r01 = std::sqrt(Complex(9.0 + 16.0 * F, 0.0));
  const Complex r23 = std::sqrt(Complex(-3.0 - 4.0 * F, 0.0));
  return {0.5 * (-1.0 + r01), 0.5 * (-1.0 - r01), 0.5 * (-3.0 + r23), 0.5 * (-3.0 - r23)};
}

/// Reduced pitchfork dynamics u' = linear * u + cubic * u^3.
struct NormalFormPF {
  double alpha = 0;   // unfolding parameter
  double linear = 0;  // coefficient of u
  double cubic = 0;   // coefficient of u^3
  bool supercritical = false;
};

/// Normal form of the first pitchfork: u' = -2 alpha u - (4/n) u^3 with
/// alpha = F + 1/2. Always supercritical; the emerging branch satisfies
/// u^2 = -n alpha / 2 for alpha < 0.
inline NormalFormPF pf1_normal_form(int n, double F) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("pf1_normal_form: n must be even");
  NormalFormPF nf;
  nf.alpha = F + 0.5;
  nf.linear = -2.0 * nf.alpha;
  nf.cubic = -4.0 / double(n);
  nf.supercritical = nf.cubic < 0;
  return nf;
}

/// Normal-form coefficients of the second pitchfork in dimension 4, as
/// functions of alpha = F + 3. Valid for alpha < 5/2.
inline NormalFormPF pf2_normal_form_dim4(double alpha) {
  if (alpha >= 2.5)
    throw std::invalid_argument("pf2_normal_form_dim4: requires alpha < 5/2");
  const double s5 = std::sqrt(5.0);
  const double root = std::sqrt(5.0 - 2.0 * alpha);
  NormalFormPF nf;
  nf.alpha = alpha;
  nf.linear = alpha * (18.0 * s5 * root + alpha) / (54.0 * (-5.0 + 2.0 * alpha));
  nf.cubic = (450.0 * (145.0 + 61.0 * s5) +
              alpha * (root * (854.0 + 406.0 * s5) - 180.0 * (145.0 + 61.0 * s5))) /
             (135.0 * (23.0 + 3.0 * s5) * (-5.0 + 2.0 * alpha));
  nf.supercritical = nf.cubic < 0;
  return nf;
}

/// Full eigendecomposition of a dense real matrix, sorted by descending real
/// part (ties by descending imaginary part).
inline Spectrum numerical_spectrum(const Matrix& J, bool with_vectors = true) {
  Eigen::EigenSolver<Matrix> es(J, with_vectors);
  if (es.info() != Eigen::Success) throw NumericalError("numerical_spectrum: eigensolver failed");
  const long n = J.rows();
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  const Eigen::VectorXcd& ev = es.eigenvalues();
  std::sort(idx.begin(), idx.end(), [&](long a, long b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() > ev[b].real();
    return ev[a].imag() > ev[b].imag();
  });
  Spectrum s;
  s.order = SpectrumOrder::by_real_part;
  s.values.resize(n);
  if (with_vectors) s.vectors.resize(n, n);
  for (long i = 0; i < n; ++i) {
    s.values[i] = ev[idx[i]];
    if (with_vectors) s.vectors.col(i) = es.eigenvectors().col(idx[i]);
  }
  return s;
}

/// Extracts a real unit eigenvector from a complex eigenvector column whose
/// eigenvalue is (numerically) real: rotates the phase so the dominant
/// component is real, then drops the imaginary part.
inline State real_eigenvector(const Eigen::VectorXcd& v) {
  long imax = 0;
  double amax = 0;
  for (long i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > amax) {
      amax = std::abs(v[i]);
      imax = i;
    }
  }
  if (amax == 0) throw std::invalid_argument("real_eigenvector: zero vector");
  const Complex phase = v[imax] / std::abs(v[imax]);
  State r(v.size());
  for (long i = 0; i < v.size(); ++i) r[i] = (v[i] / phase).real();
  r.normalize();
  return r;
}

}  // namespace l96
