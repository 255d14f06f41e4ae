#pragma once

// Core definitions for the monoscale Lorenz-96 model: the vector field with
// cyclic boundary conditions, its analytic Jacobian, the cyclic shift group
// acting on states, and the block structure of shift-invariant states.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace l96 {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when an iterative numerical procedure fails (non-convergence,
/// blow-up, singular linear system). Distinct from std::invalid_argument,
/// which signals contract misuse by the caller.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelParams {
  int n = 0;     // number of sites on the ring
  double F = 0;  // forcing
};

namespace detail {

inline long mod(long j, long n) {
  long r = j % n;
  return r < 0 ? r + n : r;
}

inline void check_params(const ModelParams& p) {
  if (p.n < 1) throw std::invalid_argument("ModelParams: n must be >= 1");
  if (!std::isfinite(p.F)) throw std::invalid_argument("ModelParams: F must be finite");
}

inline void check_state(const State& x, const ModelParams& p) {
  check_params(p);
  if (x.size() != p.n)
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(p.n));
}

}  // namespace detail

/// The constant equilibrium (F, ..., F), which exists for every n and F.
inline State trivial_equilibrium(const ModelParams& p) {
  detail::check_params(p);
  return State::Constant(p.n, p.F);
}

/// Right-hand side: dx_j/dt = x_{j-1} (x_{j+1} - x_{j-2}) - x_j + F, indices mod n.
/// The modular index arithmetic covers n <= 3, where neighbor indices collide.
inline State vector_field(const State& x, const ModelParams& p) {
  detail::check_state(x, p);
  const long n = p.n;
  State f(n);
  for (long j = 0; j < n; ++j) {
    f[j] = x[detail::mod(j - 1, n)] * (x[detail::mod(j + 1, n)] - x[detail::mod(j - 2, n)]) -
           x[j] + p.F;
  }
  return f;
}

/// Analytic Jacobian of vector_field. Contributions are accumulated so that
/// coincident neighbor indices (n <= 3) sum instead of overwriting.
inline Matrix jacobian(const State& x, const ModelParams& p) {
  detail::check_state(x, p);
  const long n = p.n;
  Matrix J = Matrix::Zero(n, n);
  for (long j = 0; j < n; ++j) {
    const long jm1 = detail::mod(j - 1, n);
    const long jp1 = detail::mod(j + 1, n);
    const long jm2 = detail::mod(j - 2, n);
    J(j, jm1) += x[jp1] - x[jm2];
    J(j, jp1) += x[jm1];
    J(j, jm2) -= x[jm1];
    J(j, j) -= 1.0;
  }
  return J;
}

/// Cyclic left shift by k positions: result_j = x_{j+k mod n}. Accepts any k.
inline State shift(const State& x, long k) {
  const long n = x.size();
  if (n == 0) return x;
  k = detail::mod(k, n);
  if (k == 0) return x;
  State y(n);
  y.head(n - k) = x.tail(n - k);
  y.tail(k) = x.head(k);
  return y;
}

/// Concatenates `copies` repetitions of x. The result is invariant under
/// shifts by multiples of x's dimension.
inline State lift(const State& x, int copies) {
  if (copies < 1) throw std::invalid_argument("lift: copies must be >= 1");
  const long m = x.size();
  State y(m * copies);
  for (int c = 0; c < copies; ++c) y.segment(c * m, m) = x;
  return y;
}

/// n = 2^q * p with p odd.
struct DimensionFactors {
  int n = 0;
  int q = 0;
  int p = 0;
};

inline DimensionFactors factor_dimension(int n) {
  if (n < 1) throw std::invalid_argument("factor_dimension: n must be >= 1");
  DimensionFactors d{n, 0, n};
  while (d.p % 2 == 0) {
    d.p /= 2;
    ++d.q;
  }
  return d;
}

/// Smallest m | n such that shifting by m reproduces the point within tol,
/// together with the leading m-coordinate block. m = n for generic points.
struct SymmetrySignature {
  int m = 0;
  State block;
};

inline SymmetrySignature symmetry_signature(const State& x, double tol = 1e-8) {
  if (tol <= 0) throw std::invalid_argument("symmetry_signature: tol must be > 0");
  const long n = x.size();
  for (long m = 1; m <= n; ++m) {
    if (n % m != 0) continue;
    double dev = 0;
    for (long j = 0; j < n; ++j) dev = std::max(dev, std::abs(x[detail::mod(j + m, n)] - x[j]));
    if (dev <= tol) return {static_cast<int>(m), x.head(m)};
  }
  return {static_cast<int>(n), x};  // unreachable: m = n always matches exactly
}

}  // namespace l96
