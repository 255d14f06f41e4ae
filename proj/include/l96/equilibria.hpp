#pragma once

// Numerical equilibrium solving (damped Newton on the dense Jacobian),
// stability classification, and group-orbit bookkeeping for conjugate
// equilibria related by cyclic shifts.

#include "l96/model.hpp"
#include "l96/spectral.hpp"

#include <optional>
#include <vector>

namespace l96 {

/// Cascade coordinates of an equilibrium branch: `level` counts successive
/// pitchforks from the trivial branch (level 0), `conjugacy` how many unit
/// shifts take the level representative to this branch.
struct BranchLabel {
  int level = 0;
  int conjugacy = 0;
};

struct Equilibrium {
  State x;
  double F = 0;
  Spectrum spectrum;  // numerical; may be left empty for large systems
  bool stable = false;
  SymmetrySignature signature;
  std::optional<BranchLabel> label;

  ModelParams params() const { return {static_cast<int>(x.size()), F}; }
};

struct NewtonOptions {
  double tol = 1e-12;           // infinity-norm residual target
  int max_iter = 50;
  int max_halvings = 10;        // damping: step halvings per iteration
  bool compute_spectrum = true; // dense eigendecomposition on success
  double signature_tol = 1e-8;
  double stability_margin = 1e-10;
};

namespace detail {

inline void finish_equilibrium(Equilibrium& eq, const NewtonOptions& opts) {
  eq.signature = symmetry_signature(eq.x, opts.signature_tol);
  if (opts.compute_spectrum) {
    eq.spectrum = numerical_spectrum(jacobian(eq.x, eq.params()));
    eq.stable = eq.spectrum.values[0].real() < -opts.stability_margin;
  }
}

}  // namespace detail

/// Damped Newton iteration for vector_field(x, F) = 0. After meeting the
/// residual target one extra polishing step is taken, so returned points sit
/// at the round-off floor rather than just under tol. Throws NumericalError
/// on stagnation or after max_iter iterations.
inline Equilibrium newton_solve(const State& x0, const ModelParams& p,
                                const NewtonOptions& opts = {}) {
  detail::check_state(x0, p);
  if (opts.tol <= 0) throw std::invalid_argument("newton_solve: tol must be > 0");

  State x = x0;
  State f = vector_field(x, p);
  double res = f.lpNorm<Eigen::Infinity>();
  bool polished = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (res <= opts.tol) {
      if (polished) break;
      polished = true;  // one more full step to tighten below tol
    }
    // QR rather than partially pivoted LU: this Jacobian family realizes
    // pathological LU element growth already for moderate dimensions
    const Matrix J = jacobian(x, p);
    const State d = J.householderQr().solve(-f);
    if (!d.allFinite()) throw NumericalError("newton_solve: singular Jacobian");

    double t = 1.0;
    int h = 0;
    for (; h <= opts.max_halvings; ++h, t *= 0.5) {
      const State xt = x + t * d;
      const State ft = vector_field(xt, p);
      const double rt = ft.lpNorm<Eigen::Infinity>();
      if (rt < res || rt <= opts.tol) {
        x = xt;
        f = ft;
        res = rt;
        break;
      }
    }
    if (h > opts.max_halvings) {
      if (res <= opts.tol) break;  // polish step failed to improve; accept
      throw NumericalError("newton_solve: stagnated at residual " + std::to_string(res));
    }
  }
  if (res > opts.tol)
    throw NumericalError("newton_solve: no convergence after max_iter (residual " +
                         std::to_string(res) + ")");

  Equilibrium eq;
  eq.x = x;
  eq.F = p.F;
  detail::finish_equilibrium(eq, opts);
  return eq;
}

struct StabilityReport {
  double max_real_part = 0;
  int unstable_real = 0;   // real eigenvalues with positive real part
  int unstable_pairs = 0;  // complex-conjugate pairs with positive real part
  bool stable = false;
};

/// Summarizes the spectrum: sign of the rightmost real part and the number of
/// unstable directions, split into real eigenvalues and conjugate pairs.
inline StabilityReport stability(const Equilibrium& eq, double margin = 1e-10,
                                 double imag_tol = 1e-9) {
  if (eq.spectrum.values.size() == 0)
    throw std::invalid_argument("stability: equilibrium has no computed spectrum");
  StabilityReport r;
  r.max_real_part = eq.spectrum.values[0].real();
  for (long i = 0; i < eq.spectrum.values.size(); ++i) {
    const Complex lam = eq.spectrum.values[i];
    if (lam.real() <= margin) continue;
    if (std::abs(lam.imag()) <= imag_tol)
      ++r.unstable_real;
    else if (lam.imag() > 0)  // count each pair once
      ++r.unstable_pairs;
  }
  r.stable = r.max_real_part < -margin;
  return r;
}

/// The distinct conjugates gamma^k x for k = 0 .. signature.m - 1. Conjugate
/// equilibria share their spectrum, so it is copied rather than recomputed.
/// Coinciding conjugates (within dedup_tol) are dropped.
inline std::vector<Equilibrium> group_orbit(const Equilibrium& eq, double dedup_tol = 1e-8) {
  std::vector<Equilibrium> orbit;
  const int m = eq.signature.m > 0 ? eq.signature.m
                                   : symmetry_signature(eq.x).m;
  for (int k = 0; k < m; ++k) {
    Equilibrium conj = eq;
    conj.x = shift(eq.x, k);
    if (eq.label) conj.label = BranchLabel{eq.label->level, (eq.label->conjugacy + k)};
    bool duplicate = false;
    for (const Equilibrium& seen : orbit) {
      if ((seen.x - conj.x).lpNorm<Eigen::Infinity>() <= dedup_tol) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) orbit.push_back(std::move(conj));
  }
  return orbit;
}

}  // namespace l96
