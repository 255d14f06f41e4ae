#pragma once

// Pseudo-arclength continuation of equilibrium branches in the forcing F,
// with detection of pitchfork and Hopf points, branch switching at
// pitchforks, and the recursive cascade scan.
//
// The arclength metric weights the state block by 1/n (root-mean-square per
// coordinate), so step sizes and detection brackets behave identically for a
// model and its block-lifted copies in higher dimension.

#include "l96/equilibria.hpp"
#include "l96/model.hpp"
#include "l96/spectral.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace l96 {

enum class BifurcationKind { pitchfork, hopf, fold };
enum class Parity { symmetric, antisymmetric, unknown };

struct BifurcationPoint {
  BifurcationKind kind = BifurcationKind::fold;
  double F = 0;
  State x;                    // equilibrium at the bifurcation
  Complex eigenvalue{0, 0};   // critical eigenvalue (or pair member with Im > 0)
  State eigenvector;          // real critical eigenvector (zero-eigenvalue points)
  Parity parity = Parity::unknown;
  BranchLabel on_branch;
};

struct BranchPoint {
  double F = 0;
  State x;
};

struct Branch {
  BranchLabel label;
  std::vector<BranchPoint> points;
  std::vector<BifurcationPoint> bifurcations;

  double F_start() const { return points.front().F; }
  double F_end() const { return points.back().F; }
};

struct ContinuationOptions {
  double ds_initial = 1e-2;
  double ds_min = 1e-5;
  double ds_max = 0.2;
  double growth = 1.3;      // step growth factor ...
  int grow_after = 3;       // ... applied after this many consecutive successes
  double newton_tol = 1e-12;
  int corrector_max_iter = 16;  // high-dimensional branches converge linearly near crossings
  long max_steps = 50000;
  bool detect_bifurcations = true;
  double detect_tol = 1e-9;  // |critical real part| at the refined point
  int bisect_max = 80;
  int dense_eig_limit = 64;  // full spectra per step up to this dimension
  double imag_tol = 1e-8;    // |Im| below this counts as a real eigenvalue
};

struct TestFunctions {
  bool has_real = false;
  double nearest_real = 0;       // real eigenvalue of smallest |Re|, signed
  int positive_real = 0;
  bool has_pair = false;
  double nearest_pair_real = 0;  // real part of the pair closest to the axis, signed
  int positive_pairs = 0;
};

/// Test-function values for bifurcation bracketing, read off a computed
/// spectrum: the real eigenvalue closest to zero and the complex-pair real
/// part closest to zero, plus counts of unstable ones of each kind.
inline TestFunctions detect_test_functions(const Spectrum& spectrum, double imag_tol = 1e-8) {
  if (spectrum.values.size() == 0)
    throw std::invalid_argument("detect_test_functions: empty spectrum");
  TestFunctions tf;
  for (long i = 0; i < spectrum.values.size(); ++i) {
    const Complex lam = spectrum.values[i];
    const bool is_real = std::abs(lam.imag()) <= imag_tol * (1.0 + std::abs(lam.real()));
    if (is_real) {
      if (!tf.has_real || std::abs(lam.real()) < std::abs(tf.nearest_real))
        tf.nearest_real = lam.real();
      tf.has_real = true;
      if (lam.real() > 0) ++tf.positive_real;
    } else if (lam.imag() > 0) {  // one representative per conjugate pair
      if (!tf.has_pair || std::abs(lam.real()) < std::abs(tf.nearest_pair_real))
        tf.nearest_pair_real = lam.real();
      tf.has_pair = true;
      if (lam.real() > 0) ++tf.positive_pairs;
    }
  }
  return tf;
}

inline TestFunctions detect_test_functions(const Equilibrium& eq, double imag_tol = 1e-8) {
  return detect_test_functions(eq.spectrum, imag_tol);
}

namespace detail {

// ---------------------------------------------------------------------------
// weighted (x, F) geometry

struct ContPoint {
  State x;
  double F = 0;
};

inline double dot_w(const ContPoint& a, const ContPoint& b) {
  return a.x.dot(b.x) / double(a.x.size()) + a.F * b.F;
}

inline double norm_w(const ContPoint& a) { return std::sqrt(dot_w(a, a)); }

inline ContPoint axpy(const ContPoint& a, double s, const ContPoint& d) {
  return {a.x + s * d.x, a.F + s * d.F};
}

inline ContPoint diff(const ContPoint& a, const ContPoint& b) { return {a.x - b.x, a.F - b.F}; }

// Sign of det(J) from a fully pivoted LU factorization (partial pivoting is
// numerically untrustworthy on this matrix family), avoiding overflow of the
// determinant product.
inline int det_sign(const Eigen::FullPivLU<Matrix>& lu) {
  int sign = lu.permutationP().determinant() * lu.permutationQ().determinant() > 0 ? 1 : -1;
  for (long i = 0; i < lu.rows(); ++i) {
    const double d = lu.matrixLU()(i, i);
    if (d == 0) return 0;
    if (d < 0) sign = -sign;
  }
  return sign;
}

// Newton corrector for the bordered system f(x, F) = 0, <t, u - u_ref>_w = 0.
// Returns false when the iteration fails to meet tol.
inline bool correct(ContPoint& u, const ContPoint& tangent, const ContPoint& u_ref, int n,
                    double tol, int max_iter) {
  const double inv_n = 1.0 / double(n);
  for (int it = 0; it < max_iter; ++it) {
    const ModelParams p{n, u.F};
    const State f = vector_field(u.x, p);
    const double c = dot_w(diff(u, u_ref), tangent);
    if (f.lpNorm<Eigen::Infinity>() <= tol && std::abs(c) <= 1e-12) return true;

    Matrix B(n + 1, n + 1);
    B.topLeftCorner(n, n) = jacobian(u.x, p);
    B.col(n).head(n).setOnes();  // d f / d F
    B.row(n).head(n) = tangent.x.transpose() * inv_n;
    B(n, n) = tangent.F;
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -f;
    rhs[n] = -c;
    const Eigen::VectorXd d = B.householderQr().solve(rhs);
    if (!d.allFinite()) return false;
    u.x += d.head(n);
    u.F += d[n];
  }
  const State f = vector_field(u.x, ModelParams{n, u.F});
  return f.lpNorm<Eigen::Infinity>() <= tol;
}

// Branch tangent from the Jacobian: solve J tx = -df/dF, normalize (tx, 1),
// then orient toward the requested F direction.
inline ContPoint initial_tangent(const State& x, const ModelParams& p, double direction) {
  const Matrix J = jacobian(x, p);
  const State tx = J.householderQr().solve(-State::Ones(p.n));
  if (!tx.allFinite())
    throw NumericalError("continue_branch: singular Jacobian at the seed point");
  ContPoint t{tx, 1.0};
  const double nw = norm_w(t);
  t.x /= nw;
  t.F /= nw;
  if (t.F * direction < 0) {
    t.x = -t.x;
    t.F = -t.F;
  }
  return t;
}

// ---------------------------------------------------------------------------
// eigenvalue probes at continuation points

// Shift-invert subspace iteration about zero: Ritz approximations to the k
// eigenvalues of J nearest the origin, with a real basis for eigenvector
// extraction. Used beyond the dense-eigensolver size limit.
struct RitzProbe {
  std::vector<Complex> values;  // sorted by |value|
  Matrix basis;                 // n x k, orthonormal
  Eigen::MatrixXcd small_vectors;
};

inline RitzProbe ritz_nearest_zero(const Matrix& J, const Eigen::FullPivLU<Matrix>& lu,
                                   int k, const Matrix* warm = nullptr) {
  const long n = J.rows();
  k = int(std::min<long>(k, n));
  Matrix V;
  if (warm && warm->rows() == n && warm->cols() == k) {
    V = *warm;
  } else {
    V.resize(n, k);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (long i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) V(i, j) = u(rng);
  }

  // when J is singular to working precision, invert a slightly shifted copy;
  // the Rayleigh quotients below are always taken with respect to J itself
  const Eigen::FullPivLU<Matrix>* solver = &lu;
  Eigen::FullPivLU<Matrix> shifted;
  bool use_shifted = false;

  std::vector<double> prev_mags(k, std::numeric_limits<double>::infinity());
  for (int sweep = 0; sweep < 60; ++sweep) {
    Matrix W = solver->solve(V);
    if (!W.allFinite()) {
      if (use_shifted) throw NumericalError("ritz_nearest_zero: singular system");
      shifted.compute(J + 1e-10 * Matrix::Identity(n, n));
      solver = &shifted;
      use_shifted = true;
      W = solver->solve(V);
      if (!W.allFinite()) throw NumericalError("ritz_nearest_zero: singular system");
    }
    V = std::move(W);
    const Eigen::HouseholderQR<Matrix> qr(V);
    V = qr.householderQ() * Matrix::Identity(n, k);

    if (sweep % 5 == 4 || sweep == 59) {
      const Matrix H = V.transpose() * (J * V);
      Eigen::EigenSolver<Matrix> es(H);
      std::vector<double> mags(k);
      for (int i = 0; i < k; ++i) mags[i] = std::abs(es.eigenvalues()[i]);
      std::sort(mags.begin(), mags.end());
      double change = 0;
      for (int i = 0; i < k; ++i)
        change = std::max(change, std::abs(mags[i] - prev_mags[i]) / (1e-14 + mags[i]));
      prev_mags = mags;
      if (change < 1e-12) break;
    }
  }

  const Matrix H = V.transpose() * (J * V);
  Eigen::EigenSolver<Matrix> es(H);
  RitzProbe probe;
  probe.basis = V;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
  });
  probe.values.reserve(k);
  probe.small_vectors.resize(k, k);
  for (int i = 0; i < k; ++i) {
    probe.values.push_back(es.eigenvalues()[idx[i]]);
    probe.small_vectors.col(i) = es.eigenvectors().col(idx[i]);
  }
  return probe;
}

// Everything the detector needs at one accepted point.
struct PointProbe {
  int det_sign = 0;
  bool dense = false;
  TestFunctions tf;       // dense path only
  Spectrum spectrum;      // dense path only (no vectors)
  double nearest_real = std::numeric_limits<double>::quiet_NaN();
};

// `with_eigs` requests eigenvalue estimates beyond the dense size limit (only
// needed inside refinement brackets); det sign alone drives the bracketing.
inline PointProbe probe_point(const State& x, double F, const ContinuationOptions& opts,
                              Matrix* ritz_warm, bool with_eigs = false) {
  const ModelParams p{int(x.size()), F};
  const Matrix J = jacobian(x, p);
  const Eigen::FullPivLU<Matrix> lu(J);
  PointProbe pr;
  pr.det_sign = det_sign(lu);
  if (x.size() <= opts.dense_eig_limit) {
    pr.dense = true;
    pr.spectrum = numerical_spectrum(J, /*with_vectors=*/false);
    pr.tf = detect_test_functions(pr.spectrum, opts.imag_tol);
    if (pr.tf.has_real) pr.nearest_real = pr.tf.nearest_real;
  } else if (with_eigs) {
    const RitzProbe rz = ritz_nearest_zero(J, lu, 6, ritz_warm);
    if (ritz_warm) *ritz_warm = rz.basis;
    for (const Complex& lam : rz.values) {
      if (std::abs(lam.imag()) <= opts.imag_tol * (1.0 + std::abs(lam.real()))) {
        pr.nearest_real = lam.real();
        break;
      }
    }
  }
  return pr;
}

// Real unit eigenvector for the eigenvalue of J nearest zero.
inline State critical_eigenvector(const State& x, double F, const ContinuationOptions& opts) {
  const ModelParams p{int(x.size()), F};
  const Matrix J = jacobian(x, p);
  if (x.size() <= opts.dense_eig_limit) {
    const Spectrum s = numerical_spectrum(J, true);
    long best = 0;
    double bmag = std::numeric_limits<double>::infinity();
    for (long i = 0; i < s.values.size(); ++i) {
      if (std::abs(s.values[i].imag()) > opts.imag_tol * (1.0 + std::abs(s.values[i].real())))
        continue;
      if (std::abs(s.values[i].real()) < bmag) {
        bmag = std::abs(s.values[i].real());
        best = i;
      }
    }
    return real_eigenvector(s.vectors.col(best));
  }
  const Eigen::FullPivLU<Matrix> lu(J);
  const RitzProbe rz = ritz_nearest_zero(J, lu, 6, nullptr);
  const Eigen::VectorXcd v = rz.basis * rz.small_vectors.col(0);
  return real_eigenvector(v);
}

}  // namespace detail

/// Newton-corrects an equilibrium at the exact forcing F, seeded from the
/// branch sample(s) bracketing F (linear interpolation between them).
inline Equilibrium equilibrium_at(const Branch& branch, double F, const NewtonOptions& opts = {}) {
  if (branch.points.empty()) throw std::invalid_argument("equilibrium_at: empty branch");
  const auto& pts = branch.points;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i].F, b = pts[i + 1].F;
    if ((F - a) * (F - b) <= 0) {
      const double w = std::abs(b - a) < 1e-300 ? 0.0 : (F - a) / (b - a);
      const State x0 = (1.0 - w) * pts[i].x + w * pts[i + 1].x;
      Equilibrium eq = newton_solve(x0, ModelParams{int(x0.size()), F}, opts);
      eq.label = branch.label;
      return eq;
    }
  }
  throw std::invalid_argument("equilibrium_at: F outside the branch range");
}

/// Traces the equilibrium branch through `seed` from seed.F toward F_to by
/// pseudo-arclength continuation (secant predictor, bordered Newton
/// corrector). Sign changes of det(J) are refined by bisection in arclength
/// to |Re lambda| <= detect_tol and classified by the eigenvector parity
/// test; changes in the number of unstable conjugate pairs are refined the
/// same way and recorded as Hopf points (dense-spectrum dimensions only).
inline Branch continue_branch(const Equilibrium& seed, double F_to,
                              const ContinuationOptions& opts = {}) {
  const int n = int(seed.x.size());
  const ModelParams p0{n, seed.F};
  if (F_to == seed.F) throw std::invalid_argument("continue_branch: F_to equals seed.F");
  {
    const double res = vector_field(seed.x, p0).lpNorm<Eigen::Infinity>();
    if (res > 1e-8)
      throw std::invalid_argument("continue_branch: seed is not an equilibrium (residual " +
                                  std::to_string(res) + ")");
  }
  const double direction = F_to > seed.F ? 1.0 : -1.0;

  Branch branch;
  branch.label = seed.label.value_or(BranchLabel{0, 0});
  branch.points.push_back({seed.F, seed.x});

  detail::ContPoint u{seed.x, seed.F};
  detail::ContPoint tangent = detail::initial_tangent(seed.x, p0, direction);

  Matrix ritz_warm;
  detail::PointProbe prev =
      opts.detect_bifurcations ? detail::probe_point(u.x, u.F, opts, &ritz_warm)
                               : detail::PointProbe{};

  // Bisection refinement of one event inside [u_a, u_b]. `use_det` selects the
  // side test: det sign for real-eigenvalue events, pair real part for Hopf.
  // The parent block size is read off the bracket start: the refined point
  // itself sits in the singular smear of the crossing, where corrector wobble
  // along the critical eigenvector corrupts its signature.
  const auto refine = [&](const detail::ContPoint& u_a, const detail::ContPoint& u_b,
                          const detail::PointProbe& pa, bool use_det) {
    const int parent_m = symmetry_signature(u_a.x, 1e-6).m;
    const detail::ContPoint secant = detail::diff(u_b, u_a);
    const double seclen = detail::norm_w(secant);
    detail::ContPoint t{secant.x / seclen, secant.F / seclen};

    double lo = 0.0, hi = 1.0;
    detail::ContPoint u_mid = u_a;
    detail::PointProbe pm;
    double critical = std::numeric_limits<double>::quiet_NaN();
    bool refined = true;
    for (int it = 0; it < opts.bisect_max; ++it) {
      bool ok = false;
      double theta = 0.5 * (lo + hi);
      // a defective crossing can defeat the corrector right at the midpoint;
      // probe a few offsets before declaring the event unrefinable
      for (double split : {0.5, 0.55, 0.45, 0.7, 0.3}) {
        theta = lo + split * (hi - lo);
        const detail::ContPoint ref = detail::axpy(u_a, theta, secant);
        u_mid = ref;
        ok = detail::correct(u_mid, t, ref, n, opts.newton_tol, opts.corrector_max_iter);
        if (ok) break;
      }
      if (!ok) {
        refined = false;
        u_mid = detail::axpy(u_a, 0.5 * (lo + hi), secant);
        break;
      }
      pm = detail::probe_point(u_mid.x, u_mid.F, opts, &ritz_warm, /*with_eigs=*/true);
      const bool side_a = use_det ? (pm.det_sign == pa.det_sign)
                                  : (pm.tf.has_pair && pa.tf.has_pair &&
                                     (pm.tf.nearest_pair_real < 0) == (pa.tf.nearest_pair_real < 0));
      critical = use_det ? pm.nearest_real
                         : (pm.tf.has_pair ? pm.tf.nearest_pair_real
                                           : std::numeric_limits<double>::quiet_NaN());
      if (std::isfinite(critical) && std::abs(critical) <= opts.detect_tol) break;
      (side_a ? lo : hi) = theta;
    }

    BifurcationPoint bp;
    bp.F = u_mid.F;
    bp.x = u_mid.x;
    bp.on_branch = branch.label;
    if (!refined) {  // stepping already crossed the event; report it unclassified
      bp.kind = BifurcationKind::fold;
      bp.parity = Parity::unknown;
      return bp;
    }
    if (use_det) {
      // project the refined point back onto the parent's symmetry class:
      // averaging with the half-shift image cancels the wobble along the
      // (antisymmetric) critical eigenvector, and Newton at fixed F then
      // converges within the symmetric subspace, where the Jacobian is regular
      try {
        const State x_sym = 0.5 * (u_mid.x + shift(u_mid.x, parent_m));
        if (vector_field(x_sym, {n, u_mid.F}).lpNorm<Eigen::Infinity>() <= opts.newton_tol) {
          bp.x = x_sym;
        } else {
          NewtonOptions polish;
          polish.tol = opts.newton_tol;
          polish.compute_spectrum = false;
          bp.x = newton_solve(x_sym, ModelParams{n, u_mid.F}, polish).x;
        }
      } catch (const NumericalError&) {
        // fall back to the raw refined point
      }
      bp.eigenvalue = Complex(std::isfinite(critical) ? critical : 0.0, 0.0);
      bp.eigenvector = detail::critical_eigenvector(bp.x, bp.F, opts);
      try {
        const ZeroBifurcation zb = classify_zero_bifurcation(bp.eigenvector, parent_m);
        bp.parity = zb == ZeroBifurcation::pitchfork ? Parity::antisymmetric : Parity::symmetric;
        bp.kind = zb == ZeroBifurcation::pitchfork ? BifurcationKind::pitchfork
                                                   : BifurcationKind::fold;
      } catch (const NumericalError&) {
        bp.parity = Parity::unknown;
        bp.kind = BifurcationKind::fold;
      }
    } else {
      // recover the crossing pair's imaginary part from the dense spectrum
      bp.kind = BifurcationKind::hopf;
      const Spectrum s = numerical_spectrum(jacobian(u_mid.x, ModelParams{n, u_mid.F}), false);
      double best = std::numeric_limits<double>::infinity();
      for (long i = 0; i < s.values.size(); ++i) {
        const Complex lam = s.values[i];
        if (lam.imag() > opts.imag_tol && std::abs(lam.real()) < best) {
          best = std::abs(lam.real());
          bp.eigenvalue = lam;
        }
      }
    }
    return bp;
  };

  double ds = opts.ds_initial;
  int streak = 0;
  bool done = false;
  for (long step = 0; step < opts.max_steps && !done; ++step) {
    detail::ContPoint u_pred = detail::axpy(u, ds, tangent);
    detail::ContPoint u_new = u_pred;
    const bool ok =
        detail::correct(u_new, tangent, u_pred, n, opts.newton_tol, opts.corrector_max_iter) &&
        detail::dot_w(detail::diff(u_new, u), tangent) > 0;  // no backward jumps
    if (!ok) {
      ds *= 0.5;
      streak = 0;
      if (ds < opts.ds_min)
        throw NumericalError("continue_branch: corrector divergence at minimal step");
      continue;
    }

    if (opts.detect_bifurcations) {
      detail::PointProbe cur = detail::probe_point(u_new.x, u_new.F, opts, &ritz_warm);
      if (prev.det_sign != 0 && cur.det_sign != 0 && cur.det_sign != prev.det_sign)
        branch.bifurcations.push_back(refine(u, u_new, prev, /*use_det=*/true));
      if (prev.dense && cur.dense) {
        const int dp = cur.tf.positive_pairs - prev.tf.positive_pairs;
        const int dr = cur.tf.positive_real - prev.tf.positive_real;
        const bool collision = (dp == 1 && dr == -2) || (dp == -1 && dr == 2);
        if (dp != 0 && !collision)
          branch.bifurcations.push_back(refine(u, u_new, prev, /*use_det=*/false));
      }
      prev = cur;
    }

    tangent = detail::diff(u_new, u);
    const double len = detail::norm_w(tangent);
    tangent.x /= len;
    tangent.F /= len;
    u = u_new;
    branch.points.push_back({u.F, u.x});

    if (++streak >= opts.grow_after) {
      ds = std::min(ds * opts.growth, opts.ds_max);
      streak = 0;
    }

    if ((F_to - u.F) * direction <= 0) done = true;
  }
  if (!done) throw NumericalError("continue_branch: max_steps exceeded before reaching F_to");

  // land exactly on F_to
  if (std::abs(branch.points.back().F - F_to) > 1e-13) {
    const auto& a = branch.points[branch.points.size() - 2];
    const auto& b = branch.points.back();
    const double w = (F_to - a.F) / (b.F - a.F);
    const State x0 = (1.0 - w) * a.x + w * b.x;
    NewtonOptions nopts;
    nopts.tol = opts.newton_tol;
    nopts.compute_spectrum = false;
    const Equilibrium end = newton_solve(x0, ModelParams{n, F_to}, nopts);
    branch.points.back() = {F_to, end.x};
  }
  return branch;
}

struct BranchSwitchOptions {
  // per-coordinate step-off amplitude relative to the state scale; the pinned
  // amplitude is offset_scale * sqrt(n) * (1 + |x|_inf), so the reduced
  // deviation is the same for a model and its block-lifted copies
  double offset_scale = 1e-3;
  int max_retries = 10;  // amplitude doublings (corrector failure) / halvings (overshoot)
  int max_iter = 40;
  // children landing further than this below/above the bifurcation are redone
  // with half the amplitude; keeps deep-cascade children above their own next
  // (geometrically closer) bifurcation
  double max_f_displacement = std::numeric_limits<double>::infinity();
  NewtonOptions newton{};
};

/// Constructs the two equilibria emerging at a pitchfork. The first child is
/// found by Newton on the pinned-amplitude system
///     f(x, F) = 0,   v . (x - x*) = delta,
/// with F free: the border removes the near-null critical direction, so the
/// iteration is well conditioned right at the bifurcation and cannot fall
/// back onto the parent (which has amplitude zero). The second child is the
/// shift conjugate of the first by the parent's block size. Children land at
/// F = F* - O(delta^2) on the side where the branch exists.
inline std::pair<Equilibrium, Equilibrium> branch_switch(const BifurcationPoint& bp,
                                                         const BranchSwitchOptions& opts = {}) {
  if (bp.kind != BifurcationKind::pitchfork)
    throw std::invalid_argument("branch_switch: not a pitchfork point");
  if (bp.eigenvector.size() != bp.x.size())
    throw std::invalid_argument("branch_switch: missing critical eigenvector");
  const int n = int(bp.x.size());
  const int parent_m = symmetry_signature(bp.x, 1e-6).m;
  const State dir = bp.eigenvector / bp.eigenvector.norm();
  const double scale = std::sqrt(double(n)) * (1.0 + bp.x.lpNorm<Eigen::Infinity>());
  const double tol = opts.newton.tol;

  double delta = opts.offset_scale * scale;
  double delta_overshoot = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    State x = bp.x + delta * dir;
    double F = bp.F;
    bool converged = false;
    for (int it = 0; it < opts.max_iter; ++it) {
      const State f = vector_field(x, {n, F});
      const double c = dir.dot(x - bp.x) - delta;
      if (f.lpNorm<Eigen::Infinity>() <= tol && std::abs(c) <= 1e-12) {
        converged = true;
        break;
      }
      Matrix B(n + 1, n + 1);
      B.topLeftCorner(n, n) = jacobian(x, {n, F});
      B.col(n).head(n).setOnes();
      B.row(n).head(n) = dir.transpose();
      B(n, n) = 0.0;
      Eigen::VectorXd rhs(n + 1);
      rhs.head(n) = -f;
      rhs[n] = -c;
      const Eigen::VectorXd d = B.householderQr().solve(rhs);
      if (!d.allFinite()) break;
      x += d.head(n);
      F += d[n];
    }
    if (!converged) {
      // grow, but never back into amplitudes that already overshot
      delta *= 2.0;
      if (delta >= delta_overshoot) delta = 0.45 * delta_overshoot;
      continue;
    }
    const double displacement = std::abs(F - bp.F);
    if (displacement > opts.max_f_displacement) {
      // displacement scales like delta^2: rescale toward the target directly
      delta_overshoot = std::min(delta_overshoot, delta);
      delta *= std::clamp(0.7 * std::sqrt(opts.max_f_displacement / displacement), 0.05, 0.5);
      continue;
    }

    Equilibrium child;
    child.x = x;
    child.F = F;
    detail::finish_equilibrium(child, opts.newton);
    if (child.signature.m != 2 * parent_m) {  // landed on an unrelated branch
      delta *= 2.0;
      continue;
    }

    Equilibrium sibling = child;
    sibling.x = shift(child.x, parent_m);
    sibling.signature = symmetry_signature(sibling.x, opts.newton.signature_tol);
    const BranchLabel parent_label = bp.on_branch;
    child.label = BranchLabel{parent_label.level + 1, parent_label.conjugacy};
    sibling.label = BranchLabel{parent_label.level + 1, parent_label.conjugacy + parent_m};
    return {child, sibling};
  }
  throw NumericalError("branch_switch: pinned-amplitude corrector found no child branch");
}

struct CascadeReport {
  int n = 0, q = 0, p = 0;
  double floor = 0;
  std::vector<double> pf_values;  // F of the l-th pitchfork, index l-1
  std::vector<double> ratios;     // spacing ratios r_l, defined from l = 3
  long equilibria_count = 0;
  std::vector<Branch> branches;
  std::vector<std::string> failures;
};

/// Ratios of successive pitchfork spacings,
/// r_l = (F_{l-1} - F_{l-2}) / (F_l - F_{l-1}), defined for l >= 3.
inline std::vector<double> pitchfork_spacing_ratios(const std::vector<double>& pf_values) {
  if (pf_values.size() < 3)
    throw std::invalid_argument("pitchfork_spacing_ratios: need at least 3 values");
  std::vector<double> r;
  for (size_t l = 2; l < pf_values.size(); ++l)
    r.push_back((pf_values[l - 2] - pf_values[l - 1]) / (pf_values[l - 1] - pf_values[l]));
  return r;
}

struct CascadeOptions {
  ContinuationOptions cont{};
  BranchSwitchOptions sw{};
  double residual_tol = 1e-10;  // verification of reconstructed conjugates
  int spectrum_dim_limit = 128; // child solves above this skip the dense spectrum
};

/// Full pitchfork-cascade scan: starting from the trivial equilibrium at
/// F = 0, continues every branch down to F_floor, switching at each detected
/// pitchfork. Only one representative per group orbit is continued; the orbit
/// is reconstructed by shifts at the floor and verified against the residual
/// contract. Continuation failures are collected per branch.
inline CascadeReport cascade_scan(int n, double F_floor, const CascadeOptions& opts = {}) {
  if (F_floor >= -0.5) throw std::invalid_argument("cascade_scan: F_floor must be < -1/2");
  const DimensionFactors fac = factor_dimension(n);
  CascadeReport report;
  report.n = n;
  report.q = fac.q;
  report.p = fac.p;
  report.floor = F_floor;

  NewtonOptions seed_opts;
  seed_opts.compute_spectrum = n <= opts.spectrum_dim_limit;
  Equilibrium trivial = newton_solve(trivial_equilibrium({n, 0.0}), {n, 0.0}, seed_opts);
  trivial.label = BranchLabel{0, 0};

  std::deque<Equilibrium> queue{trivial};
  while (!queue.empty()) {
    Equilibrium seed = std::move(queue.front());
    queue.pop_front();
    Branch br;
    try {
      br = continue_branch(seed, F_floor, opts.cont);
    } catch (const NumericalError& err) {
      report.failures.push_back("level " + std::to_string(seed.label->level) + ": " + err.what());
      continue;
    }

    for (const BifurcationPoint& bp : br.bifurcations) {
      if (bp.kind != BifurcationKind::pitchfork) continue;
      const int level = br.label.level + 1;
      if (int(report.pf_values.size()) < level)
        report.pf_values.resize(level, std::numeric_limits<double>::quiet_NaN());
      report.pf_values[level - 1] = bp.F;
      try {
        BranchSwitchOptions sw = opts.sw;
        sw.newton.compute_spectrum = n <= opts.spectrum_dim_limit;
        // successive gaps shrink by roughly the Feigenbaum factor, so a small
        // fraction of this branch's own gap keeps the child above its next
        // bifurcation
        sw.max_f_displacement = std::abs(br.F_start() - bp.F) / 20.0;
        auto [child, sibling] = branch_switch(bp, sw);
        (void)sibling;  // the orbit reconstruction below covers all conjugates
        queue.push_back(std::move(child));
      } catch (const NumericalError& err) {
        report.failures.push_back("switch at level " + std::to_string(level) + ": " + err.what());
      }
    }

    // orbit size at the floor = block size of the representative there
    const BranchPoint& end = br.points.back();
    const SymmetrySignature sig = symmetry_signature(end.x, 1e-6);
    for (int k = 0; k < sig.m; ++k) {
      const State conj = shift(end.x, k);
      const double res = vector_field(conj, {n, end.F}).lpNorm<Eigen::Infinity>();
      if (res > opts.residual_tol) {
        report.failures.push_back("conjugate residual violation at level " +
                                  std::to_string(br.label.level));
        break;
      }
    }
    report.equilibria_count += sig.m;
    report.branches.push_back(std::move(br));
  }

  if (report.pf_values.size() >= 3) report.ratios = pitchfork_spacing_ratios(report.pf_values);
  return report;
}

}  // namespace l96
