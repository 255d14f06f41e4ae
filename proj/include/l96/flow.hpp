#pragma once

// Time integration and periodic-orbit machinery: an adaptive Dormand-Prince
// 5(4) integrator with dense output, Poincare-section recurrence detection
// with single-shooting refinement, orbit conjugacy under cyclic shifts,
// spatial wave numbers, and the attractor symmetry scan.

#include "l96/equilibria.hpp"
#include "l96/model.hpp"

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace l96 {

struct IntegrateOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  double initial_step = 0;  // 0: automatic
  double max_step = 0;      // 0: unrestricted
  double sample_dt = 0;     // 0: store accepted steps; >0: dense uniform samples
  double blowup_norm = 1e8;
  long max_steps = 100'000'000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  ModelParams params;
};

namespace detail {

// Dormand-Prince 5(4) stepper with the classic quartic dense-output
// polynomial. FSAL: the last stage of an accepted step seeds the next.
class Dopri5 {
 public:
  Dopri5(ModelParams params, const State& x0, double t0, const IntegrateOptions& opts)
      : p_(params), opts_(opts), t_(t0), y_(x0), k1_(vector_field(x0, params)) {
    h_ = opts.initial_step > 0 ? opts.initial_step : initial_step_guess();
  }

  double t() const { return t_; }
  double t_prev() const { return t_ - h_done_; }
  const State& y() const { return y_; }

  // Advances one accepted step; returns the step size actually taken.
  double step() {
    for (int attempt = 0; attempt < 60; ++attempt) {
      if (opts_.max_step > 0 && h_ > opts_.max_step) h_ = opts_.max_step;
      const double err = try_step();
      if (err <= 1.0) {
        const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        accept();
        h_next_ = h_ * std::min(5.0, std::max(0.2, grow));
        if (y_.lpNorm<Eigen::Infinity>() > opts_.blowup_norm)
          throw NumericalError("integrate: state norm exceeded blow-up bound");
        const double h = h_done_;
        h_ = h_next_;
        return h;
      }
      h_ *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      if (h_ < 1e-14 * std::max(1.0, std::abs(t_)))
        throw NumericalError("integrate: step size underflow");
    }
    throw NumericalError("integrate: repeated step rejection");
  }

  // Dense evaluation inside the last accepted step, theta in [0, 1].
  State dense(double theta) const {
    const double t1 = theta, t2 = 1.0 - theta;
    return rc1_ + t1 * (rc2_ + t2 * (rc3_ + t1 * (rc4_ + t2 * rc5_)));
  }

  void limit_step_to(double t_target) {
    if (t_ + h_ > t_target) h_ = t_target - t_;
  }

 private:
  double initial_step_guess() const {
    const double d0 = y_.norm(), d1 = k1_.norm();
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    // one Euler probe to estimate the second derivative scale
    const State y1 = y_ + h0 * k1_;
    const State f1 = vector_field(y1, p_);
    const double d2 = (f1 - k1_).norm() / h0;
    const double m = std::max(d1, d2);
    double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min(100 * h0, h1);
  }

  // Returns the scaled error norm of a trial step of size h_.
  double try_step() {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double h = h_;
    k2_ = vector_field(y_ + h * (a21 * k1_), p_);
    k3_ = vector_field(y_ + h * (a31 * k1_ + a32 * k2_), p_);
    k4_ = vector_field(y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_), p_);
    k5_ = vector_field(y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_), p_);
    k6_ = vector_field(y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_), p_);
    ynew_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    k7_ = vector_field(ynew_, p_);

    const State err = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    double sum = 0;
    for (long i = 0; i < err.size(); ++i) {
      const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      const double q = err[i] / sc;
      sum += q * q;
    }
    return std::sqrt(sum / double(err.size()));
  }

  void accept() {
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0,
                            d7 = 69997945.0 / 29380423.0;
    const double h = h_;
    rc1_ = y_;
    rc2_ = ynew_ - y_;
    rc3_ = h * k1_ - rc2_;
    rc4_ = rc2_ - h * k7_ - rc3_;
    rc5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
    y_ = ynew_;
    k1_ = k7_;  // FSAL
    t_ += h;
    h_done_ = h;
  }

  ModelParams p_;
  IntegrateOptions opts_;
  double t_, h_ = 0, h_next_ = 0, h_done_ = 0;
  State y_, ynew_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  State rc1_, rc2_, rc3_, rc4_, rc5_;
};

}  // namespace detail

/// Integrates from x0 over [0, t_end]. With sample_dt > 0 the trajectory is
/// sampled on a uniform grid via dense output (t = 0 included); otherwise the
/// accepted steps themselves are stored.
inline Trajectory integrate(const State& x0, const ModelParams& p, double t_end,
                            const IntegrateOptions& opts = {}) {
  detail::check_state(x0, p);
  if (t_end <= 0) throw std::invalid_argument("integrate: t_end must be > 0");

  Trajectory traj;
  traj.params = p;
  detail::Dopri5 stepper(p, x0, 0.0, opts);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  double next_sample = opts.sample_dt;
  long steps = 0;
  while (stepper.t() < t_end) {
    stepper.limit_step_to(t_end);
    const double h = stepper.step();
    if (++steps > opts.max_steps) throw NumericalError("integrate: max step count exceeded");
    if (opts.sample_dt > 0) {
      const double t0 = stepper.t_prev();
      while (next_sample <= stepper.t() + 1e-14 && next_sample <= t_end + 1e-14) {
        const double theta = std::clamp((next_sample - t0) / h, 0.0, 1.0);
        traj.times.push_back(next_sample);
        traj.states.push_back(stepper.dense(theta));
        next_sample += opts.sample_dt;
      }
    } else {
      traj.times.push_back(stepper.t());
      traj.states.push_back(stepper.y());
    }
  }
  if (opts.sample_dt > 0 && (traj.times.empty() || traj.times.back() < t_end - 1e-12)) {
    traj.times.push_back(stepper.t());
    traj.states.push_back(stepper.y());
  }
  return traj;
}

/// Endpoint-only integration (burn-in helper).
inline State flow_endpoint(const State& x0, const ModelParams& p, double t_end,
                           const IntegrateOptions& opts = {}) {
  detail::check_state(x0, p);
  if (t_end <= 0) return x0;
  detail::Dopri5 stepper(p, x0, 0.0, opts);
  while (stepper.t() < t_end) {
    stepper.limit_step_to(t_end);
    stepper.step();
  }
  return stepper.y();
}

struct PeriodicOrbit {
  ModelParams params;
  double period = 0;
  std::vector<State> samples;  // one period, uniform in time, samples[0] on the section
  int wave_number = 0;
  SymmetrySignature signature;
};

enum class OrbitStatus { ok, not_periodic, no_crossings };

struct OrbitSearch {
  OrbitStatus status = OrbitStatus::not_periodic;
  std::optional<PeriodicOrbit> orbit;
  std::string message;
};

struct OrbitOptions {
  double burn_in = 500;
  double window = 200;       // recurrence observation window
  double match_tol = 1e-3;   // coarse recurrence match (scaled by state size)
  double closure_tol = 1e-6; // required |x(T) - x(0)| after refinement
  int max_newton = 25;
  int n_samples = 2048;
  double signature_tol = 1e-6;
  IntegrateOptions integ{};
};

/// Majority-voted dominant nonzero spatial Fourier mode of mean-removed
/// snapshots; 0 when all snapshots are spatially constant.
inline int wave_number_of(const std::vector<State>& samples) {
  if (samples.empty()) throw std::invalid_argument("wave_number_of: no samples");
  const long n = samples[0].size();
  if (n == 1) return 0;
  std::vector<int> votes(n / 2 + 1, 0);
  const size_t stride = std::max<size_t>(1, samples.size() / 128);
  bool any = false;
  for (size_t s = 0; s < samples.size(); s += stride) {
    const State& x = samples[s];
    const double mean = x.mean();
    double best = 0;
    int best_l = 0;
    for (int l = 1; l <= n / 2; ++l) {
      Complex c = 0;
      for (long j = 0; j < n; ++j)
        c += (x[j] - mean) * std::polar(1.0, -2.0 * std::numbers::pi * double(l) * double(j) / double(n));
      if (std::abs(c) > best) {
        best = std::abs(c);
        best_l = l;
      }
    }
    if (best > 1e-12 * std::max(1.0, std::abs(mean)) * double(n)) {
      ++votes[best_l];
      any = true;
    }
  }
  if (!any) return 0;
  return int(std::max_element(votes.begin() + 1, votes.end()) - votes.begin());
}

namespace detail {

// Block periodicity over a whole sample set: smallest divisor m of n such
// that every sample satisfies x_{j+m} = x_j within tol.
inline SymmetrySignature orbit_signature(const std::vector<State>& samples, double tol) {
  const long n = samples[0].size();
  for (long m = 1; m <= n; ++m) {
    if (n % m != 0) continue;
    double dev = 0;
    for (const State& x : samples)
      for (long j = 0; j < n && dev <= tol; ++j)
        dev = std::max(dev, std::abs(x[mod(j + m, n)] - x[j]));
    if (dev <= tol) return {static_cast<int>(m), samples[0].head(m)};
  }
  return {static_cast<int>(n), samples[0]};
}

// Integrates for `duration` collecting positive-direction crossings of the
// hyperplane {x : nrm . (x - origin) = 0}.
struct SectionCrossing {
  double t;
  State x;
};

inline std::vector<SectionCrossing> section_crossings(const State& x0, const ModelParams& p,
                                                      const State& origin, const State& nrm,
                                                      double duration,
                                                      const IntegrateOptions& opts) {
  std::vector<SectionCrossing> out;
  Dopri5 stepper(p, x0, 0.0, opts);
  double g_prev = nrm.dot(x0 - origin);
  while (stepper.t() < duration) {
    stepper.limit_step_to(duration);
    stepper.step();
    const double g_now = nrm.dot(stepper.y() - origin);
    if (g_prev < 0 && g_now >= 0) {  // positive-direction crossing inside this step
      double lo = 0, hi = 1;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (nrm.dot(stepper.dense(mid) - origin) < 0 ? lo : hi) = mid;
      }
      const double theta = 0.5 * (lo + hi);
      out.push_back({stepper.t_prev() + theta * (stepper.t() - stepper.t_prev()),
                     stepper.dense(theta)});
    }
    g_prev = g_now;
  }
  return out;
}

}  // namespace detail

/// Looks for a periodic orbit in the attractor reached from x0: burn-in,
/// recurrence detection on a Poincare section through the windowed mean
/// state, then single-shooting Newton refinement of (initial point, period).
inline OrbitSearch find_periodic_orbit(const State& x0, const ModelParams& p,
                                       const OrbitOptions& opts = {}) {
  detail::check_state(x0, p);
  OrbitSearch result;

  const State settled = flow_endpoint(x0, p, opts.burn_in, opts.integ);

  // Windowed mean defines the section origin; the flow direction at a point
  // on the attractor defines its normal.
  IntegrateOptions mean_opts = opts.integ;
  mean_opts.sample_dt = 0;
  const Trajectory probe = integrate(settled, p, opts.window, mean_opts);
  State mean = State::Zero(p.n);
  for (const State& s : probe.states) mean += s;
  mean /= double(probe.states.size());
  State nrm = vector_field(probe.states.back(), p);
  const double speed = nrm.norm();
  if (speed < 1e-8) {
    result.status = OrbitStatus::no_crossings;
    result.message = "flow speed vanishes; attractor is an equilibrium";
    return result;
  }
  nrm /= speed;

  const auto crossings =
      detail::section_crossings(probe.states.back(), p, mean, nrm, opts.window, opts.integ);
  if (crossings.size() < 2) {
    result.status = OrbitStatus::no_crossings;
    result.message = "section never crossed twice within the window";
    return result;
  }

  // First return: smallest k whose crossing comes back to the starting one.
  const double scale = std::max(1.0, crossings[0].x.lpNorm<Eigen::Infinity>());
  size_t k_ret = 0;
  for (size_t k = 1; k < crossings.size(); ++k) {
    if ((crossings[k].x - crossings[0].x).lpNorm<Eigen::Infinity>() <= opts.match_tol * scale) {
      k_ret = k;
      break;
    }
  }
  if (k_ret == 0) {
    result.status = OrbitStatus::not_periodic;
    result.message = "no recurrence within match tolerance";
    return result;
  }

  // Shooting refinement on (x, T): phi_T(x) - x = 0 with the section phase
  // condition nrm . (x - mean) = 0. Monodromy columns by forward differences.
  State xs = crossings[0].x;
  double T = crossings[k_ret].t - crossings[0].t;
  const long n = p.n;
  const auto flow_T = [&](const State& from, double duration) {
    return flow_endpoint(from, p, duration, opts.integ);
  };
  bool converged = false;
  for (int it = 0; it < opts.max_newton; ++it) {
    const State xT = flow_T(xs, T);
    Eigen::VectorXd G(n + 1);
    G.head(n) = xT - xs;
    G[n] = nrm.dot(xs - mean);
    if (G.head(n).lpNorm<Eigen::Infinity>() <= opts.closure_tol * 1e-2 &&
        std::abs(G[n]) <= 1e-10) {
      converged = true;
      break;
    }
    Matrix Jac(n + 1, n + 1);
    const double h = 1e-7 * (1.0 + xs.lpNorm<Eigen::Infinity>());
    for (long c = 0; c < n; ++c) {
      State xp = xs;
      xp[c] += h;
      Jac.col(c).head(n) = (flow_T(xp, T) - xT) / h;
      Jac(c, c) -= 1.0;
    }
    Jac.col(n).head(n) = vector_field(xT, p);
    Jac.row(n).head(n) = nrm.transpose();
    Jac(n, n) = 0.0;
    const Eigen::VectorXd d = Jac.householderQr().solve(-G);
    if (!d.allFinite()) break;
    xs += d.head(n);
    T += d[n];
    if (T <= 0) break;
  }
  if (!converged) {
    const State xT = flow_T(xs, T);
    if ((xT - xs).lpNorm<Eigen::Infinity>() > opts.closure_tol) {
      result.status = OrbitStatus::not_periodic;
      result.message = "shooting refinement did not converge";
      return result;
    }
  }

  PeriodicOrbit orbit;
  orbit.params = p;
  orbit.period = T;
  orbit.samples.reserve(opts.n_samples);
  IntegrateOptions sample_opts = opts.integ;
  sample_opts.sample_dt = T / double(opts.n_samples);
  const Trajectory loop = integrate(xs, p, T, sample_opts);
  for (int i = 0; i < opts.n_samples && i < long(loop.states.size()); ++i)
    orbit.samples.push_back(loop.states[i]);
  orbit.wave_number = wave_number_of(orbit.samples);
  orbit.signature = detail::orbit_signature(orbit.samples, opts.signature_tol);
  result.status = OrbitStatus::ok;
  result.orbit = std::move(orbit);
  return result;
}

struct OrbitRelation {
  bool identical = false;
  double phase_shift = 0;  // fraction of the period, in [0, 1)
  double distance = 0;     // two-sided max-min sample distance
};

/// Decides whether two sampled orbits trace the same closed curve (possibly
/// phase-shifted) or are disjoint. `tol` bounds the Hausdorff-type distance
/// for the identical verdict; the best time shift is refined below sample
/// resolution by golden-section search on interpolated samples.
inline OrbitRelation orbit_relation(const PeriodicOrbit& a, const PeriodicOrbit& b,
                                    double tol = 1e-4) {
  if (a.samples.empty() || b.samples.empty())
    throw std::invalid_argument("orbit_relation: empty orbit samples");
  const size_t M = a.samples.size();
  const size_t N = b.samples.size();

  // max over samples of the min distance to the other loop's piecewise-linear
  // interpolant; point-to-segment keeps the measure at curve resolution
  // instead of sample resolution
  auto one_sided = [](const std::vector<State>& from, const std::vector<State>& to) {
    double worst = 0;
    for (size_t qi = 0; qi < from.size(); qi += 2) {
      const State& q = from[qi];
      double best = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < to.size(); ++i) {
        const State& p0 = to[i];
        const State& p1 = to[(i + 1) % to.size()];
        const State seg = p1 - p0;
        const double len2 = seg.squaredNorm();
        double w = len2 > 0 ? (q - p0).dot(seg) / len2 : 0.0;
        w = std::clamp(w, 0.0, 1.0);
        best = std::min(best, (q - (p0 + w * seg)).norm());
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  OrbitRelation rel;
  rel.distance = std::max(one_sided(a.samples, b.samples), one_sided(b.samples, a.samples));
  const double scale = std::max(1.0, a.samples[0].lpNorm<Eigen::Infinity>());
  if (rel.distance > tol * scale) return rel;  // disjoint

  rel.identical = true;
  // coarse phase: offset of b that matches a best
  auto mismatch_at = [&](double offset_samples) {
    // compares a[i] against b interpolated at i + offset (indices mod N)
    double worst = 0;
    for (size_t i = 0; i < M; i += 4) {
      const double pos = std::fmod(double(i) * double(N) / double(M) + offset_samples, double(N));
      const size_t i0 = size_t(pos) % N;
      const size_t i1 = (i0 + 1) % N;
      const double w = pos - std::floor(pos);
      const State interp = (1.0 - w) * b.samples[i0] + w * b.samples[i1];
      worst = std::max(worst, (a.samples[i] - interp).lpNorm<Eigen::Infinity>());
    }
    return worst;
  };
  double best = std::numeric_limits<double>::infinity();
  double best_off = 0;
  for (size_t o = 0; o < N; ++o) {
    const double m = mismatch_at(double(o));
    if (m < best) {
      best = m;
      best_off = double(o);
    }
  }
  // golden-section refinement within one sample of the coarse optimum
  double lo = best_off - 1.0, hi = best_off + 1.0;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  double fc = mismatch_at(c), fd = mismatch_at(d);
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - gr * (hi - lo);
      fc = mismatch_at(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + gr * (hi - lo);
      fd = mismatch_at(d);
    }
  }
  const double off = 0.5 * (lo + hi);
  rel.phase_shift = std::fmod(off / double(N) + 1.0, 1.0);
  return rel;
}

/// Relation between an orbit and its own image under a cyclic shift by k.
inline OrbitRelation orbit_conjugacy(const PeriodicOrbit& P, long k, double tol = 1e-4) {
  PeriodicOrbit shifted = P;
  for (State& s : shifted.samples) s = shift(s, k);
  return orbit_relation(P, shifted, tol);
}

struct GcdCheck {
  int wave_number = 0;
  int predicted_m = 0;  // n / gcd(l, n) when gcd > 1, else n
  int observed_m = 0;
  bool agree = false;
};

/// Wave-number symmetry rule: an orbit with spatial wave number l such that
/// g = gcd(l, n) > 1 is predicted to consist of period-(n/g) blocks.
inline GcdCheck gcd_symmetry_check(const PeriodicOrbit& P) {
  GcdCheck c;
  c.wave_number = P.wave_number;
  const int n = P.params.n;
  const int g = P.wave_number > 0 ? std::gcd(P.wave_number, n) : 1;
  c.predicted_m = g > 1 ? n / g : n;
  c.observed_m = P.signature.m;
  c.agree = c.predicted_m == c.observed_m;
  return c;
}

struct ScanPoint {
  double F = 0;
  int m = 0;  // -1 marks blow-up at this grid value
};

struct ScanOptions {
  double burn_in = 500;
  double window = 20;
  int window_samples = 40;
  double signature_tol = 1e-6;
  double noise = 1e-6;  // warm-start perturbation, breaks invariant-subspace trapping
  std::uint64_t seed = 0;
  IntegrateOptions integ{};
};

/// Follows the stable attractor across the forcing grid (warm-starting each
/// value from the previous attractor state plus small noise) and records the
/// block-periodicity dimension m of the attractor at each F.
inline std::vector<ScanPoint> symmetry_scan(int n, const std::vector<double>& F_grid,
                                            const ScanOptions& opts = {}) {
  if (F_grid.empty()) throw std::invalid_argument("symmetry_scan: empty grid");
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto perturb = [&](const State& x, double amp) {
    State y = x;
    for (long j = 0; j < y.size(); ++j) y[j] += amp * unit(rng);
    return y;
  };

  std::vector<ScanPoint> out;
  out.reserve(F_grid.size());
  State warm = perturb(State::Constant(n, F_grid.front()), 0.1);
  for (double F : F_grid) {
    const ModelParams p{n, F};
    try {
      const State settled = flow_endpoint(perturb(warm, opts.noise), p, opts.burn_in, opts.integ);
      IntegrateOptions w = opts.integ;
      w.sample_dt = opts.window / double(opts.window_samples);
      const Trajectory t = integrate(settled, p, opts.window, w);
      out.push_back({F, detail::orbit_signature(t.states, opts.signature_tol).m});
      warm = t.states.back();
    } catch (const NumericalError&) {
      out.push_back({F, -1});
      warm = perturb(State::Constant(n, F), 0.1);  // fresh start after blow-up
    }
  }
  return out;
}

}  // namespace l96
