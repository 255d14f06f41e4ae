#include "l96/flow.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace l96;

namespace {

State noisy(const State& x, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-amp, amp);
  State y = x;
  for (long i = 0; i < y.size(); ++i) y[i] += u(rng);
  return y;
}

}  // namespace

TEST_CASE("equilibria stay put under the flow") {
  const ModelParams p{6, -0.4};
  IntegrateOptions opts;
  opts.sample_dt = 1.0;
  const Trajectory t = integrate(trivial_equilibrium(p), p, 10.0, opts);
  for (const State& s : t.states)
    REQUIRE((s - trivial_equilibrium(p)).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("integrator against the exact n=3 solution") {
  // for n=3 the quadratic terms cancel and x(t) = F + (x0 - F) exp(-t)
  std::mt19937_64 rng(53);
  const ModelParams p{3, 1.9};
  const State x0 = noisy(trivial_equilibrium(p), 2.0, rng);
  IntegrateOptions opts;
  opts.sample_dt = 0.25;
  const Trajectory t = integrate(x0, p, 5.0, opts);
  for (size_t i = 0; i < t.times.size(); ++i) {
    const State exact = State::Constant(3, p.F) + (x0.array() - p.F).matrix() * std::exp(-t.times[i]);
    REQUIRE((t.states[i] - exact).lpNorm<Eigen::Infinity>() <= 1e-9);
  }
}

TEST_CASE("pre-bifurcation transients settle on the trivial equilibrium") {
  std::mt19937_64 rng(59);
  const ModelParams p{5, -0.7};
  const State x0 = noisy(trivial_equilibrium(p), 0.2, rng);
  const State final = flow_endpoint(x0, p, 200.0);
  REQUIRE((final - trivial_equilibrium(p)).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("flow commutes with the shift") {
  std::mt19937_64 rng(61);
  const ModelParams p{7, 3.0};
  const State x0 = noisy(trivial_equilibrium(p), 0.5, rng);
  IntegrateOptions opts;
  opts.sample_dt = 0.5;
  const Trajectory a = integrate(shift(x0, 2), p, 5.0, opts);
  const Trajectory b = integrate(x0, p, 5.0, opts);
  REQUIRE(a.times.size() == b.times.size());
  for (size_t i = 0; i < a.times.size(); ++i)
    REQUIRE((a.states[i] - shift(b.states[i], 2)).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("flow commutes with block lifting") {
  std::mt19937_64 rng(67);
  const ModelParams base{4, -3.8};
  const State x0 = noisy(trivial_equilibrium(base), 0.5, rng);
  IntegrateOptions opts;
  opts.sample_dt = 0.5;
  const Trajectory small = integrate(x0, base, 4.0, opts);
  const Trajectory big = integrate(lift(x0, 2), {8, base.F}, 4.0, opts);
  REQUIRE(small.times.size() == big.times.size());
  for (size_t i = 0; i < small.times.size(); ++i)
    REQUIRE((big.states[i] - lift(small.states[i], 2)).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("blow-up is reported") {
  // solutions from finite states stay bounded (the quadratic terms conserve
  // energy), so the guard is exercised by starting beyond the bound
  const ModelParams p{4, 0.0};
  REQUIRE_THROWS_AS(flow_endpoint(State::Constant(4, 2e8), p, 10.0), NumericalError);
}

TEST_CASE("stable equilibrium regime yields no periodic orbit") {
  std::mt19937_64 rng(71);
  const ModelParams p{5, -0.6};  // above the n=5 Hopf value
  const State x0 = noisy(trivial_equilibrium(p), 0.1, rng);
  OrbitOptions opts;
  opts.burn_in = 100;
  opts.window = 50;
  const OrbitSearch found = find_periodic_orbit(x0, p, opts);
  REQUIRE(found.status != OrbitStatus::ok);
}

TEST_CASE("post-Hopf orbit for odd n has full cyclic conjugacy") {
  std::mt19937_64 rng(73);
  const ModelParams p{5, -1.2};  // below the n=5 Hopf at about -0.894
  const State x0 = noisy(trivial_equilibrium(p), 0.1, rng);
  const OrbitSearch found = find_periodic_orbit(x0, p);
  REQUIRE(found.status == OrbitStatus::ok);
  const PeriodicOrbit& orbit = *found.orbit;
  REQUIRE(orbit.period > 0);

  // closed to the contract tolerance
  const State x_end = flow_endpoint(orbit.samples[0], p, orbit.period);
  REQUIRE((x_end - orbit.samples[0]).lpNorm<Eigen::Infinity>() <= 1e-6);

  // the shifted orbit is the same curve, phase-shifted by a multiple of T/5
  const OrbitRelation rel = orbit_conjugacy(orbit, 1);
  REQUIRE(rel.identical);
  const double shifts = rel.phase_shift * 5.0;
  REQUIRE(std::abs(shifts - std::round(shifts)) <= 5 * 1e-4);
}

TEST_CASE("two conjugate attractors for n=6 past the first-branch Hopf") {
  const ModelParams p{6, -3.6};
  std::mt19937_64 rng(79);
  const auto [xi0, xi1] = first_pitchfork_branch(p);
  const OrbitSearch a = find_periodic_orbit(noisy(xi0, 0.01, rng), p);
  const OrbitSearch b = find_periodic_orbit(noisy(xi1, 0.01, rng), p);
  REQUIRE(a.status == OrbitStatus::ok);
  REQUIRE(b.status == OrbitStatus::ok);

  // equal periods, disjoint curves, mapped onto each other by one shift
  REQUIRE(std::abs(a.orbit->period - b.orbit->period) <= 1e-6 * a.orbit->period);
  const OrbitRelation self1 = orbit_conjugacy(*a.orbit, 1);
  CHECK_FALSE(self1.identical);
  PeriodicOrbit b_shifted = *b.orbit;
  for (State& s : b_shifted.samples) s = shift(s, 1);
  const OrbitRelation cross = orbit_relation(*a.orbit, b_shifted);
  CHECK(cross.identical);
  const OrbitRelation self2 = orbit_conjugacy(*a.orbit, 2);
  CHECK(self2.identical);
}

TEST_CASE("wave number extraction") {
  SECTION("single spatial mode") {
    const int n = 12;
    std::vector<State> samples;
    for (int t = 0; t < 8; ++t) {
      State x(n);
      for (int j = 0; j < n; ++j)
        x[j] = 0.3 + std::cos(2 * std::numbers::pi * (2.0 * j / n + 0.01 * t));
      samples.push_back(x);
    }
    CHECK(wave_number_of(samples) == 2);
  }
  SECTION("spatially constant samples give zero") {
    std::vector<State> samples{State::Constant(8, 1.3), State::Constant(8, -0.2)};
    CHECK(wave_number_of(samples) == 0);
  }
  SECTION("invariant under shift and time translation") {
    std::mt19937_64 rng(83);
    const ModelParams p{5, -1.2};
    const OrbitSearch found = find_periodic_orbit(noisy(trivial_equilibrium(p), 0.1, rng), p);
    REQUIRE(found.status == OrbitStatus::ok);
    const int w = found.orbit->wave_number;
    std::vector<State> shifted, rotated;
    const auto& s = found.orbit->samples;
    for (const State& x : s) shifted.push_back(shift(x, 2));
    for (size_t i = 0; i < s.size(); ++i) rotated.push_back(s[(i + s.size() / 3) % s.size()]);
    CHECK(wave_number_of(shifted) == w);
    CHECK(wave_number_of(rotated) == w);
  }
}

TEST_CASE("wave-number symmetry prediction") {
  PeriodicOrbit o;
  o.params = {8, 1.2};
  o.wave_number = 2;
  o.signature.m = 4;
  CHECK(gcd_symmetry_check(o).predicted_m == 4);
  CHECK(gcd_symmetry_check(o).agree);

  o.params = {28, 1.0};
  o.wave_number = 6;
  o.signature.m = 14;
  CHECK(gcd_symmetry_check(o).predicted_m == 14);

  o.params = {7, 1.0};
  o.wave_number = 3;  // gcd(3,7) = 1: no predicted symmetry
  o.signature.m = 7;
  CHECK(gcd_symmetry_check(o).predicted_m == 7);
}

TEST_CASE("lifted orbits keep their period") {
  std::mt19937_64 rng(89);
  const ModelParams p4{4, -4.0};
  // reach one of the four post-Hopf attractors from a generic state
  const OrbitSearch small = find_periodic_orbit(noisy(trivial_equilibrium(p4), 0.5, rng), p4);
  REQUIRE(small.status == OrbitStatus::ok);

  const ModelParams p8{8, -4.0};
  const OrbitSearch big = find_periodic_orbit(lift(small.orbit->samples[0], 2), p8);
  REQUIRE(big.status == OrbitStatus::ok);
  REQUIRE(std::abs(big.orbit->period - small.orbit->period) <= 1e-6 * small.orbit->period);
  CHECK(big.orbit->signature.m <= 4);
}

TEST_CASE("symmetry scan in the stable trivial regime") {
  std::vector<double> grid;
  for (int i = 0; i < 5; ++i) grid.push_back(-0.45 + 0.1 * i);
  ScanOptions opts;
  opts.burn_in = 120;
  opts.seed = 7;
  const auto scan = symmetry_scan(7, grid, opts);
  REQUIRE(scan.size() == grid.size());
  for (const ScanPoint& pt : scan) CHECK(pt.m == 1);
}
