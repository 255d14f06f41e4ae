#include "l96/equilibria.hpp"

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

TEST_CASE("newton keeps an exact root fixed") {
  for (int n : {2, 5, 9}) {
    const ModelParams p{n, -1.7};
    const Equilibrium eq = newton_solve(trivial_equilibrium(p), p);
    REQUIRE((eq.x - trivial_equilibrium(p)).lpNorm<Eigen::Infinity>() <= 1e-13);
    REQUIRE(vector_field(eq.x, p).lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE(eq.signature.m == 1);
  }
}

TEST_CASE("newton recovers the first-pitchfork branch from a perturbed start") {
  std::mt19937_64 rng(3);
  const ModelParams p{6, -2.0};
  const auto [xi0, xi1] = first_pitchfork_branch(p);
  const Equilibrium eq = newton_solve(noisy(xi0, 1e-3, rng), p);
  REQUIRE((eq.x - xi0).lpNorm<Eigen::Infinity>() <= 1e-10);
  REQUIRE(vector_field(eq.x, p).lpNorm<Eigen::Infinity>() <= 1e-12);
  REQUIRE(eq.signature.m == 2);
}

TEST_CASE("newton residual contract holds for random converged solves") {
  std::mt19937_64 rng(17);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + int(rng() % 7);
    const double F = -3.0 + 0.15 * double(rng() % 40);
    const ModelParams p{n, F};
    try {
      const Equilibrium eq = newton_solve(noisy(trivial_equilibrium(p), 0.5, rng), p);
      REQUIRE(vector_field(eq.x, p).lpNorm<Eigen::Infinity>() <= 1e-12);
      ++solved;
    } catch (const NumericalError&) {
      // far starts may legitimately fail; the contract constrains successes
    }
  }
  REQUIRE(solved > 10);
}

TEST_CASE("newton signals non-convergence") {
  const ModelParams p{4, 2.0};
  NewtonOptions opts;
  opts.max_iter = 2;
  State far(4);
  far << 1e4, -2e4, 3e4, -4e4;
  REQUIRE_THROWS_AS(newton_solve(far, p, opts), NumericalError);
}

TEST_CASE("stability classification") {
  SECTION("trivial equilibrium at F=0 is stable with all parts -1") {
    const ModelParams p{5, 0.0};
    const Equilibrium eq = newton_solve(trivial_equilibrium(p), p);
    const StabilityReport r = stability(eq);
    CHECK(r.stable);
    CHECK(eq.stable);
    CHECK(r.max_real_part == Catch::Approx(-1.0).margin(1e-12));
    CHECK(r.unstable_real == 0);
    CHECK(r.unstable_pairs == 0);
  }
  SECTION("one unstable direction past the first pitchfork, n=2") {
    const ModelParams p{2, -1.0};
    const Equilibrium eq = newton_solve(trivial_equilibrium(p), p);
    const StabilityReport r = stability(eq);
    CHECK_FALSE(r.stable);
    CHECK(r.unstable_real == 1);
    CHECK(r.max_real_part == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("first branch unstable past the second pitchfork, n=4") {
    const ModelParams p{4, -3.1};
    const auto [xi0, xi1] = first_pitchfork_branch(p);
    const Equilibrium eq = newton_solve(xi0, p);
    const StabilityReport r = stability(eq);
    CHECK_FALSE(r.stable);
    CHECK(r.unstable_real >= 1);
    // the crossing eigenvalue from the closed form
    const double expected = 0.5 * (-3.0 + std::sqrt(-3.0 - 4.0 * p.F));
    CHECK(r.max_real_part == Catch::Approx(expected).margin(1e-10));
  }
}

TEST_CASE("group orbit enumeration") {
  SECTION("full isotropy: orbit of the trivial equilibrium is a single point") {
    const ModelParams p{6, -0.3};
    const Equilibrium eq = newton_solve(trivial_equilibrium(p), p);
    CHECK(group_orbit(eq).size() == 1);
  }
  SECTION("first-pitchfork pair") {
    const ModelParams p{6, -2.0};
    const auto [xi0, xi1] = first_pitchfork_branch(p);
    const Equilibrium eq = newton_solve(xi0, p);
    const auto orbit = group_orbit(eq);
    REQUIRE(orbit.size() == 2);
    CHECK((orbit[1].x - xi1).lpNorm<Eigen::Infinity>() <= 1e-10);
    for (const Equilibrium& member : orbit) {
      REQUIRE(vector_field(member.x, p).lpNorm<Eigen::Infinity>() <= 1e-12);
      // conjugates share the spectrum (copied; verify against a fresh solve)
      const Spectrum s = numerical_spectrum(jacobian(member.x, p), false);
      double worst = 0;
      for (long i = 0; i < s.values.size(); ++i) {
        double best = 1e300;
        for (long j = 0; j < member.spectrum.values.size(); ++j)
          best = std::min(best, std::abs(s.values[i] - member.spectrum.values[j]));
        worst = std::max(worst, best);
      }
      REQUIRE(worst <= 1e-10);
    }
  }
  SECTION("conjugacy closure: shifting by the block size reproduces the point") {
    const ModelParams p{8, -1.4};
    const auto [xi0, xi1] = first_pitchfork_branch(p);
    const Equilibrium eq = newton_solve(xi0, p);
    REQUIRE(eq.signature.m == 2);
    for (int k = 1; k <= 4; ++k)
      CHECK((shift(eq.x, 2 * k) - eq.x).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("lifted starts converge to lifted solutions") {
  std::mt19937_64 rng(29);
  const ModelParams base{4, -2.0};
  const auto [xi0, xi1] = first_pitchfork_branch(base);
  const Equilibrium eq4 = newton_solve(noisy(xi0, 1e-4, rng), base);

  const ModelParams lifted{8, -2.0};
  const Equilibrium eq8 = newton_solve(lift(noisy(xi0, 1e-4, rng), 2), lifted);
  REQUIRE((eq8.x - lift(eq4.x, 2)).lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(eq8.signature.m == 2);
}
