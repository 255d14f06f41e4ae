// Command-line front end: spectra, branch continuation, cascade scans, time
// integration, periodic-orbit extraction, and attractor symmetry scans, with
// machine-readable JSON/CSV output.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure (partial output
// is still written where possible).

#include "l96/l96.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

namespace {

using namespace l96;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct OutputSink {
  std::string path;    // empty: stdout
  std::string format;  // "json" or "csv"

  void emit(const std::string& content) const {
    if (path.empty())
      std::cout << content;
    else
      write_file(path, content);
  }
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

State parse_state(const std::string& csv, int n) {
  State x(n);
  std::istringstream in(csv);
  std::string tok;
  int i = 0;
  while (std::getline(in, tok, ',')) {
    if (i >= n) throw CLI::ValidationError("--x0", "too many coordinates");
    x[i++] = std::stod(tok);
  }
  if (i != n) throw CLI::ValidationError("--x0", "expected " + std::to_string(n) + " coordinates");
  return x;
}

State noisy_start(int n, double F, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  State x = State::Constant(n, F);
  for (int i = 0; i < n; ++i) x[i] += amp * u(rng);
  return x;
}

int cmd_eigen(int n, double F, const OutputSink& out) {
  const ModelParams p{n, F};
  const Spectrum closed = trivial_spectrum(p);
  const Spectrum numer = numerical_spectrum(jacobian(trivial_equilibrium(p), p), false);

  // closed form is ordered by mode; match each numerical value to its nearest
  double max_disc = 0;
  std::vector<bool> used(n, false);
  Eigen::VectorXcd matched(n);
  for (int j = 0; j < n; ++j) {
    int best = -1;
    double bd = 1e300;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double d = std::abs(closed.values[j] - numer.values[i]);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    used[best] = true;
    matched[j] = numer.values[best];
    max_disc = std::max(max_disc, bd);
  }

  std::printf("# trivial-equilibrium spectrum, n=%d F=%.17g\n", n, F);
  std::printf("%4s %23s %23s %23s %23s\n", "j", "re(closed)", "im(closed)", "re(numerical)",
              "im(numerical)");
  for (int j = 0; j < n; ++j)
    std::printf("%4d %23.15e %23.15e %23.15e %23.15e\n", j, closed.values[j].real(),
                closed.values[j].imag(), matched[j].real(), matched[j].imag());
  std::printf("# max discrepancy %.3e\n", max_disc);

  if (!out.path.empty() || out.format == "json") {
    if (out.format == "csv") {
      Spectrum m;
      m.values = matched;
      std::ostringstream os;
      write_csv_spectrum_table(os, closed, m);
      out.emit(os.str());
    } else {
      Json j;
      j["schema_version"] = kSchemaVersion;
      j["command"] = "eigen";
      j["n"] = n;
      j["F"] = F;
      Json jc = Json::array(), jn = Json::array();
      for (int i = 0; i < n; ++i) {
        jc.push_back({closed.values[i].real(), closed.values[i].imag()});
        jn.push_back({matched[i].real(), matched[i].imag()});
      }
      j["closed"] = std::move(jc);
      j["numerical"] = std::move(jn);
      j["max_discrepancy"] = max_disc;
      if (!out.path.empty()) out.emit(dump(j));
    }
  }
  return kExitOk;
}

int cmd_continue(int n, double F_from, double F_to, const std::string& start, double tol,
                 const OutputSink& out) {
  ContinuationOptions opts;
  opts.newton_tol = tol;
  Equilibrium seed;
  if (start == "trivial") {
    seed = newton_solve(trivial_equilibrium({n, F_from}), {n, F_from});
    seed.label = BranchLabel{0, 0};
  } else {  // pf1
    const auto [xi0, xi1] = first_pitchfork_branch({n, F_from});
    seed = newton_solve(xi0, {n, F_from});
    seed.label = BranchLabel{1, 0};
  }
  const Branch branch = continue_branch(seed, F_to, opts);

  std::printf("branch l=%d j=%d: %zu samples, F %.17g -> %.17g\n", branch.label.level,
              branch.label.conjugacy, branch.points.size(), branch.F_start(), branch.F_end());
  for (const BifurcationPoint& bp : branch.bifurcations)
    std::printf("  %-9s F=%.9f  eigenvalue=(%.3e, %.3e)  parity=%s\n", to_string(bp.kind), bp.F,
                bp.eigenvalue.real(), bp.eigenvalue.imag(), to_string(bp.parity));

  if (out.format == "csv") {
    std::ostringstream os;
    write_csv_branch(os, branch);
    out.emit(os.str());
  } else if (!out.path.empty()) {
    out.emit(dump(to_json(branch)));
  }
  return kExitOk;
}

int cmd_cascade(int n, double floor, const OutputSink& out) {
  CascadeReport report;
  int code = kExitOk;
  try {
    report = cascade_scan(n, floor);
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "cascade failed: %s\n", err.what());
    return kExitNumerical;
  }
  if (!report.failures.empty()) code = kExitNumerical;

  std::printf("n=%d (q=%d, p=%d): %zu pitchfork%s, %ld equilibri%s\n", n, report.q, report.p,
              report.pf_values.size(), report.pf_values.size() == 1 ? "" : "s",
              report.equilibria_count, report.equilibria_count == 1 ? "um" : "a");
  for (size_t l = 0; l < report.pf_values.size(); ++l)
    std::printf("  PF_%zu  F = %.9f\n", l + 1, report.pf_values[l]);
  for (size_t i = 0; i < report.ratios.size(); ++i)
    std::printf("  r_%zu   = %.6f\n", i + 3, report.ratios[i]);
  for (const std::string& f : report.failures) std::printf("  failure: %s\n", f.c_str());

  if (!out.path.empty()) out.emit(dump(to_json(report)));
  return code;
}

int cmd_simulate(int n, double F, double t_end, const std::string& x0_csv, double sample_dt,
                 double rtol, std::uint64_t seed, const OutputSink& out) {
  const ModelParams p{n, F};
  const State x0 = x0_csv.empty() ? noisy_start(n, F, 0.01, seed) : parse_state(x0_csv, n);
  IntegrateOptions opts;
  opts.rtol = rtol;
  opts.sample_dt = sample_dt;
  Trajectory traj;
  try {
    traj = integrate(x0, p, t_end, opts);
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "integration failed: %s\n", err.what());
    return kExitNumerical;
  }
  std::printf("simulated n=%d F=%.17g to t=%.17g (%zu samples)\n", n, F, t_end,
              traj.times.size());
  if (out.format == "csv") {
    std::ostringstream os;
    write_csv_trajectory(os, traj);
    out.emit(os.str());
  } else if (!out.path.empty()) {
    out.emit(dump(to_json(traj)));
  }
  return kExitOk;
}

int cmd_orbit(int n, double F, const std::string& x0_csv, double burn_in, double window,
              std::uint64_t seed, const OutputSink& out) {
  const ModelParams p{n, F};
  const State x0 = x0_csv.empty() ? noisy_start(n, F, 0.1, seed) : parse_state(x0_csv, n);
  OrbitOptions opts;
  opts.burn_in = burn_in;
  opts.window = window;
  OrbitSearch found;
  try {
    found = find_periodic_orbit(x0, p, opts);
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "orbit search failed: %s\n", err.what());
    return kExitNumerical;
  }

  if (found.status != OrbitStatus::ok) {
    std::printf("no periodic orbit: %s\n", found.message.c_str());
    if (!out.path.empty()) {
      Json j;
      j["schema_version"] = kSchemaVersion;
      j["command"] = "orbit";
      j["n"] = n;
      j["F"] = F;
      j["status"] = found.status == OrbitStatus::no_crossings ? "no_crossings" : "not_periodic";
      j["message"] = found.message;
      out.emit(dump(j));
    }
    return kExitOk;
  }

  const PeriodicOrbit& orbit = *found.orbit;
  const GcdCheck gc = gcd_symmetry_check(orbit);
  std::printf("periodic orbit: period %.9f, wave number %d, symmetry m=%d "
              "(gcd rule predicts m=%d)\n",
              orbit.period, orbit.wave_number, orbit.signature.m, gc.predicted_m);
  if (out.format == "csv") {
    std::ostringstream os;
    write_csv_orbit(os, orbit);
    out.emit(os.str());
  } else if (!out.path.empty()) {
    Json j = to_json(orbit);
    j["status"] = "ok";
    out.emit(dump(j));
  }
  return kExitOk;
}

int cmd_scan_symmetry(int n, double F_from, double F_to, int steps, double burn_in,
                      std::uint64_t seed, double tol, const OutputSink& out) {
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i)
    grid[i] = F_from + (F_to - F_from) * double(i) / double(steps - 1);
  ScanOptions opts;
  opts.seed = seed;
  opts.burn_in = burn_in;
  opts.signature_tol = tol;
  const auto scan = symmetry_scan(n, grid, opts);

  std::ostringstream os;
  write_csv_scan(os, scan);
  out.emit(os.str());
  bool blew_up = false;
  for (const ScanPoint& pt : scan) blew_up |= pt.m < 0;
  return blew_up ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry and bifurcation toolkit for the monoscale Lorenz-96 model"};
  app.require_subcommand(1);

  int n = 4;
  double F = 0.0, F_from = 0.0, F_to = -1.0, floor = -10.0;
  double t_end = 100.0, sample_dt = 0.1, burn_in = 500.0, window = 200.0;
  double tol = 1e-12, rtol = 1e-9, sig_tol = 1e-6;
  int steps = 21;
  std::uint64_t seed = 0;
  std::string out_path, format = "json", x0_csv, start = "trivial";

  const auto add_output = [&](CLI::App* cmd) {
    cmd->add_option("--out", out_path, "output file (default: stdout summary only)");
    cmd->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* eigen = app.add_subcommand("eigen", "closed-form vs numerical spectrum at (F,...,F)");
  eigen->add_option("--n", n, "dimension")->required();
  eigen->add_option("--f", F, "forcing")->required();
  add_output(eigen);

  CLI::App* cont = app.add_subcommand("continue", "trace an equilibrium branch in F");
  cont->add_option("--n", n, "dimension")->required();
  cont->add_option("--f", F_from, "starting forcing");
  cont->add_option("--f-to", F_to, "target forcing")->required();
  cont->add_option("--start", start, "seed branch")->check(CLI::IsMember({"trivial", "pf1"}));
  cont->add_option("--tol", tol, "corrector residual tolerance");
  add_output(cont);

  CLI::App* casc = app.add_subcommand("cascade", "full pitchfork-cascade scan from F=0");
  casc->add_option("--n", n, "dimension")->required();
  casc->add_option("--floor", floor, "lowest forcing to continue to");
  add_output(casc);

  CLI::App* sim = app.add_subcommand("simulate", "integrate an initial state");
  sim->add_option("--n", n, "dimension")->required();
  sim->add_option("--f", F, "forcing")->required();
  sim->add_option("--t-end", t_end, "integration time");
  sim->add_option("--x0", x0_csv, "comma-separated initial state");
  sim->add_option("--sample-dt", sample_dt, "output sampling interval");
  sim->add_option("--tol", rtol, "relative integration tolerance");
  sim->add_option("--seed", seed, "seed for the default noisy start");
  add_output(sim);

  CLI::App* orb = app.add_subcommand("orbit", "find a periodic orbit on the attractor");
  orb->add_option("--n", n, "dimension")->required();
  orb->add_option("--f", F, "forcing")->required();
  orb->add_option("--x0", x0_csv, "comma-separated initial state");
  orb->add_option("--burn-in", burn_in, "transient to discard (time units)");
  orb->add_option("--window", window, "recurrence window (time units)");
  orb->add_option("--seed", seed, "seed for the default noisy start");
  add_output(orb);

  CLI::App* scan = app.add_subcommand("scan-symmetry", "attractor symmetry across a forcing grid");
  scan->add_option("--n", n, "dimension")->required();
  scan->add_option("--f-from", F_from, "first forcing value")->required();
  scan->add_option("--f-to", F_to, "last forcing value")->required();
  scan->add_option("--steps", steps, "grid size (>= 2)")->check(CLI::Range(2, 1000000));
  scan->add_option("--burn-in", burn_in, "transient per grid point");
  scan->add_option("--seed", seed, "noise seed");
  scan->add_option("--tol", sig_tol, "block-repetition tolerance");
  add_output(scan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  OutputSink out{out_path, format};
  try {
    if (app.got_subcommand(eigen)) return cmd_eigen(n, F, out);
    if (app.got_subcommand(cont)) return cmd_continue(n, F_from, F_to, start, tol, out);
    if (app.got_subcommand(casc)) return cmd_cascade(n, floor, out);
    if (app.got_subcommand(sim))
      return cmd_simulate(n, F, t_end, x0_csv, sample_dt, rtol, seed, out);
    if (app.got_subcommand(orb)) return cmd_orbit(n, F, x0_csv, burn_in, window, seed, out);
    if (app.got_subcommand(scan))
      return cmd_scan_symmetry(n, F_from, F_to, steps, burn_in, seed, sig_tol, out);
  } catch (const std::invalid_argument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitNumerical;
  }
  return kExitUsage;
}
