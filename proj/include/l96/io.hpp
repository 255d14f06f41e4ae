#pragma once

// JSON and CSV serialization for branches, cascade reports, trajectories,
// periodic orbits, and spectrum tables. JSON uses insertion-ordered keys so
// output files are byte-stable; CSV uses '.' decimals and %.17g round-trip
// formatting.

#include "l96/continuation.hpp"
#include "l96/equilibria.hpp"
#include "l96/flow.hpp"
#include "l96/spectral.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>

namespace l96 {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json state_to_json(const State& x) {
  Json arr = Json::array();
  for (long i = 0; i < x.size(); ++i) arr.push_back(x[i]);
  return arr;
}

inline Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

}  // namespace detail

inline const char* to_string(BifurcationKind k) {
  switch (k) {
    case BifurcationKind::pitchfork: return "pitchfork";
    case BifurcationKind::hopf: return "hopf";
    case BifurcationKind::fold: return "fold";
  }
  return "unknown";
}

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::symmetric: return "symmetric";
    case Parity::antisymmetric: return "antisymmetric";
    case Parity::unknown: return "unknown";
  }
  return "unknown";
}

inline Json to_json(const BifurcationPoint& bp) {
  Json j;
  j["kind"] = to_string(bp.kind);
  j["F"] = bp.F;
  j["eigenvalue"] = detail::complex_to_json(bp.eigenvalue);
  j["parity"] = to_string(bp.parity);
  j["x"] = detail::state_to_json(bp.x);
  return j;
}

inline Json to_json(const Branch& b) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["label"] = {{"l", b.label.level}, {"j", b.label.conjugacy}};
  Json samples = Json::array();
  for (const BranchPoint& pt : b.points) {
    Json row = Json::array({pt.F});
    for (long i = 0; i < pt.x.size(); ++i) row.push_back(pt.x[i]);
    samples.push_back(std::move(row));
  }
  j["samples"] = std::move(samples);
  Json bifs = Json::array();
  for (const BifurcationPoint& bp : b.bifurcations) bifs.push_back(to_json(bp));
  j["bifurcations"] = std::move(bifs);
  return j;
}

inline Json to_json(const CascadeReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["n"] = r.n;
  j["q"] = r.q;
  j["p"] = r.p;
  j["floor"] = r.floor;
  j["pf_values"] = r.pf_values;
  j["ratios"] = r.ratios;
  j["equilibria_count"] = r.equilibria_count;
  Json branches = Json::array();
  for (const Branch& b : r.branches) {
    Json bj;
    bj["label"] = {{"l", b.label.level}, {"j", b.label.conjugacy}};
    bj["F_start"] = b.F_start();
    bj["F_end"] = b.F_end();
    bj["n_points"] = b.points.size();
    Json bifs = Json::array();
    for (const BifurcationPoint& bp : b.bifurcations) {
      Json e;
      e["kind"] = to_string(bp.kind);
      e["F"] = bp.F;
      e["eigenvalue"] = detail::complex_to_json(bp.eigenvalue);
      e["parity"] = to_string(bp.parity);
      bifs.push_back(std::move(e));
    }
    bj["bifurcations"] = std::move(bifs);
    branches.push_back(std::move(bj));
  }
  j["branches"] = std::move(branches);
  j["failures"] = r.failures;
  return j;
}

inline Json to_json(const Trajectory& t) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["n"] = t.params.n;
  j["F"] = t.params.F;
  Json samples = Json::array();
  for (size_t i = 0; i < t.times.size(); ++i) {
    Json row = Json::array({t.times[i]});
    for (long c = 0; c < t.states[i].size(); ++c) row.push_back(t.states[i][c]);
    samples.push_back(std::move(row));
  }
  j["samples"] = std::move(samples);
  return j;
}

inline Json to_json(const PeriodicOrbit& o) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["n"] = o.params.n;
  j["F"] = o.params.F;
  j["period"] = o.period;
  j["wave_number"] = o.wave_number;
  j["symmetry_m"] = o.signature.m;
  Json samples = Json::array();
  for (const State& s : o.samples) samples.push_back(detail::state_to_json(s));
  j["samples"] = std::move(samples);
  return j;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_csv_branch(std::ostream& os, const Branch& b) {
  const long n = b.points.empty() ? 0 : b.points.front().x.size();
  os << "F";
  for (long i = 0; i < n; ++i) os << ",x" << i;
  os << "\n";
  for (const BranchPoint& pt : b.points) {
    os << detail::fmt_double(pt.F);
    for (long i = 0; i < n; ++i) os << ',' << detail::fmt_double(pt.x[i]);
    os << "\n";
  }
}

inline void write_csv_trajectory(std::ostream& os, const Trajectory& t) {
  os << "t";
  for (int i = 0; i < t.params.n; ++i) os << ",x" << i;
  os << "\n";
  for (size_t r = 0; r < t.times.size(); ++r) {
    os << detail::fmt_double(t.times[r]);
    for (long i = 0; i < t.states[r].size(); ++i) os << ',' << detail::fmt_double(t.states[r][i]);
    os << "\n";
  }
}

inline void write_csv_orbit(std::ostream& os, const PeriodicOrbit& o) {
  os << "t";
  for (int i = 0; i < o.params.n; ++i) os << ",x" << i;
  os << "\n";
  const double dt = o.period / double(o.samples.size());
  for (size_t r = 0; r < o.samples.size(); ++r) {
    os << detail::fmt_double(double(r) * dt);
    for (long i = 0; i < o.samples[r].size(); ++i)
      os << ',' << detail::fmt_double(o.samples[r][i]);
    os << "\n";
  }
}

inline void write_csv_scan(std::ostream& os, const std::vector<ScanPoint>& scan) {
  os << "F,m\n";
  for (const ScanPoint& pt : scan) os << detail::fmt_double(pt.F) << ',' << pt.m << "\n";
}

inline void write_csv_spectrum_table(std::ostream& os, const Spectrum& closed,
                                     const Spectrum& numerical) {
  os << "j,re_closed,im_closed,re_numerical,im_numerical\n";
  for (long j = 0; j < closed.values.size(); ++j) {
    os << j << ',' << detail::fmt_double(closed.values[j].real()) << ','
       << detail::fmt_double(closed.values[j].imag()) << ','
       << detail::fmt_double(numerical.values[j].real()) << ','
       << detail::fmt_double(numerical.values[j].imag()) << "\n";
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  os << content;
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace l96
