#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "eastwalk/lattice.hpp"
#include "eastwalk/version.hpp"

namespace eastwalk {

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One output record.  param1..param3 carry command-specific grid coordinates
// (offset x, times t/s, site y); unused slots stay zero.
struct CsvRow {
  std::string command;
  std::string kind;
  double rho = 0.0;
  double epsilon = 0.0;
  int L = 0;
  std::string topology;
  double horizon = 0.0;
  int replicas = 0;
  uint64_t seed = 0;
  double param1 = 0.0, param2 = 0.0, param3 = 0.0;
  double value = 0.0, se = 0.0, ci_lo = 0.0, ci_hi = 0.0;
  int n_batches = 0;
  double runtime_s = 0.0;
  std::string version = kVersion;
};

inline const char* csv_header() {
  return "command,kind,rho,epsilon,L,topology,horizon,replicas,seed,"
         "param1,param2,param3,value,se,ci_lo,ci_hi,n_batches,runtime_s,version";
}

inline std::string csv_line(const CsvRow& r) {
  std::string s;
  s += r.command;
  s += ',';
  s += r.kind;
  s += ',';
  s += format_g17(r.rho);
  s += ',';
  s += format_g17(r.epsilon);
  s += ',';
  s += std::to_string(r.L);
  s += ',';
  s += r.topology;
  s += ',';
  s += format_g17(r.horizon);
  s += ',';
  s += std::to_string(r.replicas);
  s += ',';
  s += std::to_string(r.seed);
  s += ',';
  s += format_g17(r.param1);
  s += ',';
  s += format_g17(r.param2);
  s += ',';
  s += format_g17(r.param3);
  s += ',';
  s += format_g17(r.value);
  s += ',';
  s += format_g17(r.se);
  s += ',';
  s += format_g17(r.ci_lo);
  s += ',';
  s += format_g17(r.ci_hi);
  s += ',';
  s += std::to_string(r.n_batches);
  s += ',';
  s += format_g17(r.runtime_s);
  s += ',';
  s += r.version;
  return s;
}

inline void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) throw SimulationError("cannot open output file " + path);
  out << csv_header() << '\n';
  for (const CsvRow& r : rows) out << csv_line(r) << '\n';
  if (!out) throw SimulationError("write failed for " + path);
}

}  // namespace eastwalk
