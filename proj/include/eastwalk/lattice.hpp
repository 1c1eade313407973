#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "eastwalk/rng.hpp"

// Environment primitives: spin configurations on a ring or segment, the
// kinetic constraints (East / West / FA1f / independent spin refresh), flip
// rates, and equilibrium sampling from the Bernoulli(rho) product measure.

namespace eastwalk {

// Parameter/usage errors; the CLI maps these to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Failures while running (sampling caps, non-convergence, ...); exit code 3.
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EnvFamily { East, West, FA1f, IndependentSpinFlip };

struct EnvKind {
  EnvFamily family = EnvFamily::East;
  double gamma = 1.0;  // clock rate for IndependentSpinFlip; constrained kinds use rate-1 clocks

  static EnvKind east() { return {EnvFamily::East, 1.0}; }
  static EnvKind west() { return {EnvFamily::West, 1.0}; }
  static EnvKind fa1f() { return {EnvFamily::FA1f, 1.0}; }
  static EnvKind spin_flip(double gamma = 1.0) { return {EnvFamily::IndependentSpinFlip, gamma}; }

  bool constrained() const { return family != EnvFamily::IndependentSpinFlip; }
  double clock_rate() const { return constrained() ? 1.0 : gamma; }
};

inline const char* to_string(EnvFamily f) {
  switch (f) {
    case EnvFamily::East: return "east";
    case EnvFamily::West: return "west";
    case EnvFamily::FA1f: return "fa1f";
    case EnvFamily::IndependentSpinFlip: return "spinflip";
  }
  return "?";
}

inline EnvKind env_kind_from_string(const std::string& s, double gamma = 1.0) {
  if (s == "east") return EnvKind::east();
  if (s == "west") return EnvKind::west();
  if (s == "fa1f") return EnvKind::fa1f();
  if (s == "spinflip") return EnvKind::spin_flip(gamma);
  throw ValidationError("unknown environment kind: " + s);
}

struct Topology {
  enum class Shape { Ring, Segment };
  Shape shape = Shape::Ring;
  int L = 0;

  static Topology ring(int L) { return {Shape::Ring, L}; }
  static Topology segment(int L) { return {Shape::Segment, L}; }
  bool is_ring() const { return shape == Shape::Ring; }
  void validate() const {
    if (L < 3) throw ValidationError("topology needs L >= 3, got L=" + std::to_string(L));
  }
};

inline const char* to_string(Topology::Shape s) {
  return s == Topology::Shape::Ring ? "ring" : "segment";
}

// Occupation variables, one byte per site.  Sites outside a segment are
// permanently empty ghosts (East looks right of L-1, West left of 0).
struct SpinConfiguration {
  Topology topo;
  std::vector<uint8_t> bits;

  SpinConfiguration() = default;
  explicit SpinConfiguration(Topology t, uint8_t fill = 0) : topo(t), bits(t.L, fill) {}

  int L() const { return topo.L; }

  int occupied(int x) const {
    if (topo.is_ring()) {
      int m = x % topo.L;
      if (m < 0) m += topo.L;
      return bits[m];
    }
    if (x < 0 || x >= topo.L) return 0;  // ghost
    return bits[x];
  }

  bool all_ones() const {
    for (uint8_t b : bits)
      if (!b) return false;
    return true;
  }
};

struct EnvParams {
  EnvKind kind;
  double rho = 0.5;
  Topology topology;

  void validate() const {
    topology.validate();
    if (!(rho > 0.0 && rho < 1.0))
      throw ValidationError("rho must lie in (0,1), got " + std::to_string(rho));
    if (!(kind.gamma > 0.0)) throw ValidationError("gamma must be positive");
  }
};

// Constraint indicator at `site`: 1 when a clock ring there is legal.
inline int constraint(const EnvKind& kind, const SpinConfiguration& cfg, int site) {
  switch (kind.family) {
    case EnvFamily::East: return 1 - cfg.occupied(site + 1);
    case EnvFamily::West: return 1 - cfg.occupied(site - 1);
    case EnvFamily::FA1f: return 1 - cfg.occupied(site - 1) * cfg.occupied(site + 1);
    case EnvFamily::IndependentSpinFlip: return 1;
  }
  return 0;
}

// Rate at which the value at `site` actually changes (constrained kinds);
// for IndependentSpinFlip this is the conventional per-site clock rate gamma.
inline double flip_rate(const EnvKind& kind, const SpinConfiguration& cfg, int site, double rho) {
  if (!kind.constrained()) return kind.gamma;
  double toward = cfg.bits[site] ? (1.0 - rho) : rho;
  return constraint(kind, cfg, site) * toward;
}

// Draw from nu_rho; on a ring with a constrained kind the all-ones
// configuration is excluded (it is isolated under the dynamics there).
inline SpinConfiguration sample_equilibrium(const EnvParams& params, uint64_t seed) {
  params.validate();
  const int L = params.topology.L;
  SpinConfiguration cfg(params.topology);
  const bool reject_full = params.topology.is_ring() && params.kind.constrained();
  constexpr uint64_t kMaxTries = 1000000;
  for (uint64_t attempt = 0; attempt < kMaxTries; ++attempt) {
    CounterStream gen{derive_key(seed, hash_tag("equilibrium") + attempt)};
    for (int x = 0; x < L; ++x) cfg.bits[x] = gen.next_bernoulli(params.rho) ? 1 : 0;
    if (!reject_full || !cfg.all_ones()) return cfg;
  }
  throw SimulationError("sample_equilibrium: rejection cap hit (rho too close to 1?)");
}

}  // namespace eastwalk
