#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "eastwalk/lattice.hpp"
#include "eastwalk/schedule.hpp"

// Random walkers on top of the environment.
//
// * evolve_joint: the rate-1 walker that jumps right with probability
//   1/2 + eps*(2*occ-1) read off the site it sits on (Ring topology).
// * evolve_front: the leftmost-zero tracker of the East model (Segment).
// * evolve_degenerate: the eps = -1/2 limit walker living on particle-hole
//   edges k+1/2 (Segment), moving left by a geometric scan when its left
//   particle is destroyed.
// * coupled_run: front and edge walker driven by one schedule; the front
//   stays >= walker + 1/2 pathwise, and violations are counted.

namespace eastwalk {

struct WalkerRates {
  double right = 0.5;
  double left = 0.5;
};

inline void validate_eps(double eps) {
  if (!(eps >= -0.5 && eps <= 0.5))
    throw ValidationError("eps must lie in [-1/2, 1/2], got " + std::to_string(eps));
}

// Total jump rate is identically 1 for every eps and occupation.
inline WalkerRates walker_rates(double eps, int occ) {
  double bias = eps * (2 * occ - 1);
  return {0.5 + bias, 0.5 - bias};
}

// Mean displacement rate at fixed occupation: r(+1) - r(-1).
inline double local_drift(double eps, int occ) { return 2.0 * eps * (2 * occ - 1); }

struct JointEvent {
  double time = 0.0;
  bool walker_jump = false;
  int step = 0;  // +1/-1 when walker_jump
  ClockEvent env;
  EventOutcome out;
};

struct JointOptions {
  std::optional<SpinConfiguration> initial;  // default: fresh equilibrium sample
  int64_t x0 = 0;
  // Mirror mode decides "right iff u >= 1 - p_right" instead of "u < p_right";
  // with identical uniforms this makes the run the exact site-reflection of a
  // normal run with opposite eps (used by the East/West reflection tests).
  bool mirror_walker = false;
  std::vector<int> site_key_map = {};
};

struct JointResult {
  SpinConfiguration config;
  int64_t x = 0;
  uint64_t events = 0;
};

// Environment on a ring plus the biased walker, one merged event loop.
// The observer runs after every applied event (environment or walker).
template <class Observer>
JointResult evolve_joint(const EnvParams& params, double eps, double horizon, uint64_t seed,
                         Observer&& observe, JointOptions opt = {}) {
  params.validate();
  validate_eps(eps);
  if (!params.topology.is_ring())
    throw ValidationError("evolve_joint runs on Ring topology");
  const int L = params.topology.L;

  SpinConfiguration cfg = opt.initial ? *opt.initial
                                      : sample_equilibrium(params, derive_key(seed, hash_tag("init")));
  if (cfg.L() != L) throw ValidationError("initial configuration size mismatch");

  EventSchedule sched = make_schedule(params, horizon, derive_key(seed, hash_tag("env")),
                                      opt.site_key_map);
  CounterStream wstream{derive_key(seed, hash_tag("walker"))};

  int64_t x = opt.x0;
  int xsite = static_cast<int>(((x % L) + L) % L);
  double t_env_cursor = 0.0;
  double walker_next = wstream.next_exp();
  uint64_t events = 0;
  JointEvent jev;

  while (true) {
    double te = sched.peek_time();
    bool env_first = te <= walker_next;
    if (env_first) {
      auto ev = sched.next_event(t_env_cursor);
      if (!ev) {
        if (walker_next > horizon) break;
        env_first = false;
      } else {
        t_env_cursor = ev->time;
        jev.time = ev->time;
        jev.walker_jump = false;
        jev.step = 0;
        jev.env = *ev;
        jev.out = apply_event(cfg, params.kind, *ev);
        ++events;
        observe(jev, cfg, x);
        continue;
      }
    }
    if (walker_next > horizon) break;
    int occ = cfg.bits[xsite];
    double p_right = 0.5 + eps * (2 * occ - 1);
    double u = wstream.next_unit();
    bool right = opt.mirror_walker ? (u >= 1.0 - p_right) : (u < p_right);
    jev.time = walker_next;
    jev.walker_jump = true;
    jev.step = right ? 1 : -1;
    jev.out = EventOutcome{};
    jev.env = ClockEvent{};
    x += jev.step;
    xsite += jev.step;
    if (xsite == L) xsite = 0;
    if (xsite < 0) xsite = L - 1;
    ++events;
    observe(jev, cfg, x);
    walker_next += wstream.next_exp();
  }
  return {std::move(cfg), x, events};
}

inline JointResult evolve_joint(const EnvParams& params, double eps, double horizon,
                                uint64_t seed, JointOptions opt = {}) {
  return evolve_joint(params, eps, horizon, seed,
                      [](const JointEvent&, const SpinConfiguration&, int64_t) {},
                      std::move(opt));
}

// ---------------------------------------------------------------------------
// Front and degenerate edge walker (East model, Segment topology)
// ---------------------------------------------------------------------------

struct FrontierOptions {
  std::optional<SpinConfiguration> initial;
  int anchor = -1;                   // search start; default L - 256 (or L/2 on short lattices)
  std::vector<double> sample_times;  // optional checkpoints
};

struct FrontResult {
  int f0 = 0;
  int f_final = 0;
  double t_end = 0.0;
  bool boundary_hit = false;
  uint64_t events = 0;
  std::vector<std::pair<double, double>> samples;  // (t, f)
};

struct DegenerateResult {
  double y0 = 0.0;  // edges live at k + 1/2
  double y_final = 0.0;
  double t_end = 0.0;
  bool boundary_hit = false;
  uint64_t events = 0;
  std::vector<std::pair<double, double>> samples;  // (t, y)
};

struct CoupledResult {
  double y0 = 0.0, y_final = 0.0;
  int f0 = 0, f_final = 0;
  double t_end = 0.0;
  bool boundary_hit = false;
  uint64_t events = 0;
  uint64_t violations = 0;  // events after which f < yl + 1
  std::vector<std::pair<double, double>> samples_y, samples_f;
};

namespace detail {

inline int default_anchor(int L, int anchor) {
  if (anchor >= 0) return anchor;
  return L > 512 ? L - 256 : L / 2;
}

// Lowest k >= anchor with a particle-hole edge (bits[k]=1, bits[k+1]=0);
// falls back to scanning downward.
inline int find_edge(const SpinConfiguration& cfg, int anchor) {
  const int L = cfg.L();
  for (int k = anchor; k + 1 < L; ++k)
    if (cfg.bits[k] == 1 && cfg.bits[k + 1] == 0) return k;
  for (int k = anchor - 1; k >= 1; --k)
    if (cfg.bits[k] == 1 && cfg.bits[k + 1] == 0) return k;
  throw SimulationError("no particle-hole edge in initial configuration");
}

inline int find_zero_at_or_below(const SpinConfiguration& cfg, int anchor) {
  for (int x = anchor; x >= 0; --x)
    if (cfg.bits[x] == 0) return x;
  throw SimulationError("no empty site at or left of anchor");
}

}  // namespace detail

// East front: tracked zero moves right on a legal ring at f with coin 1,
// left on a ring at f-1 with coin 0 (that ring is automatically legal).
inline FrontResult evolve_front(double rho, int L, double horizon, uint64_t seed,
                                FrontierOptions opt = {}) {
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};
  params.validate();
  SpinConfiguration cfg = opt.initial ? *opt.initial
                                      : sample_equilibrium(params, derive_key(seed, hash_tag("init")));
  EventSchedule sched = make_schedule(params, horizon, derive_key(seed, hash_tag("env")));

  FrontResult res;
  int f = detail::find_zero_at_or_below(cfg, detail::default_anchor(L, opt.anchor));
  res.f0 = f;
  size_t next_sample = 0;
  double t = 0.0;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    EventOutcome out = apply_event(cfg, params.kind, *ev);
    while (next_sample < opt.sample_times.size() && t > opt.sample_times[next_sample])
      res.samples.emplace_back(opt.sample_times[next_sample++], f);
    if (ev->site == f && out.legal && ev->coin == 1)
      f += 1;
    else if (ev->site == f - 1 && ev->coin == 0)
      f -= 1;
    ++res.events;
    if (f <= 2 || f >= L - 2) {
      res.boundary_hit = true;
      break;
    }
  }
  res.f_final = f;
  res.t_end = res.boundary_hit ? t : horizon;
  while (next_sample < opt.sample_times.size() && !res.boundary_hit)
    res.samples.emplace_back(opt.sample_times[next_sample++], f);
  return res;
}

namespace detail {

// Shared loop: the environment is plain East either way; the `track_front`
// flag decides whether the front tracker participates.
inline CoupledResult run_edge_walker(double rho, int L, double horizon, uint64_t seed,
                                     FrontierOptions opt, bool track_front) {
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};
  params.validate();
  SpinConfiguration cfg = opt.initial ? *opt.initial
                                      : sample_equilibrium(params, derive_key(seed, hash_tag("init")));
  EventSchedule sched = make_schedule(params, horizon, derive_key(seed, hash_tag("env")));

  CoupledResult res;
  int yl = find_edge(cfg, default_anchor(L, opt.anchor));  // particle site; walker at yl + 1/2
  int f = yl + 1;                                          // coupled start: front on the hole right of the walker
  res.y0 = yl + 0.5;
  res.f0 = f;
  size_t ns_y = 0;
  double t = 0.0;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    EventOutcome out = apply_event(cfg, params.kind, *ev);
    while (ns_y < opt.sample_times.size() && t > opt.sample_times[ns_y]) {
      res.samples_y.emplace_back(opt.sample_times[ns_y], yl + 0.5);
      res.samples_f.emplace_back(opt.sample_times[ns_y], f);
      ++ns_y;
    }
    const int yl_old = yl, f_old = f;
    if (ev->site == yl_old && out.flipped && out.new_value == 0) {
      int k = 1;  // left particle destroyed: slide to the next particle-hole edge
      while (yl_old - k >= 0 && cfg.bits[yl_old - k] == 0) ++k;
      if (yl_old - k < 2) {
        res.boundary_hit = true;
        ++res.events;
        break;
      }
      yl = yl_old - k;
    } else if (ev->site == yl_old + 1 && out.legal && ev->coin == 1) {
      yl = yl_old + 1;
    }
    if (track_front) {
      if (ev->site == f_old && out.legal && ev->coin == 1)
        f = f_old + 1;
      else if (ev->site == f_old - 1 && ev->coin == 0)
        f = f_old - 1;
      if (f < yl + 1) ++res.violations;
    }
    ++res.events;
    if (yl <= 2 || yl + 1 >= L - 2 || (track_front && (f <= 2 || f >= L - 2))) {
      res.boundary_hit = true;
      break;
    }
  }
  res.y_final = yl + 0.5;
  res.f_final = f;
  res.t_end = res.boundary_hit ? t : horizon;
  while (ns_y < opt.sample_times.size() && !res.boundary_hit) {
    res.samples_y.emplace_back(opt.sample_times[ns_y], yl + 0.5);
    res.samples_f.emplace_back(opt.sample_times[ns_y], f);
    ++ns_y;
  }
  return res;
}

}  // namespace detail

inline DegenerateResult evolve_degenerate(double rho, int L, double horizon, uint64_t seed,
                                          FrontierOptions opt = {}) {
  CoupledResult c = detail::run_edge_walker(rho, L, horizon, seed, std::move(opt), false);
  DegenerateResult res;
  res.y0 = c.y0;
  res.y_final = c.y_final;
  res.t_end = c.t_end;
  res.boundary_hit = c.boundary_hit;
  res.events = c.events;
  res.samples = std::move(c.samples_y);
  return res;
}

// One schedule drives both processes; pathwise the front never falls behind
// the edge walker when started at f = yl + 1.
inline CoupledResult coupled_run(double rho, int L, double horizon, uint64_t seed,
                                 FrontierOptions opt = {}) {
  return detail::run_edge_walker(rho, L, horizon, seed, std::move(opt), true);
}

}  // namespace eastwalk
