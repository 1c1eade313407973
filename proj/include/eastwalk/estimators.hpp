#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "eastwalk/exact.hpp"
#include "eastwalk/parallel.hpp"
#include "eastwalk/schedule.hpp"
#include "eastwalk/stats.hpp"
#include "eastwalk/walker.hpp"

// Monte Carlo estimators.  Every replica derives its seed from the master
// seed, a purpose tag and the replica index; intervals come from batch means
// across replicas (stats.hpp).

namespace eastwalk {

namespace detail {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

inline int wrap_site(int64_t x, int L) { return static_cast<int>(((x % L) + L) % L); }

}  // namespace detail

// Coarse relaxation-rate hint: exact spectral gap of the environment
// generator on a small ring (spin refresh has gap gamma at every size).
inline double gap_hint(const EnvKind& kind, double rho, int L_gap = 8) {
  if (!kind.constrained()) return kind.gamma;
  auto space = exact::StateSpace::make(kind, L_gap, rho);
  return exact::spectral_gap(exact::build_env_generator(space), exact::measure_vector(space));
}

inline double default_burn_in(const EnvKind& kind, double rho) {
  return 10.0 / gap_hint(kind, rho);
}

// ---------------------------------------------------------------------------
// Velocity
// ---------------------------------------------------------------------------

// Per replica: (X(horizon) - X(burn_in)) / (horizon - burn_in).
inline EstimateWithCI estimate_velocity(const EnvParams& params, double eps, double horizon,
                                        double burn_in, int replicas, uint64_t seed,
                                        int workers = 0) {
  params.validate();
  validate_eps(eps);
  if (!(burn_in >= 0.0) || !(horizon > burn_in))
    throw ValidationError("need 0 <= burn_in < horizon");
  batch_count(replicas);

  detail::Timer timer;
  std::vector<double> v(replicas);
  std::atomic<uint64_t> events{0};
  parallel_replicas(replicas, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "velocity", r);
    struct {
      double burn;
      int64_t x_burn = 0;
      bool captured = false;
      void operator()(const JointEvent& e, const SpinConfiguration&, int64_t x) {
        if (!captured && e.time > burn) {
          x_burn = x - (e.walker_jump ? e.step : 0);
          captured = true;
        }
      }
    } obs{burn_in};
    JointResult res = evolve_joint(params, eps, horizon, rs, obs);
    int64_t x0 = obs.captured ? obs.x_burn : res.x;
    v[r] = static_cast<double>(res.x - x0) / (horizon - burn_in);
    events.fetch_add(res.events, std::memory_order_relaxed);
  });
  EstimateWithCI est = batch_means(v);
  est.budget = {events.load(), timer.seconds()};
  return est;
}

// ---------------------------------------------------------------------------
// Walker-frame density profile
// ---------------------------------------------------------------------------

struct ProfileEstimate {
  int window = 0;
  std::vector<int> offsets;             // -W..W
  std::vector<EstimateWithCI> density;  // time-averaged occupation at X + offset
};

namespace detail {

// Exact time average of the (2W+1)-window around the walker.  The window
// cache is advanced event by event and flushed only when its content or the
// clock segment matters, so the per-event cost stays O(1) for far-away flips.
struct WindowAverager {
  int W, L;
  double burn, horizon;
  std::vector<uint8_t> cache;
  std::vector<double> acc;
  double last_t = 0.0;
  int xsite = 0;

  WindowAverager(int W_, const SpinConfiguration& cfg, int64_t x0, double burn_, double horizon_)
      : W(W_), L(cfg.L()), burn(burn_), horizon(horizon_), cache(2 * W_ + 1),
        acc(2 * W_ + 1, 0.0) {
    xsite = detail::wrap_site(x0, L);
    for (int j = -W; j <= W; ++j) cache[j + W] = cfg.occupied(xsite + j);
  }

  void flush(double upto) {
    double lo = std::max(last_t, burn);
    if (upto > lo) {
      double dt = upto - lo;
      for (int j = 0; j <= 2 * W; ++j) acc[j] += cache[j] * dt;
    }
    last_t = upto;
  }

  void operator()(const JointEvent& e, const SpinConfiguration& cfg, int64_t) {
    if (e.walker_jump) {
      flush(e.time);
      xsite += e.step;
      if (xsite == L) xsite = 0;
      if (xsite < 0) xsite = L - 1;
      if (e.step == 1) {
        for (int j = 0; j < 2 * W; ++j) cache[j] = cache[j + 1];
        cache[2 * W] = cfg.occupied(xsite + W);
      } else {
        for (int j = 2 * W; j > 0; --j) cache[j] = cache[j - 1];
        cache[0] = cfg.occupied(xsite - W);
      }
      return;
    }
    if (!e.out.flipped) return;
    int d = e.env.site - xsite;
    if (d > L / 2) d -= L;
    if (d < -L / 2) d += L;
    if (d < -W || d > W) return;  // outside the window: time average unaffected
    flush(e.time);
    cache[d + W] = e.out.new_value;
  }
};

}  // namespace detail

inline ProfileEstimate estimate_profile(const EnvParams& params, double eps, double horizon,
                                        double burn_in, int window, int replicas, uint64_t seed,
                                        int workers = 0) {
  params.validate();
  validate_eps(eps);
  const int L = params.topology.L;
  if (window < 1 || 4 * window > L)
    throw ValidationError("profile window must satisfy 1 <= W <= L/4");
  if (!(burn_in >= 0.0) || !(horizon > burn_in))
    throw ValidationError("need 0 <= burn_in < horizon");
  batch_count(replicas);

  detail::Timer timer;
  const int cols = 2 * window + 1;
  std::vector<std::vector<double>> rows(replicas);
  std::atomic<uint64_t> events{0};
  parallel_replicas(replicas, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "profile", r);
    JointOptions opt;
    opt.initial = sample_equilibrium(params, derive_key(rs, hash_tag("init")));
    detail::WindowAverager avg(window, *opt.initial, 0, burn_in, horizon);
    JointResult res = evolve_joint(params, eps, horizon, rs,
                                   [&](const JointEvent& e, const SpinConfiguration& c,
                                       int64_t x) { avg(e, c, x); },
                                   std::move(opt));
    avg.flush(horizon);
    rows[r].resize(cols);
    for (int j = 0; j < cols; ++j) rows[r][j] = avg.acc[j] / (horizon - burn_in);
    events.fetch_add(res.events, std::memory_order_relaxed);
  });

  ProfileEstimate out;
  out.window = window;
  std::vector<double> col(replicas);
  for (int j = 0; j < cols; ++j) {
    for (int r = 0; r < replicas; ++r) col[r] = rows[r][j];
    out.offsets.push_back(j - window);
    EstimateWithCI est = batch_means(col);
    est.budget = {events.load(), timer.seconds()};
    out.density.push_back(est);
  }
  return out;
}

// ---------------------------------------------------------------------------
// First-legal-ring survival and the profile source term u(s)
// ---------------------------------------------------------------------------

struct USurvivalEstimate {
  std::vector<double> s;
  std::vector<EstimateWithCI> survival;  // P(T0 > s)
  std::vector<EstimateWithCI> u;         // -rho(1-rho) P(T0 > s)
};

// First legal ring times at the bulk anchor L/2 of an East segment, one per
// replica (+infinity when the horizon is outlived).
inline std::vector<double> sample_first_ring_times(double rho, int L, double horizon,
                                                   int replicas, uint64_t seed, int workers = 0) {
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};
  params.validate();
  std::vector<double> t0(replicas);
  parallel_replicas(replicas, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "first-ring", r);
    SpinConfiguration cfg = sample_equilibrium(params, derive_key(rs, hash_tag("init")));
    EventSchedule sched = make_schedule(params, horizon, derive_key(rs, hash_tag("env")));
    t0[r] = first_legal_ring_time(std::move(cfg), params.kind, sched, L / 2);
  });
  return t0;
}

inline USurvivalEstimate estimate_u(double rho, int L, const std::vector<double>& s_grid,
                                    int replicas, uint64_t seed, int workers = 0) {
  if (s_grid.empty()) throw ValidationError("u estimator needs a nonempty s grid");
  for (size_t i = 0; i + 1 < s_grid.size(); ++i)
    if (!(s_grid[i] <= s_grid[i + 1])) throw ValidationError("s grid must be nondecreasing");
  batch_count(replicas);
  double horizon = s_grid.back() + 1e-9;
  std::vector<double> t0 = sample_first_ring_times(rho, L, horizon, replicas, seed, workers);

  USurvivalEstimate out;
  out.s = s_grid;
  std::vector<double> ind(replicas);
  for (double sj : s_grid) {
    for (int r = 0; r < replicas; ++r) ind[r] = t0[r] > sj ? 1.0 : 0.0;
    EstimateWithCI surv = batch_means(ind);
    EstimateWithCI u = surv;
    double a = -rho * (1.0 - rho);
    u.value *= a;
    u.se = std::abs(a) * surv.se;
    u.ci_lo = u.value - 1.96 * u.se;
    u.ci_hi = u.value + 1.96 * u.se;
    out.survival.push_back(surv);
    out.u.push_back(u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fixed-frame correlators (East segment, bulk anchor)
// ---------------------------------------------------------------------------

namespace detail {

struct Probe {
  double time;
  int site;
};

// Value of each probed site at its probe time (configuration value just
// before the first event later than the probe time).  Probes must be sorted
// by time.
inline void run_with_probes(const EnvParams& params, double horizon, uint64_t seed,
                            const std::vector<Probe>& probes, std::vector<uint8_t>& out) {
  SpinConfiguration cfg = sample_equilibrium(params, derive_key(seed, hash_tag("init")));
  EventSchedule sched = make_schedule(params, horizon, derive_key(seed, hash_tag("env")));
  out.assign(probes.size(), 0);
  size_t next = 0;
  double t = 0.0;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    while (next < probes.size() && probes[next].time < t) {
      out[next] = cfg.bits[probes[next].site];
      ++next;
    }
    if (next == probes.size()) break;
    apply_event(cfg, params.kind, *ev);
  }
  while (next < probes.size()) {
    out[next] = cfg.bits[probes[next].site];
    ++next;
  }
}

inline int anchored_L(double t_total) {
  double m = std::max(t_total, 1.0);
  return 64 * static_cast<int>(std::ceil(m));
}

}  // namespace detail

// E[ xi_0(0) (2 xi_t(y) - 1) xi_{t+s}(0) ] with site 0 mapped to the bulk
// anchor of an East segment sized L = 64 * max(t+s, 1).
inline EstimateWithCI correlator3(double rho, double t, double s, int y, int replicas,
                                  uint64_t seed, int workers = 0) {
  if (!(t >= 0.0) || !(s >= 0.0)) throw ValidationError("correlator needs t, s >= 0");
  if (y < 1) throw ValidationError("correlator needs y >= 1");
  batch_count(replicas);
  const int L = detail::anchored_L(t + s);
  const int anchor = L / 2;
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};

  detail::Timer timer;
  std::vector<double> vals(replicas);
  parallel_replicas(replicas, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "correlator3", r);
    std::vector<detail::Probe> probes{{0.0, anchor}, {t, anchor + y}, {t + s, anchor}};
    std::vector<uint8_t> got;
    detail::run_with_probes(params, t + s + 1e-9, rs, probes, got);
    vals[r] = got[0] * (2.0 * got[1] - 1.0) * got[2];
  });
  EstimateWithCI est = batch_means(vals);
  est.budget.wall_s = timer.seconds();
  return est;
}

struct OrientationEstimate {
  std::vector<int> y;
  std::vector<EstimateWithCI> centered;   // E[(xi_0(0) - rho) xi_t(y)] -> 0
  std::vector<EstimateWithCI> two_point;  // E[xi_0(0) xi_t(y)] -> rho^2
};

// Decorrelation of the origin from everything to its right: for East, a
// mean-zero factor strictly left of the probes kills the correlation.
inline OrientationEstimate orientation_test(double rho, double t, const std::vector<int>& ys,
                                            int replicas, uint64_t seed, int workers = 0) {
  if (!(t >= 0.0)) throw ValidationError("orientation test needs t >= 0");
  for (int y : ys)
    if (y < 1) throw ValidationError("orientation test needs y >= 1");
  batch_count(replicas);
  const int L = detail::anchored_L(t);
  const int anchor = L / 2;
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};

  std::vector<std::vector<double>> centered(ys.size(), std::vector<double>(replicas));
  std::vector<std::vector<double>> plain(ys.size(), std::vector<double>(replicas));
  parallel_replicas(replicas, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "orientation", r);
    std::vector<detail::Probe> probes{{0.0, anchor}};
    for (int y : ys) probes.push_back({t, anchor + y});
    std::vector<uint8_t> got;
    detail::run_with_probes(params, t + 1e-9, rs, probes, got);
    for (size_t i = 0; i < ys.size(); ++i) {
      centered[i][r] = (got[0] - rho) * got[i + 1];
      plain[i][r] = static_cast<double>(got[0]) * got[i + 1];
    }
  });
  OrientationEstimate out;
  out.y = ys;
  for (size_t i = 0; i < ys.size(); ++i) {
    out.centered.push_back(batch_means(centered[i]));
    out.two_point.push_back(batch_means(plain[i]));
  }
  return out;
}

}  // namespace eastwalk
