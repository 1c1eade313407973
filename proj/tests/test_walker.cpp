#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "eastwalk/lattice.hpp"
#include "eastwalk/schedule.hpp"
#include "eastwalk/walker.hpp"

using namespace eastwalk;

TEST(WalkerRates, BiasAndDriftFollowOccupancy) {
  EXPECT_DOUBLE_EQ(walker_rates(0.3, 1).right, 0.8);
  EXPECT_DOUBLE_EQ(walker_rates(0.3, 1).left, 0.2);
  EXPECT_DOUBLE_EQ(walker_rates(0.3, 0).right, 0.2);
  EXPECT_DOUBLE_EQ(walker_rates(-0.3, 1).right, 0.2);
  EXPECT_DOUBLE_EQ(walker_rates(0.0, 1).right, 0.5);
  EXPECT_DOUBLE_EQ(local_drift(0.25, 1), 0.5);
  EXPECT_DOUBLE_EQ(local_drift(0.25, 0), -0.5);
  EXPECT_NO_THROW(validate_eps(0.5));
  EXPECT_NO_THROW(validate_eps(-0.5));
  EXPECT_THROW(validate_eps(0.51), ValidationError);
  EXPECT_THROW(validate_eps(-0.6), ValidationError);
}

TEST(JointWalk, RejectsBadSetup) {
  EnvParams seg{EnvKind::east(), 0.5, Topology::segment(16)};
  EXPECT_THROW(evolve_joint(seg, 0.1, 10.0, 1), ValidationError);

  EnvParams ring{EnvKind::east(), 0.5, Topology::ring(16)};
  JointOptions opt;
  opt.initial = SpinConfiguration(Topology::ring(8));
  EXPECT_THROW(evolve_joint(ring, 0.1, 10.0, 1, opt), ValidationError);
}

TEST(JointWalk, DeterministicMergedEventStream) {
  EnvParams params{EnvKind::fa1f(), 0.4, Topology::ring(12)};
  struct Rec {
    double t;
    bool jump;
    int step;
    int site;
  };
  auto run = [&]() {
    std::vector<Rec> recs;
    JointResult res = evolve_joint(params, 0.2, 80.0, 555,
                                   [&](const JointEvent& je, const SpinConfiguration&, int64_t) {
                                     recs.push_back({je.time, je.walker_jump, je.step,
                                                     je.walker_jump ? -1 : je.env.site});
                                   });
    return std::make_pair(res, recs);
  };
  auto [ra, a] = run();
  auto [rb, b] = run();
  EXPECT_EQ(ra.x, rb.x);
  EXPECT_EQ(ra.events, rb.events);
  EXPECT_EQ(ra.config.bits, rb.config.bits);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.size(), ra.events);

  double prev = 0.0;
  int64_t x = 0;
  uint64_t jumps = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].t, b[i].t);
    EXPECT_EQ(a[i].jump, b[i].jump);
    EXPECT_EQ(a[i].step, b[i].step);
    EXPECT_EQ(a[i].site, b[i].site);
    EXPECT_GE(a[i].t, prev);
    EXPECT_LE(a[i].t, 80.0);
    prev = a[i].t;
    if (a[i].jump) {
      EXPECT_TRUE(a[i].step == 1 || a[i].step == -1);
      x += a[i].step;
      ++jumps;
    } else {
      EXPECT_EQ(a[i].step, 0);
      EXPECT_GE(a[i].site, 0);
      EXPECT_LT(a[i].site, 12);
    }
  }
  EXPECT_EQ(x, ra.x);
  // Walker jump count ~ Poisson(80); env rings ~ Poisson(12 * 80).
  EXPECT_NEAR(static_cast<double>(jumps), 80.0, 5.0 * std::sqrt(80.0));
  EXPECT_NEAR(static_cast<double>(ra.events - jumps), 960.0, 5.0 * std::sqrt(960.0));
}

TEST(JointWalk, UnbiasedWalkerIgnoresTheEnvironment) {
  EnvParams params{EnvKind::east(), 0.5, Topology::ring(10)};
  auto walker_path = [&](uint8_t fill_site) {
    JointOptions opt;
    SpinConfiguration cfg(params.topology);
    cfg.bits[3] = fill_site;
    cfg.bits[7] = 1;
    opt.initial = cfg;
    std::vector<std::pair<double, int64_t>> path;
    evolve_joint(params, 0.0, 60.0, 777,
                 [&](const JointEvent& je, const SpinConfiguration&, int64_t x) {
                   if (je.walker_jump) path.push_back({je.time, x});
                 },
                 opt);
    return path;
  };
  // Different environments, same seed: with eps = 0 the walker path is a
  // function of the walker stream alone.
  EXPECT_EQ(walker_path(0), walker_path(1));
}

// East with bias eps, reflected site by site, is West with bias -eps: the
// mirrored run must produce the exactly negated walker path and the exactly
// reflected environment, event for event.
TEST(JointWalk, MirrorCouplingMapsEastToWest) {
  const int L = 16;
  const double T = 250.0;
  const double eps = 0.3;
  const uint64_t seed = 90210;

  EnvParams east{EnvKind::east(), 0.5, Topology::ring(L)};
  EnvParams west{EnvKind::west(), 0.5, Topology::ring(L)};

  SpinConfiguration init = sample_equilibrium(east, derive_key(seed, hash_tag("init")));
  SpinConfiguration init_r(east.topology);
  std::vector<int> refl(L);
  for (int x = 0; x < L; ++x) {
    refl[x] = (L - x) % L;
    init_r.bits[refl[x]] = init.bits[x];
  }

  std::vector<std::pair<double, int64_t>> path_e, path_w;
  JointOptions oe;
  oe.initial = init;
  JointResult re = evolve_joint(east, eps, T, seed,
                                [&](const JointEvent& je, const SpinConfiguration&, int64_t x) {
                                  if (je.walker_jump) path_e.push_back({je.time, x});
                                },
                                oe);

  JointOptions ow;
  ow.initial = init_r;
  ow.mirror_walker = true;
  ow.site_key_map = refl;
  JointResult rw = evolve_joint(west, -eps, T, seed,
                                [&](const JointEvent& je, const SpinConfiguration&, int64_t x) {
                                  if (je.walker_jump) path_w.push_back({je.time, x});
                                },
                                ow);

  EXPECT_EQ(re.events, rw.events);
  EXPECT_EQ(rw.x, -re.x);
  ASSERT_EQ(path_e.size(), path_w.size());
  ASSERT_GT(path_e.size(), 100u);
  for (size_t i = 0; i < path_e.size(); ++i) {
    EXPECT_EQ(path_w[i].first, path_e[i].first);
    EXPECT_EQ(path_w[i].second, -path_e[i].second);
  }
  for (int x = 0; x < L; ++x) EXPECT_EQ(rw.config.bits[refl[x]], re.config.bits[x]);
}

namespace {

struct Reconstruction {
  double y_final = 0.0;
  int f_final = 0;
  bool boundary_hit = false;
  uint64_t events = 0;
};

// Independent re-implementation of the edge walker + tracked front, with the
// structural invariants asserted after every ring.
Reconstruction reconstruct_coupled(double rho, int L, double horizon, uint64_t seed) {
  EnvParams params{EnvKind::east(), rho, Topology::segment(L)};
  SpinConfiguration cfg = sample_equilibrium(params, derive_key(seed, hash_tag("init")));
  EventSchedule sched = make_schedule(params, horizon, derive_key(seed, hash_tag("env")));

  int yl = detail::find_edge(cfg, detail::default_anchor(L, -1));
  int f = yl + 1;
  Reconstruction rec;
  double t = 0.0;
  while (auto ev = sched.next_event(t)) {
    t = ev->time;
    EventOutcome out = apply_event(cfg, params.kind, *ev);
    const int yl_old = yl, f_old = f;
    if (ev->site == yl_old && out.flipped && out.new_value == 0) {
      int k = 1;
      while (yl_old - k >= 0 && cfg.bits[yl_old - k] == 0) ++k;
      if (yl_old - k < 2) {
        rec.boundary_hit = true;
        ++rec.events;
        break;
      }
      yl = yl_old - k;
    } else if (ev->site == yl_old + 1 && out.legal && ev->coin == 1) {
      yl = yl_old + 1;
    }
    if (ev->site == f_old && out.legal && ev->coin == 1)
      f = f_old + 1;
    else if (ev->site == f_old - 1 && ev->coin == 0)
      f = f_old - 1;
    ++rec.events;

    // Invariants: the walker sits on a particle-hole edge, the front sits on
    // a hole, and the front never falls behind the walker.
    EXPECT_EQ(cfg.bits[yl], 1) << "t=" << t;
    EXPECT_EQ(cfg.bits[yl + 1], 0) << "t=" << t;
    EXPECT_EQ(cfg.bits[f], 0) << "t=" << t;
    EXPECT_GE(f, yl + 1);

    if (yl <= 2 || yl + 1 >= L - 2 || f <= 2 || f >= L - 2) {
      rec.boundary_hit = true;
      break;
    }
  }
  rec.y_final = yl + 0.5;
  rec.f_final = f;
  return rec;
}

}  // namespace

TEST(EdgeWalker, MatchesIndependentReconstruction) {
  for (uint64_t seed : {11ULL, 12ULL, 13ULL}) {
    const double rho = 0.5;
    const int L = 64;
    const double T = 60.0;
    Reconstruction rec = reconstruct_coupled(rho, L, T, seed);
    CoupledResult lib = coupled_run(rho, L, T, seed);
    EXPECT_EQ(lib.y_final, rec.y_final);
    EXPECT_EQ(lib.f_final, rec.f_final);
    EXPECT_EQ(lib.boundary_hit, rec.boundary_hit);
    EXPECT_EQ(lib.events, rec.events);
    EXPECT_EQ(lib.violations, 0u);

    DegenerateResult deg = evolve_degenerate(rho, L, T, seed);
    EXPECT_EQ(deg.y_final, lib.y_final);
    EXPECT_EQ(deg.y0, lib.y0);
  }
}

TEST(EdgeWalker, CouplingDominatesAtSampleTimes) {
  FrontierOptions opt;
  opt.sample_times = {5.0, 10.0, 20.0, 40.0, 80.0};
  CoupledResult c = coupled_run(0.5, 512, 100.0, 2173, opt);
  EXPECT_EQ(c.violations, 0u);
  EXPECT_FALSE(c.boundary_hit);
  EXPECT_DOUBLE_EQ(c.f0, c.y0 + 0.5);
  ASSERT_EQ(c.samples_y.size(), opt.sample_times.size());
  ASSERT_EQ(c.samples_f.size(), opt.sample_times.size());
  for (size_t i = 0; i < c.samples_y.size(); ++i) {
    EXPECT_DOUBLE_EQ(c.samples_y[i].first, opt.sample_times[i]);
    EXPECT_DOUBLE_EQ(c.samples_f[i].first, opt.sample_times[i]);
    EXPECT_GE(c.samples_f[i].second, c.samples_y[i].second + 0.5);
  }
  EXPECT_GE(c.f_final, c.y_final + 0.5);
}

TEST(Front, TrackedZeroStaysAZero) {
  EnvParams params{EnvKind::east(), 0.5, Topology::segment(64)};
  for (uint64_t seed : {21ULL, 22ULL}) {
    SpinConfiguration cfg = sample_equilibrium(params, derive_key(seed, hash_tag("init")));
    EventSchedule sched = make_schedule(params, 60.0, derive_key(seed, hash_tag("env")));
    int f = detail::find_zero_at_or_below(cfg, detail::default_anchor(64, -1));
    bool boundary = false;
    uint64_t events = 0;
    double t = 0.0;
    while (auto ev = sched.next_event(t)) {
      t = ev->time;
      EventOutcome out = apply_event(cfg, params.kind, *ev);
      if (ev->site == f && out.legal && ev->coin == 1)
        f += 1;
      else if (ev->site == f - 1 && ev->coin == 0)
        f -= 1;
      ++events;
      EXPECT_EQ(cfg.bits[f], 0) << "t=" << t;
      if (f <= 2 || f >= 62) {
        boundary = true;
        break;
      }
    }
    FrontResult lib = evolve_front(0.5, 64, 60.0, seed);
    EXPECT_EQ(lib.f_final, f);
    EXPECT_EQ(lib.boundary_hit, boundary);
    EXPECT_EQ(lib.events, events);
  }
}

TEST(Front, BoundaryStopsTheRun) {
  // Tiny lattice, generous horizon: the front reaches the guard band and the
  // run reports it instead of running to the horizon.
  FrontResult res = evolve_front(0.5, 16, 5000.0, 3);
  EXPECT_TRUE(res.boundary_hit);
  EXPECT_LT(res.t_end, 5000.0);
  EXPECT_TRUE(res.f_final <= 2 || res.f_final >= 14);
}

TEST(Front, AnchorsDefaultAndExplicit) {
  EXPECT_EQ(detail::default_anchor(1024, -1), 1024 - 256);
  EXPECT_EQ(detail::default_anchor(100, -1), 50);
  EXPECT_EQ(detail::default_anchor(100, 30), 30);

  SpinConfiguration cfg(Topology::segment(32));
  for (int i = 0; i < 32; ++i) cfg.bits[i] = i % 2;  // zeros on even sites
  EXPECT_EQ(detail::find_zero_at_or_below(cfg, 21), 20);
  cfg.bits = std::vector<uint8_t>(32, 0);
  cfg.bits[10] = 1;
  EXPECT_EQ(detail::find_edge(cfg, 5), 10);  // scans up from the anchor
}
