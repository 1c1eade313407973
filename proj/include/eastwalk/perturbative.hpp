#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "eastwalk/estimators.hpp"
#include "eastwalk/heat_kernel.hpp"

// Perturbative (small-epsilon) predictions assembled from zero-bias
// simulations: the first-order density profile around the walker and the
// cubic velocity coefficient kappa.

namespace eastwalk {

// ---------------------------------------------------------------------------
// First-order profile  rho + 2 eps Int u(s) [p_s(x-1) - p_s(x+1)] ds
// ---------------------------------------------------------------------------

struct FirstOrderProfile {
  double lambda_hat = 0.0;  // relaxation-rate hint used for the time cutoff
  double horizon = 0.0;     // integration cutoff T_u
  double tail_bound = 0.0;  // proven bound on the truncated mass
  int segment_L = 0;
  std::vector<int> offsets;          // -W..W
  std::vector<EstimateWithCI> deps;  // d mu_eps(eta(x)) / d eps at eps = 0
};

// The source term u(s) = -rho(1-rho) P(T0 > s) is sampled via first legal
// ring times; the heat-kernel factor is deterministic, so each replica
// contributes D_r(x) = -2 rho (1-rho) Int_0^{min(T0_r, T_u)} g_x(s) ds with
// g_x(s) = p_s(x-1) - p_s(x+1), evaluated through precomputed prefix
// integrals on a geometric s grid.
inline FirstOrderProfile first_order_profile(double rho, int window, int replicas, uint64_t seed,
                                             int workers = 0, int grid_points = 400) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0,1)");
  if (window < 1) throw ValidationError("window must be >= 1");
  if (grid_points < 16) throw ValidationError("need at least 16 grid points");
  batch_count(replicas);

  FirstOrderProfile out;
  out.lambda_hat = gap_hint(EnvKind::east(), rho);
  const double lam = out.lambda_hat;
  const double mass = 2.0 * rho * std::sqrt(1.0 - rho);
  // |u(s)| <= rho sqrt(1-rho) e^{-lam s} and |g_x| <= 1, so cutting the
  // integral at T leaves at most mass * e^{-lam T} / lam behind.
  double Tu = std::max(12.0 / lam, std::log(mass / (lam * 1e-4)) / lam);
  out.horizon = Tu;
  out.tail_bound = mass * std::exp(-lam * Tu) / lam;
  if (!(out.tail_bound < 1e-4))
    throw SimulationError("profile tail bound " + std::to_string(out.tail_bound) +
                          " exceeds 1e-4");
  out.segment_L = 2 * static_cast<int>(std::ceil(3.0 * Tu)) + 64;

  // s grid: 0, then geometric from Tu*1e-3 to Tu.
  std::vector<double> s{0.0};
  const double s_min = Tu * 1e-3;
  const double ratio = std::pow(Tu / s_min, 1.0 / (grid_points - 1));
  for (int j = 0; j < grid_points; ++j) s.push_back(s_min * std::pow(ratio, j));
  s.back() = Tu;
  const int K = static_cast<int>(s.size());

  const int cols = 2 * window + 1;
  std::vector<std::vector<double>> g(cols, std::vector<double>(K));
  for (int j = 0; j < K; ++j) {
    std::vector<double> row = heat_kernel_row(s[j], window + 1);
    auto p = [&](int y) { return row[y + window + 1]; };
    for (int x = -window; x <= window; ++x) g[x + window][j] = p(x - 1) - p(x + 1);
  }
  std::vector<std::vector<double>> prefix(cols, std::vector<double>(K, 0.0));
  for (int c = 0; c < cols; ++c)
    for (int j = 1; j < K; ++j)
      prefix[c][j] = prefix[c][j - 1] + 0.5 * (s[j] - s[j - 1]) * (g[c][j] + g[c][j - 1]);

  std::vector<double> t0 =
      sample_first_ring_times(rho, out.segment_L, Tu, replicas, seed, workers);

  const double scale = -2.0 * rho * (1.0 - rho);
  std::vector<std::vector<double>> d(cols, std::vector<double>(replicas));
  for (int r = 0; r < replicas; ++r) {
    double tc = std::min(t0[r], Tu);
    auto it = std::upper_bound(s.begin(), s.end(), tc);
    int j = static_cast<int>(it - s.begin()) - 1;
    for (int c = 0; c < cols; ++c) {
      double integral;
      if (j >= K - 1) {
        integral = prefix[c][K - 1];
      } else {
        double w = (tc - s[j]) / (s[j + 1] - s[j]);
        double g_tc = g[c][j] + w * (g[c][j + 1] - g[c][j]);
        integral = prefix[c][j] + 0.5 * (tc - s[j]) * (g[c][j] + g_tc);
      }
      d[c][r] = scale * integral;
    }
  }
  for (int x = -window; x <= window; ++x) {
    out.offsets.push_back(x);
    out.deps.push_back(batch_means(d[x + window]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cubic velocity coefficient from zero-bias trajectories
// ---------------------------------------------------------------------------

struct KappaEstimate {
  EstimateWithCI value;
  double inner_horizon = 0.0;
  int outer_samples = 0;
  int inner_pairs = 0;  // unordered trajectory pairs averaged per environment sample
};

// kappa = -8 mu[(2 eta(0) - 1) g(eta)^2] with g(eta) the expected total
// right-left occupation imbalance seen by an unbiased walker started in eta.
// Each outer sample draws eta once and runs `inner` independent unbiased
// joint trajectories from it; the all-pairs product mean is an unbiased
// estimator of g(eta)^2.  Pass horizon <= 0 to pick 12 / gap_hint.
inline KappaEstimate estimate_kappa(const EnvParams& params, int outer, int inner,
                                    double horizon, uint64_t seed, int workers = 0) {
  params.validate();
  if (!params.topology.is_ring()) throw ValidationError("kappa estimator needs a ring");
  if (params.topology.L < 4) throw ValidationError("kappa estimator needs L >= 4");
  if (std::abs(params.rho - 0.5) > 1e-12)
    throw ValidationError("kappa estimator is defined at rho = 1/2");
  if (inner < 2) throw ValidationError("need at least two runs per environment sample");
  batch_count(outer);
  if (!(horizon > 0.0)) horizon = 12.0 / gap_hint(params.kind, params.rho);

  detail::Timer timer;
  std::vector<double> vals(outer);
  std::atomic<uint64_t> events{0};
  const double T = horizon;
  parallel_replicas(outer, workers, [&](int r) {
    uint64_t rs = replica_seed(seed, "kappa-outer", r);
    SpinConfiguration eta = sample_equilibrium(params, derive_key(rs, hash_tag("init")));
    double f = 2.0 * eta.occupied(0) - 1.0;
    double sum = 0.0, sumsq = 0.0;
    for (int m = 0; m < inner; ++m) {
      struct Integrator {
        double last_t = 0.0, acc = 0.0, val = 0.0;
        void operator()(const JointEvent& e, const SpinConfiguration& cfg, int64_t x) {
          acc += val * (e.time - last_t);
          last_t = e.time;
          val = cfg.occupied(x + 1) - cfg.occupied(x - 1);
        }
      } integ;
      integ.val = eta.occupied(1) - eta.occupied(-1);
      JointOptions opt;
      opt.initial = eta;
      JointResult res = evolve_joint(params, 0.0, T,
                                     derive_key(rs, hash_tag("kappa-inner") + uint64_t(m)),
                                     integ, std::move(opt));
      integ.acc += integ.val * (T - integ.last_t);
      sum += integ.acc;
      sumsq += integ.acc * integ.acc;
      events.fetch_add(res.events, std::memory_order_relaxed);
    }
    double pair_mean = (sum * sum - sumsq) / (double(inner) * (inner - 1));
    vals[r] = -8.0 * f * pair_mean;
  });
  KappaEstimate out;
  out.value = batch_means(vals);
  out.value.budget = {events.load(), timer.seconds()};
  out.inner_horizon = T;
  out.outer_samples = outer;
  out.inner_pairs = inner * (inner - 1) / 2;
  return out;
}

}  // namespace eastwalk
