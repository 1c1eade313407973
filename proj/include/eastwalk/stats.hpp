#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eastwalk/lattice.hpp"

// Replica statistics: batch means over per-replica values, normal 95%
// intervals.  Batch count is fixed at max(20, replicas/50), so at least 20
// replicas are required for any interval.

namespace eastwalk {

struct Budget {
  uint64_t events = 0;
  double wall_s = 0.0;
};

struct EstimateWithCI {
  double value = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int n_batches = 0;
  int replicas_used = 0;
  Budget budget;
};

inline int batch_count(int replicas) {
  if (replicas < 20)
    throw ValidationError("need at least 20 replicas for batch-means intervals, got " +
                          std::to_string(replicas));
  return std::max(20, replicas / 50);
}

// Contiguous near-equal batches by replica index; the partition depends only
// on (replicas, b), never on scheduling.
inline EstimateWithCI batch_means(const std::vector<double>& per_replica) {
  const int R = static_cast<int>(per_replica.size());
  const int B = batch_count(R);
  double total = 0.0;
  for (double v : per_replica) total += v;
  const double mean = total / R;

  double ss = 0.0;
  for (int b = 0; b < B; ++b) {
    const int lo = static_cast<int>(static_cast<int64_t>(b) * R / B);
    const int hi = static_cast<int>(static_cast<int64_t>(b + 1) * R / B);
    double m = 0.0;
    for (int i = lo; i < hi; ++i) m += per_replica[i];
    m /= (hi - lo);
    ss += (m - mean) * (m - mean);
  }
  EstimateWithCI est;
  est.value = mean;
  est.se = std::sqrt(ss / (B - 1) / B);
  est.ci_lo = mean - 1.96 * est.se;
  est.ci_hi = mean + 1.96 * est.se;
  est.n_batches = B;
  est.replicas_used = R;
  return est;
}

// Gaussian combination for differences/sums of independent estimates.
inline double combined_se(const EstimateWithCI& a, const EstimateWithCI& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

}  // namespace eastwalk
