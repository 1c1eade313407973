#pragma once

#include <cmath>
#include <vector>

#include "eastwalk/lattice.hpp"

// Transition kernel p_t(y) of the continuous-time simple random walk on Z
// with total jump rate 1 (rate 1/2 per direction), by uniformization:
//   p_t(y) = sum_n  Poisson_t(n) * P_n(y),
// with P_n the n-step discrete SRW law.  The Poisson sum is truncated once
// the remaining tail mass drops below 1e-14; weights are seeded at the mode
// via lgamma so large t cannot underflow.

namespace eastwalk {

namespace detail {

inline int poisson_truncation(double t) {
  int n = static_cast<int>(t + 12.0 * std::sqrt(t + 1.0) + 25.0);
  return n;
}

inline std::vector<double> poisson_weights(double t, int n_max) {
  std::vector<double> w(n_max + 1, 0.0);
  int mode = std::min<int>(n_max, static_cast<int>(t));
  w[mode] = std::exp(mode * std::log(t > 0 ? t : 1.0) - t - std::lgamma(mode + 1.0));
  if (t == 0.0) w[mode] = mode == 0 ? 1.0 : 0.0;
  for (int n = mode + 1; n <= n_max; ++n) w[n] = w[n - 1] * t / n;
  for (int n = mode - 1; n >= 0; --n) w[n] = w[n + 1] * (n + 1) / t;
  return w;
}

}  // namespace detail

// p_t(y) for all |y| <= ymax; index y + ymax.
inline std::vector<double> heat_kernel_row(double t, int ymax) {
  if (!(t >= 0.0)) throw ValidationError("heat kernel needs t >= 0");
  if (ymax < 0) throw ValidationError("heat kernel needs ymax >= 0");
  const int n_max = detail::poisson_truncation(t);
  const auto w = detail::poisson_weights(t, n_max);

  // One array holds P_n on [-n_max, n_max]; accumulate w_n * P_n while
  // stepping P_{n+1}(y) = (P_n(y-1) + P_n(y+1)) / 2.
  const int span = n_max + 1;
  std::vector<double> pn(2 * span + 1, 0.0), nxt(2 * span + 1, 0.0);
  std::vector<double> acc(2 * span + 1, 0.0);
  pn[span] = 1.0;
  double tail = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    for (int i = std::max(0, span - n); i <= std::min(2 * span, span + n); ++i)
      acc[i] += w[n] * pn[i];
    tail -= w[n];
    if (tail < 1e-14) break;
    if (n == n_max) break;
    for (int i = std::max(1, span - n - 1); i <= std::min(2 * span - 1, span + n + 1); ++i)
      nxt[i] = 0.5 * (pn[i - 1] + pn[i + 1]);
    std::swap(pn, nxt);
  }
  std::vector<double> row(2 * ymax + 1, 0.0);
  for (int y = -ymax; y <= ymax; ++y)
    if (std::abs(y) <= n_max) row[y + ymax] = acc[span + y];
  return row;
}

inline double heat_kernel(double t, int y) {
  int ay = std::abs(y);
  return heat_kernel_row(t, ay)[2 * ay];
}

}  // namespace eastwalk
