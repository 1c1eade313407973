#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>

#include "eastwalk/lattice.hpp"

// Exact finite-state oracle on a ring of L <= 14 sites.  Configurations are
// L-bit codes (bit x = occupation of site x relative to the walker); for
// constrained kinds the all-ones code 2^L - 1 is isolated and excluded, so
// codes 0..2^L-2 double as state indices.  Translations act as bit rotations.
//
// Provided: environment and environment-seen-from-walker generators,
// stationary distributions (with uniqueness check), spectral gaps, exact
// walker velocity, the Dyson expansion of the stationary expectation around
// eps = 0 evaluated on a geometric time grid with per-step Pade matrix
// exponentials, and the resolvent form of the cubic velocity coefficient.

namespace eastwalk::exact {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr int kMaxL = 14;
constexpr int kDenseSolveMax = 4096;  // direct dense LU / eigensolve threshold
constexpr int kDenseSvdMax = 2048;    // full SVD for the uniqueness check

struct StateSpace {
  EnvKind kind;
  int L = 0;
  double rho = 0.5;
  uint32_t full_mask = 0;
  bool excludes_all_ones = false;
  int dim = 0;

  static StateSpace make(const EnvKind& kind, int L, double rho) {
    if (L < 3 || L > kMaxL)
      throw ValidationError("exact oracle supports 3 <= L <= 14, got L=" + std::to_string(L));
    if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("rho must lie in (0,1)");
    StateSpace s;
    s.kind = kind;
    s.L = L;
    s.rho = rho;
    s.full_mask = (1u << L) - 1;
    s.excludes_all_ones = kind.constrained();
    s.dim = (1 << L) - (s.excludes_all_ones ? 1 : 0);
    return s;
  }

  int bit(uint32_t code, int x) const {
    int m = x % L;
    if (m < 0) m += L;
    return (code >> m) & 1u;
  }
  // tau_1 (walker steps right): new bit i = old bit i+1.
  uint32_t rotate_down(uint32_t c) const { return (c >> 1) | ((c & 1u) << (L - 1)); }
  // tau_-1: new bit i = old bit i-1.
  uint32_t rotate_up(uint32_t c) const { return ((c << 1) | (c >> (L - 1))) & full_mask; }

  int constraint_of(uint32_t c, int x) const {
    switch (kind.family) {
      case EnvFamily::East: return 1 - bit(c, x + 1);
      case EnvFamily::West: return 1 - bit(c, x - 1);
      case EnvFamily::FA1f: return 1 - bit(c, x - 1) * bit(c, x + 1);
      case EnvFamily::IndependentSpinFlip: return 1;
    }
    return 0;
  }
};

// nu_rho restricted to the state space (conditioned on not-all-ones when
// that code is excluded), normalized.
inline Vec measure_vector(const StateSpace& s) {
  Vec mu(s.dim);
  for (int c = 0; c < s.dim; ++c) {
    int pop = std::popcount(static_cast<uint32_t>(c));
    mu(c) = std::pow(s.rho, pop) * std::pow(1.0 - s.rho, s.L - pop);
  }
  mu /= mu.sum();
  return mu;
}

// Value-change rate c -> c^x: clock rate * constraint * P(coin = 1 - bit).
inline double change_rate(const StateSpace& s, uint32_t c, int x) {
  if (!s.constraint_of(c, x)) return 0.0;
  double toward = s.bit(c, x) ? (1.0 - s.rho) : s.rho;
  return s.kind.clock_rate() * toward;
}

inline SpMat build_env_generator(const StateSpace& s) {
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(s.dim) * (s.L + 1));
  for (int c = 0; c < s.dim; ++c) {
    double out = 0.0;
    for (int x = 0; x < s.L; ++x) {
      double r = change_rate(s, c, x);
      if (r == 0.0) continue;
      uint32_t tgt = static_cast<uint32_t>(c) ^ (1u << x);
      if (s.excludes_all_ones && tgt == s.full_mask)
        throw SimulationError("constrained dynamics produced the excluded all-ones state");
      trip.emplace_back(c, tgt, r);
      out += r;
    }
    trip.emplace_back(c, c, -out);
  }
  SpMat G(s.dim, s.dim);
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

// Environment seen from the walker: environment flips plus configuration
// shifts at the walker jump rates read off bit 0.
inline SpMat build_ew_generator(const StateSpace& s, double eps) {
  if (!(eps >= -0.5 && eps <= 0.5)) throw ValidationError("eps must lie in [-1/2, 1/2]");
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(s.dim) * (s.L + 3));
  for (int c = 0; c < s.dim; ++c) {
    double out = 0.0;
    for (int x = 0; x < s.L; ++x) {
      double r = change_rate(s, c, x);
      if (r == 0.0) continue;
      trip.emplace_back(c, static_cast<uint32_t>(c) ^ (1u << x), r);
      out += r;
    }
    double bias = eps * (2.0 * (c & 1u) - 1.0);
    uint32_t down = s.rotate_down(c), up = s.rotate_up(c);
    if (down != static_cast<uint32_t>(c)) {
      trip.emplace_back(c, down, 0.5 + bias);
      trip.emplace_back(c, up, 0.5 - bias);
      out += 1.0;
    }
    trip.emplace_back(c, c, -out);
  }
  SpMat G(s.dim, s.dim);
  G.setFromTriplets(trip.begin(), trip.end());
  return G;
}

namespace detail {

// Irreducibility of the transition pattern: state 0 reaches and is reached
// by every state.
inline bool pattern_irreducible(const SpMat& G) {
  const int n = G.rows();
  auto bfs = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::queue<int> q;
    seen[0] = 1;
    q.push(0);
    SpMat M = transpose ? SpMat(G.transpose()) : G;
    while (!q.empty()) {
      int i = q.front();
      q.pop();
      for (SpMat::InnerIterator it(M, i); it; ++it) {
        // column-major: column i of M holds the edges incident to i in one
        // direction; running both sweeps covers reach-from and reach-to.
        int j = it.row();
        if (!seen[j] && it.value() != 0.0 && j != i) {
          seen[j] = 1;
          q.push(j);
        }
      }
    }
    for (char c : seen)
      if (!c) return false;
    return true;
  };
  return bfs(false) && bfs(true);
}

inline double second_smallest_singular_value(const SpMat& G) {
  Eigen::BDCSVD<Mat> svd{Mat(G)};
  const auto& sv = svd.singularValues();  // descending
  return sv(sv.size() - 2);
}

}  // namespace detail

// Solve mu^T G = 0, sum(mu) = 1 by replacing one balance equation with the
// normalization, plus one step of iterative refinement.  Uniqueness check:
// second-smallest singular value of G above 1e-10 (full SVD up to
// kDenseSvdMax states; pattern irreducibility beyond that).
inline Vec stationary_distribution(const SpMat& G, bool check_uniqueness = true) {
  const int n = G.rows();
  if (check_uniqueness) {
    if (n <= kDenseSvdMax) {
      double s2 = detail::second_smallest_singular_value(G);
      if (!(s2 > 1e-10))
        throw SimulationError("stationary distribution not unique (sigma_2 <= 1e-10)");
    } else if (!detail::pattern_irreducible(G)) {
      throw SimulationError("stationary distribution not unique (pattern reducible)");
    }
  }
  Vec b = Vec::Zero(n);
  b(0) = 1.0;
  Vec mu(n);
  if (n <= kDenseSolveMax) {
    Mat M = Mat(G.transpose());
    M.row(0).setOnes();
    Eigen::PartialPivLU<Mat> lu(M);
    mu = lu.solve(b);
    mu += lu.solve(b - M * mu);
  } else {
    std::vector<Triplet> trip;
    trip.reserve(G.nonZeros() + n);
    SpMat Gt = SpMat(G.transpose());
    for (int k = 0; k < Gt.outerSize(); ++k)
      for (SpMat::InnerIterator it(Gt, k); it; ++it)
        if (it.row() != 0) trip.emplace_back(it.row(), it.col(), it.value());
    for (int j = 0; j < n; ++j) trip.emplace_back(0, j, 1.0);
    SpMat M(n, n);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success) throw SimulationError("sparse LU failed on generator");
    mu = lu.solve(b);
    mu += lu.solve(Vec(b - M * mu));
  }
  mu /= mu.sum();
  return mu;
}

// Spectral gap of a mu-reversible generator: second-smallest eigenvalue of
// the symmetrization D^(1/2) (-G) D^(-1/2).  Reversibility is verified
// entrywise on the way.
inline double spectral_gap(const SpMat& G, const Vec& mu) {
  const int n = G.rows();
  Vec sq = mu.array().sqrt();
  std::vector<Triplet> trip;
  trip.reserve(G.nonZeros());
  for (int k = 0; k < G.outerSize(); ++k)
    for (SpMat::InnerIterator it(G, k); it; ++it)
      trip.emplace_back(it.row(), it.col(), -it.value() * sq(it.row()) / sq(it.col()));
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  double scale = 0.0, asym = 0.0;
  SpMat At = SpMat(A.transpose());
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  SpMat D = A - At;
  for (int k = 0; k < D.outerSize(); ++k)
    for (SpMat::InnerIterator it(D, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
  if (asym > 1e-9 * std::max(scale, 1.0))
    throw SimulationError("generator is not reversible for the supplied measure");

  if (n <= kDenseSolveMax) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (A + At)));
    return es.eigenvalues()(1);
  }
  // Large path: inverse iteration on A + delta, deflating the known null
  // vector sqrt(mu).
  SpMat S = 0.5 * (A + At);
  double delta = 1e-10 * std::max(scale, 1.0);
  SpMat I(n, n);
  I.setIdentity();
  SpMat Sd = S + delta * I;
  Eigen::SimplicialLDLT<SpMat> ldlt(Sd);
  if (ldlt.info() != Eigen::Success) throw SimulationError("LDLT failed on symmetrized generator");
  Vec v0 = sq / sq.norm();
  Vec x = Vec::Random(n);
  x -= v0 * v0.dot(x);
  x.normalize();
  double lam = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vec y = ldlt.solve(x);
    y -= v0 * v0.dot(y);
    y.normalize();
    double lam_new = y.dot(S * y);
    if (it > 5 && std::abs(lam_new - lam) < 1e-12 * std::max(1.0, lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    x = y;
  }
  return lam;
}

inline double mean_occupation_at_origin(const StateSpace& s, const Vec& weights) {
  double m = 0.0;
  for (int c = 0; c < s.dim; ++c)
    if (c & 1) m += weights(c);
  return m;
}

// v(eps) = mu_eps(2 eps (2 eta(0) - 1)).
inline double exact_velocity(const EnvKind& kind, int L, double rho, double eps,
                             bool check_uniqueness = true) {
  StateSpace s = StateSpace::make(kind, L, rho);
  Vec mu_eps = stationary_distribution(build_ew_generator(s, eps), check_uniqueness);
  return 2.0 * eps * (2.0 * mean_occupation_at_origin(s, mu_eps) - 1.0);
}

inline double tv_distance(const Vec& a, const Vec& b) { return 0.5 * (a - b).lpNorm<1>(); }

// ---------------------------------------------------------------------------
// Dyson expansion of mu_eps around eps = 0
// ---------------------------------------------------------------------------
//
//   mu_eps(f) = mu(f) + sum_n  T_n,   T_n = int_0^inf mu(Lhat S_n(t) f) dt,
//   S_0(t) = exp(t G0),  S_{n+1}(t) f = int_0^t S_0(t-s) Lhat S_n(s) f ds,
//
// with G0 the eps = 0 walker-frame generator and Lhat the eps-linear
// perturbation.  Each |T_n| is bounded by (2|eps|/gap)^(n+1) ||f - mu(f)||.
//
// Numerics: geometric time grid to 40/gap; semigroup steps are Pade
// scaling-and-squaring exponentials of (t_{k+1}-t_k) G0.  The composite
// trapezoid rule for the convolutions telescopes into the exact recursion
//   J_{k+1} = E_k J_k + (dt_k/2)(E_k h_k + h_{k+1}),
// which reproduces trapezoid sums of the product integrand at every node.

class DysonSeries {
 public:
  DysonSeries(const EnvKind& kind, int L, double rho, double eps, int grid_points = 200,
              double horizon = 0.0)
      : space_(StateSpace::make(kind, L, rho)), eps_(eps) {
    if (space_.dim > kDenseSolveMax)
      throw ValidationError("Dyson series needs a dense-size state space (L <= 12)");
    if (grid_points < 16) throw ValidationError("Dyson series needs >= 16 grid points");
    mu_ = measure_vector(space_);
    SpMat Genv = build_env_generator(space_);
    gap_ = spectral_gap(Genv, mu_);
    Mat G0 = Mat(build_ew_generator(space_, 0.0));

    Lhat_ = Mat::Zero(space_.dim, space_.dim);
    for (int c = 0; c < space_.dim; ++c) {
      double a = eps_ * (2.0 * (c & 1u) - 1.0);
      uint32_t down = space_.rotate_down(static_cast<uint32_t>(c));
      uint32_t up = space_.rotate_up(static_cast<uint32_t>(c));
      if (down == static_cast<uint32_t>(c)) continue;  // shift-invariant code: no walker term
      Lhat_(c, down) += a;
      Lhat_(c, up) -= a;
    }

    double T = horizon > 0.0 ? horizon : 40.0 / gap_;
    const int K = grid_points;
    t_.resize(K);
    t_[0] = 0.0;
    double t_min = 1e-3 / gap_;
    double ratio = std::pow(T / t_min, 1.0 / (K - 2));
    for (int k = 1; k < K; ++k) t_[k] = t_min * std::pow(ratio, k - 1);
    t_.back() = T;
    prop_.reserve(K - 1);
    for (int k = 0; k + 1 < K; ++k) prop_.push_back(Mat(((t_[k + 1] - t_[k]) * G0).exp()));
  }

  const StateSpace& space() const { return space_; }
  double env_gap() const { return gap_; }
  const Vec& measure() const { return mu_; }

  Vec observable_occupation() const {
    Vec f(space_.dim);
    for (int c = 0; c < space_.dim; ++c) f(c) = (c & 1u);
    return f;
  }
  Vec observable_drift() const {
    Vec f(space_.dim);
    for (int c = 0; c < space_.dim; ++c) f(c) = 2.0 * eps_ * (2.0 * (c & 1u) - 1.0);
    return f;
  }

  // T_n for the given observable.
  double term(int n, const Vec& f) const {
    if (n < 0 || n > 6) throw ValidationError("series index n must lie in [0, 6]");
    const int K = static_cast<int>(t_.size());
    std::vector<Vec> g(K);
    g[0] = f;
    for (int k = 0; k + 1 < K; ++k) g[k + 1] = prop_[k] * g[k];
    for (int level = 0; level < n; ++level) {
      std::vector<Vec> h(K);
      for (int k = 0; k < K; ++k) h[k] = Lhat_ * g[k];
      std::vector<Vec> J(K);
      J[0] = Vec::Zero(space_.dim);
      for (int k = 0; k + 1 < K; ++k) {
        double half = 0.5 * (t_[k + 1] - t_[k]);
        J[k + 1] = prop_[k] * (J[k] + half * h[k]) + half * h[k + 1];
      }
      g = std::move(J);
    }
    double integral = 0.0, phi_prev = mu_.dot(Lhat_ * g[0]), phi_last = 0.0;
    for (int k = 1; k < K; ++k) {
      double phi = mu_.dot(Lhat_ * g[k]);
      integral += 0.5 * (t_[k] - t_[k - 1]) * (phi_prev + phi);
      phi_prev = phi;
      if (k == K - 1) phi_last = phi;
    }
    if (std::abs(phi_last) > 1e-14)
      throw SimulationError("Dyson term did not decay below 1e-14 at the grid horizon");
    return integral;
  }

  // (2|eps|/gap)^(n+1) * ||f - mu(f)||_{L2(mu)}.
  double term_bound(int n, const Vec& f) const {
    double centered = centered_l2(f);
    return std::pow(2.0 * std::abs(eps_) / gap_, n + 1) * centered;
  }

  // sum_{n > N} of the term bounds; the geometric majorant diverges when
  // 2|eps| >= gap, in which case the tail bound is +infinity (comparisons
  // against it are then vacuous, the per-term bounds stay finite).
  double tail_bound(int N, const Vec& f) const {
    double r = 2.0 * std::abs(eps_) / gap_;
    if (r >= 1.0) return std::numeric_limits<double>::infinity();
    return centered_l2(f) * std::pow(r, N + 2) / (1.0 - r);
  }

  // mu(f) + sum_{n=0..N} T_n.
  double partial_sum(int N, const Vec& f) const {
    double acc = mu_.dot(f);
    for (int n = 0; n <= N; ++n) acc += term(n, f);
    return acc;
  }

  double centered_l2(const Vec& f) const {
    double m = mu_.dot(f);
    return std::sqrt((mu_.array() * (f.array() - m).square()).sum());
  }

 private:
  StateSpace space_;
  double eps_;
  Vec mu_;
  Mat Lhat_;
  double gap_ = 0.0;
  std::vector<double> t_;
  std::vector<Mat> prop_;
};

// Odd-order stationary-measure structure: both displayed residuals vanish for
// reversible, translation-commuting dynamics.
struct EvenTermResiduals {
  double index0 = 0.0;
  double index2 = 0.0;
};

inline EvenTermResiduals check_even_terms(const EnvKind& kind, int L, double rho, double eps,
                                          int grid_points = 200) {
  DysonSeries ds(kind, L, rho, eps, grid_points);
  Vec j = ds.observable_drift();
  return {ds.term(0, j), ds.term(2, j)};
}

// Cubic velocity coefficient via the resolvent:
//   kappa = -8 mu( (2 eta(0)-1) g^2 ),   (-G0) g = eta(1) - eta(-1), mu(g) = 0.
// The rank-one shift -G0 + 1 mu^T is nonsingular and its solution is the
// mean-zero one.
inline double resolvent_kappa(const EnvKind& kind, int L, double rho) {
  StateSpace s = StateSpace::make(kind, L, rho);
  if (s.dim > kDenseSolveMax) throw ValidationError("resolvent_kappa needs L <= 12");
  Vec mu = measure_vector(s);
  Mat A = -Mat(build_ew_generator(s, 0.0));
  A += Vec::Ones(s.dim) * mu.transpose();
  Vec h(s.dim);
  for (int c = 0; c < s.dim; ++c) h(c) = s.bit(c, 1) - s.bit(c, L - 1);
  Eigen::PartialPivLU<Mat> lu(A);
  Vec g = lu.solve(h);
  g += lu.solve(h - A * g);
  double kappa = 0.0;
  for (int c = 0; c < s.dim; ++c) kappa += mu(c) * (2.0 * (c & 1u) - 1.0) * g(c) * g(c);
  return -8.0 * kappa;
}

}  // namespace eastwalk::exact
