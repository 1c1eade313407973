#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "eastwalk/exact.hpp"

using namespace eastwalk;
using namespace eastwalk::exact;

namespace {

Vec stationary_eps(const StateSpace& s, double eps) {
  return stationary_distribution(build_ew_generator(s, eps));
}

// Cubic velocity coefficient from exact velocities on the grid {s, 2s, 3s}:
// odd-quintic interpolation of v(e)/e as a function of z = e^2.
double fit_b_unconstrained(int L, double s) {
  auto v = [&](double e) { return exact_velocity(EnvKind::east(), L, 0.5, e); };
  double z1 = s * s, z2 = 4 * s * s, z3 = 9 * s * s;
  double y1 = v(s) / s, y2 = v(2 * s) / (2 * s), y3 = v(3 * s) / (3 * s);
  double d12 = (y2 - y1) / (z2 - z1), d23 = (y3 - y2) / (z3 - z2);
  double dd = (d23 - d12) / (z3 - z1);
  return d12 - (z1 + z2) * dd;
}

// Same extraction with the linear coefficient pinned to the exact slope
// 2(2 mu(eta0) - 1); the remaining (b, c, d) interpolate on z = e^2.
double fit_b_constrained(const EnvKind& kind, int L, double rho, const double (&es)[3]) {
  StateSpace s = StateSpace::make(kind, L, rho);
  Vec mu = measure_vector(s);
  double a = 2.0 * (2.0 * mean_occupation_at_origin(s, mu) - 1.0);
  auto v = [&](double e) { return exact_velocity(kind, L, rho, e); };
  double b = 0.0;
  for (int i = 0; i < 3; ++i) {
    double zi = es[i] * es[i];
    double gi = ((v(es[i]) - v(-es[i])) / 2.0 / es[i] - a) / zi;
    double w = 1.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) w *= (es[j] * es[j]) / (es[j] * es[j] - zi);
    b += gi * w;
  }
  return b;
}

}  // namespace

TEST(StateSpace, DimensionsAndGuards) {
  EXPECT_EQ(StateSpace::make(EnvKind::east(), 4, 0.5).dim, 15);  // all-ones excluded
  EXPECT_EQ(StateSpace::make(EnvKind::fa1f(), 5, 0.5).dim, 31);
  EXPECT_EQ(StateSpace::make(EnvKind::spin_flip(), 4, 0.5).dim, 16);
  EXPECT_THROW(StateSpace::make(EnvKind::east(), 2, 0.5), ValidationError);
  EXPECT_THROW(StateSpace::make(EnvKind::east(), 15, 0.5), ValidationError);
  EXPECT_THROW(StateSpace::make(EnvKind::east(), 6, 0.0), ValidationError);

  StateSpace s = StateSpace::make(EnvKind::east(), 4, 0.5);
  EXPECT_EQ(s.bit(0b0110, 1), 1);
  EXPECT_EQ(s.bit(0b0110, 0), 0);
  EXPECT_EQ(s.rotate_down(s.rotate_up(0b0110)), 0b0110u);
  // East constraint at x reads x+1.
  EXPECT_EQ(s.constraint_of(0b0010, 0), 0);
  EXPECT_EQ(s.constraint_of(0b0010, 1), 1);
}

TEST(Generator, RefreshStructureOnTinyRing) {
  // Unconstrained refresh at clock rate gamma with a Bernoulli(rho) coin:
  // every site can change, toward-value rate gamma*rho or gamma*(1-rho).
  const double gamma = 0.7;
  StateSpace s = StateSpace::make(EnvKind::spin_flip(gamma), 3, 0.5);
  Mat G = Mat(build_env_generator(s));
  ASSERT_EQ(G.rows(), 8);
  for (int c = 0; c < 8; ++c) {
    int off = 0;
    double row = 0.0;
    for (int d = 0; d < 8; ++d) {
      row += G(c, d);
      if (d == c) continue;
      if (G(c, d) != 0.0) {
        ++off;
        EXPECT_DOUBLE_EQ(G(c, d), gamma * 0.5);
      }
    }
    EXPECT_EQ(off, 3);  // one flip target per site
    EXPECT_NEAR(row, 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(G(c, c), -3.0 * gamma * 0.5);
  }
}

TEST(Generator, DetailedBalanceAndZeroRowSums) {
  struct Case {
    EnvKind kind;
    int L;
    double rho;
  } cases[] = {{EnvKind::east(), 5, 0.3},
               {EnvKind::west(), 5, 0.7},
               {EnvKind::fa1f(), 4, 0.6},
               {EnvKind::spin_flip(1.3), 4, 0.4}};
  for (const auto& c : cases) {
    StateSpace s = StateSpace::make(c.kind, c.L, c.rho);
    Mat G = Mat(build_env_generator(s));
    Vec mu = measure_vector(s);
    EXPECT_NEAR(mu.sum(), 1.0, 1e-14);
    Mat flux = mu.asDiagonal() * G;
    EXPECT_LT((flux - flux.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((G * Vec::Ones(s.dim)).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Stationary, UnperturbedLawIsTheProductMeasure) {
  for (const EnvKind& kind :
       {EnvKind::east(), EnvKind::west(), EnvKind::fa1f(), EnvKind::spin_flip()}) {
    StateSpace s = StateSpace::make(kind, 5, 0.35);
    Vec mu = measure_vector(s);
    Vec st = stationary_eps(s, 0.0);
    EXPECT_LT((st - mu).cwiseAbs().maxCoeff(), 1e-12) << to_string(kind.family);
  }
  // Conditioned single-site mean on constrained rings, plain rho otherwise.
  StateSpace e6 = StateSpace::make(EnvKind::east(), 6, 0.5);
  EXPECT_NEAR(mean_occupation_at_origin(e6, measure_vector(e6)),
              (0.5 - std::pow(0.5, 6)) / (1.0 - std::pow(0.5, 6)), 1e-15);
  EXPECT_NEAR(mean_occupation_at_origin(e6, measure_vector(e6)), 0.49206349206349204, 1e-15);
  StateSpace i6 = StateSpace::make(EnvKind::spin_flip(), 6, 0.35);
  EXPECT_NEAR(mean_occupation_at_origin(i6, measure_vector(i6)), 0.35, 1e-15);
}

TEST(Stationary, PerturbedLawIsPositiveStationaryAndBiasDependent) {
  StateSpace s = StateSpace::make(EnvKind::east(), 6, 0.5);
  SpMat G = build_ew_generator(s, 0.1);
  Vec mu = stationary_distribution(G);
  EXPECT_NEAR(mu.sum(), 1.0, 1e-13);
  EXPECT_GT(mu.minCoeff(), 0.0);
  EXPECT_LT((G.transpose() * mu).cwiseAbs().maxCoeff(), 1e-12);

  Vec mum = stationary_eps(s, -0.1);
  EXPECT_GT(tv_distance(mu, mum), 1e-4);   // the law itself is not eps-symmetric
  EXPECT_DOUBLE_EQ(tv_distance(mu, mu), 0.0);
}

TEST(SpectralGap, PinnedAndStructuralValues) {
  StateSpace e6 = StateSpace::make(EnvKind::east(), 6, 0.5);
  double g6 = spectral_gap(build_env_generator(e6), measure_vector(e6));
  EXPECT_NEAR(g6, 0.066263987803995159, 1e-12);

  StateSpace e8 = StateSpace::make(EnvKind::east(), 8, 0.5);
  double g8 = spectral_gap(build_env_generator(e8), measure_vector(e8));
  EXPECT_NEAR(g8, 0.053652009224998742, 1e-12);
  EXPECT_LT(std::abs(g8 - g6), 0.2 * g6);  // mild finite-size drift

  // Reflection symmetry: West has the same spectrum as East.
  StateSpace w6 = StateSpace::make(EnvKind::west(), 6, 0.5);
  double gw = spectral_gap(build_env_generator(w6), measure_vector(w6));
  EXPECT_NEAR(gw, g6, 1e-10);

  // Refresh dynamics: gap equals the clock rate at every size and density.
  for (double gamma : {0.8, 1.0}) {
    StateSpace i5 = StateSpace::make(EnvKind::spin_flip(gamma), 5, 0.3);
    EXPECT_NEAR(spectral_gap(build_env_generator(i5), measure_vector(i5)), gamma, 1e-9);
  }

  StateSpace f5 = StateSpace::make(EnvKind::fa1f(), 5, 0.4);
  EXPECT_GT(spectral_gap(build_env_generator(f5), measure_vector(f5)), 0.0);
}

TEST(Velocity, PinnedValueAntisymmetryAndMirror) {
  EXPECT_NEAR(exact_velocity(EnvKind::east(), 6, 0.5, 0.1), -0.0042453483986595103, 1e-14);
  EXPECT_DOUBLE_EQ(exact_velocity(EnvKind::east(), 6, 0.5, 0.0), 0.0);

  for (const EnvKind& kind : {EnvKind::east(), EnvKind::fa1f(), EnvKind::spin_flip()})
    for (double rho : {0.3, 0.7})
      for (double eps : {0.05, 0.2}) {
        double vp = exact_velocity(kind, 5, rho, eps);
        double vm = exact_velocity(kind, 5, rho, -eps);
        EXPECT_LT(std::abs(vp + vm), 1e-10)
            << to_string(kind.family) << " rho=" << rho << " eps=" << eps;
      }

  for (double rho : {0.3, 0.5, 0.7})
    for (double eps : {0.1, 0.3}) {
      double ve = exact_velocity(EnvKind::east(), 6, rho, eps);
      double vw = exact_velocity(EnvKind::west(), 6, rho, eps);
      EXPECT_LT(std::abs(ve - vw), 1e-10) << "rho=" << rho << " eps=" << eps;
    }
}

TEST(Velocity, SignsFollowTheLeadingTerm) {
  // v ~ 2 eps (2 mu(eta0) - 1): positive above half filling, negative below.
  EXPECT_GT(exact_velocity(EnvKind::east(), 6, 0.7, 0.1), 0.0);
  EXPECT_LT(exact_velocity(EnvKind::east(), 6, 0.3, 0.1), 0.0);
  // At rho = 1/2 the conditioned finite-ring mean sits below 1/2, so the
  // velocity is slightly negative.
  EXPECT_LT(exact_velocity(EnvKind::east(), 6, 0.5, 0.1), 0.0);
}

TEST(Velocity, IndependentRefreshMovesNothing) {
  for (double eps : {0.1, 0.3, 0.5})
    EXPECT_LT(std::abs(exact_velocity(EnvKind::spin_flip(), 6, 0.5, eps)), 1e-10);
}

TEST(Series, TermsScaleExactlyWithBiasPower) {
  // Every term carries n+1 factors of the eps-linear perturbation; doubling
  // eps from a power of two multiplies T_n by exactly 2^(n+1) in floating
  // point (identical operation sequence, scaled by powers of two).
  DysonSeries d1(EnvKind::east(), 6, 0.5, 0.02);
  DysonSeries d2(EnvKind::east(), 6, 0.5, 0.04);
  Vec f1 = d1.observable_occupation();
  Vec f2 = d2.observable_occupation();
  for (int n = 0; n <= 3; ++n)
    EXPECT_DOUBLE_EQ(d2.term(n, f2), std::pow(2.0, n + 1) * d1.term(n, f1)) << "n=" << n;
}

TEST(Series, TermsRespectTheirBounds) {
  for (double eps : {0.01, 0.05}) {
    DysonSeries ds(EnvKind::east(), 6, 0.5, eps);
    Vec f = ds.observable_occupation();
    for (int n = 0; n <= 4; ++n)
      EXPECT_LE(std::abs(ds.term(n, f)), ds.term_bound(n, f) + 1e-8)
          << "eps=" << eps << " n=" << n;
  }
}

TEST(Series, PartialSumMatchesTheExactLawInsideTheRadius) {
  // 2 eps / gap = 0.30 at eps = 0.01: the geometric tail is finite.
  DysonSeries ds(EnvKind::east(), 6, 0.5, 0.01);
  Vec f = ds.observable_occupation();
  StateSpace s = StateSpace::make(EnvKind::east(), 6, 0.5);
  double exact = mean_occupation_at_origin(s, stationary_eps(s, 0.01));
  double tail = ds.tail_bound(4, f);
  EXPECT_TRUE(std::isfinite(tail));
  EXPECT_LE(std::abs(ds.partial_sum(4, f) - exact), tail + 1e-7);
  EXPECT_LE(std::abs(ds.partial_sum(4, f) - exact), 1e-7);  // measured 1.4e-8
}

TEST(Series, TailBoundDivergesOutsideTheRadius) {
  // 2 eps / gap = 1.51 at eps = 0.05 on the L = 6 ring: the geometric
  // majorant diverges and the tail bound reports +infinity.
  DysonSeries ds(EnvKind::east(), 6, 0.5, 0.05);
  Vec f = ds.observable_occupation();
  EXPECT_TRUE(std::isinf(ds.tail_bound(0, f)));
  EXPECT_TRUE(std::isfinite(ds.term_bound(5, f)));  // per-term bounds stay finite
}

TEST(Series, GuardsHorizonGridAndSize) {
  EXPECT_THROW(DysonSeries(EnvKind::east(), 6, 0.5, 0.05, 15), ValidationError);
  EXPECT_THROW(DysonSeries(EnvKind::east(), 13, 0.5, 0.05), ValidationError);
  DysonSeries short_run(EnvKind::east(), 6, 0.5, 0.05, 200, 1.0);
  Vec f = short_run.observable_occupation();
  EXPECT_THROW(short_run.term(1, f), SimulationError);  // no decay by t = 1
  DysonSeries ok(EnvKind::east(), 6, 0.5, 0.05);
  EXPECT_THROW(ok.term(7, f), ValidationError);
}

TEST(Series, EvenDriftTermsVanish) {
  EvenTermResiduals east = check_even_terms(EnvKind::east(), 6, 0.5, 0.05);
  EXPECT_LT(std::abs(east.index0), 1e-7);
  EXPECT_LT(std::abs(east.index2), 1e-6);
  EvenTermResiduals isf = check_even_terms(EnvKind::spin_flip(), 6, 0.5, 0.05);
  EXPECT_LT(std::abs(isf.index0), 1e-7);
  EXPECT_LT(std::abs(isf.index2), 1e-6);
}

TEST(Kappa, PinnedResolventValues) {
  EXPECT_NEAR(resolvent_kappa(EnvKind::east(), 6, 0.5), -1.0904742792275364, 1e-9);
  EXPECT_LT(std::abs(resolvent_kappa(EnvKind::spin_flip(), 6, 0.5)), 1e-10);
  EXPECT_THROW(resolvent_kappa(EnvKind::east(), 13, 0.5), ValidationError);
}

TEST(Kappa, MatchesTheCubicTermOfTheSeries) {
  // T_1 with the drift observable is kappa * eps^3 up to quadrature error.
  DysonSeries ds(EnvKind::east(), 6, 0.5, 0.05, 400);
  Vec j = ds.observable_drift();
  double kappa = resolvent_kappa(EnvKind::east(), 6, 0.5);
  EXPECT_NEAR(ds.term(1, j) / std::pow(0.05, 3), kappa, 2e-4);  // measured 1.4e-4
}

TEST(Kappa, MatchesOddPolynomialFitsOfExactVelocities) {
  // Constrained fit (linear slope pinned to the exact value) on the coarse
  // grid: the eps^9 leakage is ~4e-8 at L=6.
  double fit6 = fit_b_constrained(EnvKind::east(), 6, 0.5, {0.02, 0.04, 0.06});
  EXPECT_NEAR(fit6, resolvent_kappa(EnvKind::east(), 6, 0.5), 1e-6);

  // Unconstrained quintic interpolation converges at the grid-refinement
  // rate; at {0.005, 0.01, 0.015} the L=8 leakage is ~9e-7.
  EXPECT_NEAR(fit_b_unconstrained(8, 0.005), -1.3912977302748195, 2e-6);
}
