#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kahlercap/capacities.hpp"
#include "kahlercap/error.hpp"
#include "kahlercap/sections.hpp"
#include "oracles.hpp"

using namespace kahlercap;

namespace {

const Atlas& cloud65() {
  static const Atlas a = build_atlas(2.0, 65);
  return a;
}

HomPoly random_poly(int N, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  HomPoly p(1, N);
  for (int k = 0; k <= N; ++k) p.set({k, N - k}, cplx(g(rng), g(rng)));
  return p;
}

}  // namespace

TEST(HomPoly, EvaluationAndProduct) {
  HomPoly p(1, 2);
  p.set({2, 0}, 1.0);
  p.set({0, 2}, cplx(0.0, 2.0));
  const std::vector<cplx> x{cplx(1.0, 1.0), cplx(2.0, 0.0)};
  EXPECT_NEAR(std::abs(p(x) - (x[0] * x[0] + cplx(0.0, 2.0) * x[1] * x[1])), 0.0, 1e-14);
  const HomPoly q = p * p;
  EXPECT_EQ(q.degree(), 4);
  EXPECT_NEAR(std::abs(q(x) - p(x) * p(x)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(p.scaled(3.0)(x) - 3.0 * p(x)), 0.0, 1e-13);
}

TEST(HomPoly, WrongDegreeRejected) {
  HomPoly p(1, 2);
  try {
    p.set({1, 0}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(HomPoly, FsNormIsScaleInvariant) {
  std::mt19937_64 rng(4);
  const HomPoly p = random_poly(3, rng);
  const std::vector<cplx> x{cplx(0.3, 0.1), cplx(-0.7, 0.2)};
  std::vector<cplx> y = x;
  for (cplx& v : y) v *= cplx(2.0, -1.5);
  EXPECT_NEAR(p.fs_norm(x), p.fs_norm(y), 1e-12);
}

TEST(Tcheb, BallsAreExactPowers) {
  for (double R : {0.5, 1.0, 2.0}) {
    const double t = oracle::ball_alexander(R);
    for (int N : {1, 4, 16}) {
      EXPECT_NEAR(tcheb_constant(SetSpec::ball(0.0, R), N, cloud65()).value, std::pow(t, N), 1e-9) << R << " " << N;
    }
  }
}

TEST(Tcheb, RootsDoNotIncreaseForCircledSets) {
  for (const SetSpec& K : {SetSpec::ball(0.0, 0.7), SetSpec::annulus(0.0, 0.5, 1.0),
                           SetSpec::unite({SetSpec::ball(0.0, 0.2), SetSpec::annulus(0.0, 1.0, 1.5)})}) {
    const SectionsAlexander s = alexander_from_sections(K, 32, cloud65());
    for (std::size_t k = 1; k < s.roots.size(); ++k) EXPECT_LE(s.roots[k], s.roots[k - 1] + 1e-9);
  }
}

TEST(Tcheb, SectionsAgreeWithEnvelopeForAnnulus) {
  const SetSpec K = SetSpec::annulus(0.0, 0.5, 1.0);
  const double sec = alexander_from_sections(K, 64, cloud65()).value;
  const double env = alexander_capacity(K, build_atlas(2.0, 129)).value;
  EXPECT_NEAR(sec, env, 0.05 * env);
}

TEST(Tcheb, SubgradientDoesNotBeatTheExactOptimum) {
  const SetSpec B = SetSpec::ball(0.0, 1.0);
  const double exact = tcheb_constant(B, 4, cloud65(), TchebStrategy::Monomial).value;
  const double sub = tcheb_constant(B, 4, cloud65(), TchebStrategy::Subgradient).value;
  // The cloud sup can only underestimate the true sup, and only by a little.
  EXPECT_GE(sub, exact * 0.98);
}

TEST(Tcheb, BernsteinWalshInequality) {
  // N^{-1} log(|s| / sup_K |s|) <= V*_K for any section s.
  const Atlas a = build_atlas(2.0, 65);
  const SetSpec K = SetSpec::ball(cplx(0.2, 0.1), 0.5);
  const EnvelopeResult V = global_extremal(K, a);
  const SectionCloud cloud = SectionCloud::from_atlas(a);
  std::mt19937_64 rng(8);
  for (int N : {1, 3, 6}) {
    const HomPoly s = random_poly(N, rng);
    const double supK = section_supnorm(s, cloud, K);
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      for (int j = 0; j < g.resolution; j += 3) {
        for (int i = 0; i < g.resolution; i += 3) {
          const ProjectivePoint p = from_chart(g.node(i, j), c);
          const double lhs = std::log(s.fs_norm(p.coords) / supK) / N;
          EXPECT_LE(lhs, V.field.at(c, i, j) + 2e-2);
        }
      }
    }
  }
}

TEST(Supnorm, EmptyRegion) {
  HomPoly p(1, 1);
  p.set({1, 0}, 1.0);
  try {
    section_supnorm(p, SectionCloud::from_atlas(cloud65()), SetSpec::empty());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyRegion);
  }
}

TEST(HullRadius, BallsMatchAlexander) {
  for (double R : {0.5, 1.0}) {
    EXPECT_NEAR(hull_radius(SetSpec::ball(0.0, R), 32, cloud65()).value, oracle::ball_alexander(R), 0.05 * oracle::ball_alexander(R));
  }
}

TEST(MuNormalization, ScalingShiftsTheLogMean) {
  const DiscreteMeasure mu = DiscreteMeasure::fs_volume(build_atlas(2.0, 64));
  std::mt19937_64 rng(12);
  const HomPoly s = random_poly(3, rng);
  const double m = mu_log_mean(s, mu);
  EXPECT_NEAR(mu_log_mean(s.scaled(cplx(0.0, 2.0)), mu), m + std::log(2.0), 1e-9);
  for (double A : {0.0, 0.3}) {
    EXPECT_NEAR(mu_log_mean(mu_normalize(s, mu, A), mu), 3.0 * A, 1e-9);
  }
  // Normalizing a product gives the product of normalizations up to a unit.
  const HomPoly t = random_poly(2, rng);
  const HomPoly lhs = mu_normalize(s * t, mu, 0.0);
  const HomPoly rhs = mu_normalize(s, mu, 0.0) * mu_normalize(t, mu, 0.0);
  const std::vector<cplx> x{cplx(0.4, 0.1), cplx(0.2, -0.9)};
  EXPECT_NEAR(std::abs(lhs(x)), std::abs(rhs(x)), 1e-9 * std::abs(rhs(x)));
}

TEST(MuNormalization, VanishingAtAnAtomIsInfeasible) {
  const Atlas a = build_atlas(2.0, 33);
  const DiscreteMeasure mu = DiscreteMeasure::dirac(a, 0, 16, 16);  // z = 0
  HomPoly s(1, 1);
  s.set({1, 0}, 1.0);
  EXPECT_TRUE(std::isinf(mu_log_mean(s, mu)));
  try {
    mu_normalize(s, mu, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NormalizationInfeasible);
  }
}

TEST(MuTcheb, WholeSpaceAndSubsets) {
  const DiscreteMeasure mu = DiscreteMeasure::fs_volume(build_atlas(2.0, 64));
  const double x = mu_A_tcheb(SetSpec::full(), 4, mu, 0.0).root;
  const double b = mu_A_tcheb(SetSpec::ball(0.0, 0.5), 4, mu, 0.0).root;
  EXPECT_GE(x, b - 1e-9);
}

TEST(Bergman, ZeroFieldIsFixed) {
  const QpshField z = QpshField::sample(build_atlas(2.0, 65), [](cplx, int) { return 0.0; }, true);
  const BergmanResult b = bergman_regularize(z, 8, 0);
  EXPECT_EQ(b.rank, 9u);
  EXPECT_NEAR(b.field.sup(), 0.0, 1e-6);
  EXPECT_NEAR(b.field.inf(), 0.0, 1e-6);
}

TEST(Bergman, SandwichOnRadialWell) {
  const Atlas a = build_atlas(2.0, 129);
  const QpshField well = QpshField::sample(
      a,
      [](cplx z, int c) {
        const double r = oracle::chart_radius(z, c);
        return std::isinf(r) ? 0.0 : -0.25 * std::exp(-r * r);
      },
      true);
  const SandwichReport s = bergman_sandwich(well, {4, 8, 16}, 2, 0.25);
  EXPECT_TRUE(s.l1_monotone);
  EXPECT_TRUE(s.lower_bounded);
  EXPECT_TRUE(s.upper_bounded);
}
