#include <cmath>

#include <gtest/gtest.h>

#include "kahlercap/capacities.hpp"
#include "kahlercap/error.hpp"
#include "oracles.hpp"

using namespace kahlercap;

namespace {

const Atlas& atlas129() {
  static const Atlas a = build_atlas(2.0, 129);
  return a;
}

}  // namespace

TEST(MaCapacity, BallsMatchClosedForm) {
  for (double R : {0.25, 0.5, 1.0}) {
    const CapacityValue c = ma_capacity(SetSpec::ball(0.0, R), atlas129());
    EXPECT_NEAR(c.value, oracle::ball_capacity(R), 0.02 * oracle::ball_capacity(R)) << R;
    EXPECT_NEAR(c.total_mass, 1.0, 5e-3);
  }
}

TEST(MaCapacity, EmptyIsPolarWithZeroCapacity) {
  const CapacityValue c = ma_capacity(SetSpec::empty(), atlas129());
  EXPECT_TRUE(c.polar);
  EXPECT_EQ(c.value, 0.0);
}

TEST(MaCapacity, FullSpaceIsOne) {
  // h*_X = -1, energy 1 against omega.
  EXPECT_NEAR(ma_capacity(SetSpec::full(), atlas129()).value, 1.0, 5e-3);
}

TEST(MaCapacity, MonotoneUnderInclusion) {
  double prev = 0.0;
  for (double R : {0.05, 0.1, 0.2, 0.3}) {
    const double c = ma_capacity(SetSpec::ball(cplx(0.1, 0.2), R), atlas129()).value;
    EXPECT_GE(c, prev - 1e-9) << R;
    prev = c;
  }
}

TEST(MaCapacity, Subadditive) {
  const SetSpec a = SetSpec::ball(0.0, 0.15), b = SetSpec::ball(cplx(0.6, 0.0), 0.15);
  const double ca = ma_capacity(a, atlas129()).value, cb = ma_capacity(b, atlas129()).value;
  const double cu = ma_capacity(SetSpec::unite({a, b}), atlas129()).value;
  EXPECT_LE(cu, ca + cb + 5e-3);
  EXPECT_GE(cu, std::max(ca, cb) - 5e-3);
}

TEST(Bruteforce, StaysBelowEnvelopeCapacity) {
  const SetSpec B = SetSpec::ball(0.0, 0.25);
  const double cap = ma_capacity(B, atlas129()).value;
  const BruteforceResult b = ma_capacity_bruteforce(B, atlas129(), 12, 42);
  EXPECT_GT(b.certified, 0u);
  EXPECT_LE(b.value, cap + 5e-3);
  EXPECT_GT(b.value, 0.5 * cap);
}

TEST(Bruteforce, SeedIsReproducible) {
  const SetSpec B = SetSpec::ball(cplx(0.2), 0.3);
  const BruteforceResult x = ma_capacity_bruteforce(B, atlas129(), 6, 7);
  const BruteforceResult y = ma_capacity_bruteforce(B, atlas129(), 6, 7);
  EXPECT_EQ(x.value, y.value);
  EXPECT_EQ(x.best, y.best);
}

TEST(Alexander, BallsMatchClosedForm) {
  for (double R : {0.25, 1.0, 4.0}) {
    EXPECT_NEAR(alexander_capacity(SetSpec::ball(0.0, R), atlas129()).value, oracle::ball_alexander(R), 2e-3) << R;
  }
}

TEST(Alexander, MonotoneUnderInclusion) {
  const double small = alexander_capacity(SetSpec::annulus(0.0, 0.5, 0.8), atlas129()).value;
  const double big = alexander_capacity(SetSpec::annulus(0.0, 0.4, 1.2), atlas129()).value;
  EXPECT_LE(small, big + 1e-9);
}

TEST(Alexander, RotationInvariant) {
  const SetSpec K = SetSpec::ball(cplx(0.6, 0.1), 0.3);
  const double t = alexander_capacity(K, atlas129()).value;
  for (double angle : {0.4, 1.3}) {
    EXPECT_NEAR(alexander_capacity(SetSpec::rotation(angle, K), atlas129()).value, t, 1e-2) << angle;
  }
}

TEST(Alexander, RealLineIsAGreatCircle) {
  // The closure of R is the image of the unit circle under a unitary map.
  EXPECT_NEAR(alexander_capacity(SetSpec::real_line(), atlas129()).value, 1.0 / std::sqrt(2.0), 2e-3);
}

TEST(Alexander, FullSpaceIsOne) {
  EXPECT_NEAR(alexander_capacity(SetSpec::full(), atlas129()).value, 1.0, 1e-9);
}

TEST(Sublevel, DecayBoundsForFsPotential) {
  // {-h < -t} is the complement of a ball: T = e^{-t} exactly.
  const QpshField fs = kernel_potential(atlas129(), {Atom{from_chart(cplx(0.0), 1), 1.0}});
  const SublevelReport r = sublevel_capacity_decay(fs, {1.0, 2.0});
  EXPECT_TRUE(r.passes);
  for (const auto& row : r.rows) EXPECT_NEAR(row.t_alex, std::exp(-row.t), 5e-3) << row.t;
}

TEST(Sublevel, ExactEvaluatorAgrees) {
  const QpshField fs = kernel_potential(atlas129(), {Atom{from_chart(cplx(0.0), 1), 1.0}});
  const FieldEvaluator exact = [](const ProjectivePoint& p) {
    const double n0 = std::norm(p.coords[0]), n1 = std::norm(p.coords[1]);
    return 0.5 * std::log(n1 / (n0 + n1));
  };
  const SublevelReport a = sublevel_capacity_decay(fs, {1.5}, 5e-2, exact);
  const SublevelReport b = sublevel_capacity_decay(fs, {1.5});
  EXPECT_NEAR(a.rows[0].t_alex, b.rows[0].t_alex, 5e-3);
}

TEST(Comparison, UpperBoundAndFittedConstant) {
  std::vector<SetSpec> fam;
  for (double R : {0.25, 0.5, 1.0}) fam.push_back(SetSpec::ball(0.0, R));
  const CapacityComparison c = capacity_comparison(fam, {"a", "b", "c"}, atlas129());
  EXPECT_TRUE(c.upper_holds);
  EXPECT_GT(c.fitted_a, 0.0);
  EXPECT_TRUE(std::isfinite(c.fitted_a));
  for (const auto& row : c.rows) EXPECT_LE(row.t_alex, std::exp(-row.a_needed / row.cap) + 1e-12);
}

TEST(Comparison, PolarMemberIsAnError) {
  try {
    capacity_comparison({SetSpec::empty()}, {"empty"}, atlas129());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PolarSet);
  }
}

TEST(Siciak, BracketHoldsForBalls) {
  for (double R : {0.25, 0.9}) {
    const SiciakBracket s = siciak_bracket(SetSpec::ball(0.0, R), atlas129());
    EXPECT_TRUE(s.holds) << R;
    EXPECT_NEAR(s.t_ball, R, 2e-2) << R;
  }
}

TEST(Josefson, ShallowPotentialIsUnderresolved) {
  const QpshField v = QpshField::sample(atlas129(), [](cplx, int) { return -0.5; }, true);
  try {
    josefson_potential(v, 0.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuadratureUnderresolved);
  }
}

TEST(Josefson, LogPoleGivesBoundedCertifiedField) {
  const Atlas& a = atlas129();
  const cplx z0(0.125, 0.0625);
  const QpshField v = QpshField::sample(
      a,
      [z0](cplx z, int c) {
        if (c == 1 && z == cplx(0.0)) return 0.0;
        const cplx zz = c == 0 ? z : 1.0 / z;
        return std::min(std::max(std::log(std::abs(zz - z0)), -30.0), 0.0);
      });
  const JosefsonResult j = josefson_potential(v, 0.25);
  EXPECT_GE(j.k_max, 3);
  EXPECT_FALSE(j.field.has_sentinel());
  EXPECT_LE(j.field.sup(), 1e-12);
  EXPECT_TRUE(defect_report(j.field).certified);
}

TEST(Josefson, BadEpsilon) {
  const QpshField v = QpshField::sample(atlas129(), [](cplx, int) { return -0.5; }, true);
  try {
    josefson_potential(v, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}
