#include <cmath>

#include <gtest/gtest.h>

#include "kahlercap/envelopes.hpp"
#include "kahlercap/error.hpp"
#include "oracles.hpp"

using namespace kahlercap;

namespace {

double sup_error_to_ball_extremal(const EnvelopeResult& r, double R) {
  const Atlas& a = r.field.atlas();
  double err = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        err = std::max(err, std::abs(r.field.at(c, i, j) - oracle::ball_extremal(R, oracle::chart_radius(g.node(i, j), c))));
      }
    }
  }
  return err;
}

}  // namespace

TEST(GlobalExtremal, BallsMatchClosedForm) {
  const Atlas a = build_atlas(4.0, 129);
  for (double R : {0.5, 1.0, 2.0}) {
    const EnvelopeResult r = global_extremal(SetSpec::ball(0.0, R), a);
    EXPECT_LT(sup_error_to_ball_extremal(r, R), 2e-2) << R;
    EXPECT_NEAR(std::exp(-r.sup_value), oracle::ball_alexander(R), 2e-3) << R;
    EXPECT_FALSE(r.polar_flag);
  }
}

TEST(GlobalExtremal, SupportAndMass) {
  const Atlas a = build_atlas(2.0, 129);
  const EnvelopeResult r = global_extremal(SetSpec::ball(cplx(0.3, -0.2), 0.6), a);
  const SupportReport s = support_and_mass_check(r);
  EXPECT_TRUE(s.passes) << s.forbidden_mass << " " << s.total_mass;
  EXPECT_NEAR(s.set_mass, 1.0, 5e-3);
}

TEST(GlobalExtremal, SingleNodeIsPolar) {
  const Atlas a = build_atlas(2.0, 65);
  const EnvelopeResult r = global_extremal(SetSpec::single_node(a, 0, 32, 32), a);
  EXPECT_TRUE(r.polar_flag);
}

TEST(GlobalExtremal, FullSpaceGivesZero) {
  const Atlas a = build_atlas(2.0, 65);
  const EnvelopeResult r = global_extremal(SetSpec::full(), a);
  EXPECT_NEAR(r.field.sup(), 0.0, 1e-12);
  EXPECT_NEAR(r.field.inf(), 0.0, 1e-12);
}

TEST(RelativeExtremal, MatchesToricProfile) {
  const Atlas a = build_atlas(2.0, 129);
  for (double R : {0.25, 1.0}) {
    const SetSpec B = SetSpec::ball(0.0, R);
    const EnvelopeResult r = relative_extremal(B, a);
    const ToricEnvelope t = toric_envelope(B, 1, EnvelopeKind::Relative);
    double err = 0.0;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      for (int j = 0; j < g.resolution; ++j) {
        for (int i = 0; i < g.resolution; ++i) {
          err = std::max(err, std::abs(r.field.at(c, i, j) - t.phi(oracle::chart_radius(g.node(i, j), c))));
        }
      }
    }
    EXPECT_LT(err, 2e-2) << R;
    EXPECT_TRUE(support_and_mass_check(r).passes);
  }
}

TEST(RelativeExtremal, ValuesStayInRange) {
  const Atlas a = build_atlas(2.0, 65);
  const EnvelopeResult r = relative_extremal(SetSpec::annulus(cplx(0.2), 0.3, 0.8), a);
  EXPECT_LE(r.field.sup(), 1e-12);
  EXPECT_GE(r.field.inf(), -1.0 - 1e-12);
}

TEST(ToricEnvelope, BallCapacityClosedForm) {
  for (double R : {0.1, 0.25, 0.39, 0.5, 2.0}) {
    const ToricEnvelope t = toric_envelope(SetSpec::ball(0.0, R), 1, EnvelopeKind::Relative);
    EXPECT_NEAR(t.energy(), oracle::ball_capacity(R), 1e-4) << R;
  }
  // Frozen from the closed form above.
  EXPECT_NEAR(oracle::ball_capacity(0.25), 0.8511933058, 1e-9);
}

TEST(ToricEnvelope, GlobalSupIsMinusLogAlexander) {
  for (double R : {0.25, 1.0, 4.0}) {
    const ToricEnvelope t = toric_envelope(SetSpec::ball(0.0, R), 1, EnvelopeKind::Global);
    EXPECT_NEAR(t.sup(), -std::log(oracle::ball_alexander(R)), 1e-6) << R;
  }
}

TEST(ToricEnvelope, RejectsNonCircledSets) {
  try {
    toric_envelope(SetSpec::ball(cplx(0.5, 0.0), 0.25), 1, EnvelopeKind::Global);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCircled);
  }
}

TEST(MonotoneLimit, IncreasingBalls) {
  const Atlas a = build_atlas(2.0, 65);
  std::vector<SetSpec> fam;
  for (double R : {0.2, 0.4, 0.8, 1.6}) fam.push_back(SetSpec::ball(0.0, R));
  const MonotoneReport g = monotone_limit_check(fam, EnvelopeKind::Global, a);
  EXPECT_TRUE(g.passes) << g.worst_order_violation;
  const MonotoneReport r = monotone_limit_check(fam, EnvelopeKind::Relative, a);
  EXPECT_TRUE(r.passes) << r.worst_order_violation;
}

TEST(MonotoneLimit, RejectsUnorderedFamily) {
  const Atlas a = build_atlas(2.0, 65);
  try {
    monotone_limit_check({SetSpec::ball(cplx(0.5), 0.2), SetSpec::ball(cplx(-0.5), 0.2)}, EnvelopeKind::Global, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotMonotoneFamily);
  }
}

TEST(Siciak, BallIsLogPlus) {
  // L_{B_R}(z) = log^+ (|z| / R); the field stores L - h.
  const Atlas a = build_atlas(2.0, 129);
  const double R = 0.5;
  const EnvelopeResult L = siciak_extremal(SetSpec::ball(0.0, R), a);
  const ChartGrid& g = a.charts[0];
  double err = 0.0;
  for (int j = 0; j < g.resolution; ++j) {
    for (int i = 0; i < g.resolution; ++i) {
      const cplx z = g.node(i, j);
      if (std::abs(z) > 1.0) continue;
      err = std::max(err, std::abs(L.field.at(0, i, j) + fs_chart_potential(z) - std::max(0.0, std::log(std::abs(z) / R))));
    }
  }
  EXPECT_LT(err, 2e-2);
}
