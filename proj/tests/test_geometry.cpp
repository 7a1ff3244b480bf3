#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "kahlercap/error.hpp"
#include "kahlercap/geometry.hpp"
#include "kahlercap/qpsh.hpp"

using namespace kahlercap;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(ProjectivePoint, NormalizesToUnitMaxModulus) {
  const std::vector<cplx> x{cplx(3.0, 4.0), cplx(1.0, 0.0)};
  const ProjectivePoint p = normalize_point(x);
  double m = 0.0;
  for (const cplx& c : p.coords) m = std::max(m, std::abs(c));
  EXPECT_NEAR(m, 1.0, 1e-15);
  EXPECT_NEAR(std::abs(p.coords[0] / p.coords[1] - x[0] / x[1]), 0.0, 1e-14);
}

TEST(ProjectivePoint, AllZeroRejected) {
  const std::vector<cplx> x{0.0, 0.0};
  EXPECT_EQ(code_of([&] { normalize_point(x); }), ErrorCode::AllZero);
}

TEST(Charts, TransitionIsInversion) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 100; ++k) {
    const cplx z(g(rng), g(rng));
    const cplx w = chart_transition(z, 0, 1);
    EXPECT_NEAR(std::abs(w - 1.0 / z), 0.0, 1e-12 * std::abs(w));
    EXPECT_NEAR(std::abs(chart_transition(w, 1, 0) - z), 0.0, 1e-12 * std::abs(z));
  }
}

TEST(Charts, TransitionOfOriginIsAtInfinity) {
  EXPECT_EQ(code_of([] { chart_transition(cplx(0.0), 0, 1); }), ErrorCode::AtInfinity);
}

TEST(Charts, FsPotentialChangesByLogModulus) {
  // h(1/z) = h(z) - log|z| on the overlap.
  for (double r : {0.3, 1.0, 2.5}) {
    const cplx z = std::polar(r, 0.7);
    EXPECT_NEAR(fs_chart_potential(1.0 / z), fs_chart_potential(z) - std::log(r), 1e-14);
  }
}

TEST(Atlas, FsVolumeIsOne) {
  for (int res : {65, 129, 257}) {
    const Atlas a = build_atlas(2.0, res);
    EXPECT_NEAR(DiscreteMeasure::fs_volume(a).total(), 1.0, 5e-3) << res;
  }
}

TEST(Atlas, BlendWeightsSumToOne) {
  for (double r : {0.1, 0.8, 1.0, 1.1, 1.24, 3.0}) {
    const cplx z = std::polar(r, 0.3);
    EXPECT_NEAR(blend_weight(z) + blend_weight(1.0 / z), 1.0, 1e-14) << r;
  }
}

TEST(Atlas, RejectsBadParameters) {
  EXPECT_EQ(code_of([] { build_atlas(2.0, 2); }), ErrorCode::ResolutionTooSmall);
  EXPECT_EQ(code_of([] { build_atlas(-1.0, 65); }), ErrorCode::ConfigError);
}

TEST(SetSpec, BallMembershipInBothCharts) {
  const SetSpec b = SetSpec::ball(0.0, 2.0);
  EXPECT_TRUE(b.contains_chart(cplx(1.9, 0.0), 0));
  EXPECT_FALSE(b.contains_chart(cplx(2.1, 0.0), 0));
  EXPECT_TRUE(b.contains_chart(cplx(0.51, 0.0), 1));
  EXPECT_FALSE(b.contains_chart(cplx(0.49, 0.0), 1));
  EXPECT_FALSE(b.contains_chart(cplx(0.0), 1));
}

TEST(SetSpec, ComplementAndUnion) {
  const SetSpec b = SetSpec::ball(0.0, 1.0);
  const SetSpec c = SetSpec::complement(b);
  const SetSpec u = SetSpec::unite({b, c});
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const cplx z(g(rng), g(rng));
    EXPECT_NE(b.contains_chart(z, 0), c.contains_chart(z, 0));
    EXPECT_TRUE(u.contains_chart(z, 0));
  }
}

TEST(SetSpec, RotationMovesPoints) {
  const SetSpec b = SetSpec::ball(cplx(1.0, 0.0), 0.2);
  const SetSpec r = SetSpec::rotation(0.5 * M_PI, b);
  // A rotation of CP^1 fixing 0 and infinity acts on chart 0 as multiplication
  // by a unit; either way the image must be a disc of the same size.
  int inside = 0;
  for (int k = 0; k < 64; ++k) {
    const cplx z = std::polar(1.0, 2.0 * M_PI * k / 64);
    inside += r.contains_chart(z, 0) ? 1 : 0;
  }
  int before = 0;
  for (int k = 0; k < 64; ++k) before += b.contains_chart(std::polar(1.0, 2.0 * M_PI * k / 64), 0) ? 1 : 0;
  EXPECT_EQ(inside, before);
}

TEST(SetSpec, RealLineContainsInfinity) {
  const SetSpec r = SetSpec::real_line();
  EXPECT_TRUE(r.contains_chart(cplx(3.0, 0.0), 0));
  EXPECT_FALSE(r.contains_chart(cplx(3.0, 0.5), 0));
  EXPECT_TRUE(r.contains_chart(cplx(0.0), 1));
}

TEST(SetSpec, JsonRoundTrip) {
  const SetSpec s = SetSpec::unite({SetSpec::ball(cplx(0.5, -0.25), 0.75), SetSpec::annulus(0.0, 1.0, 2.0),
                                    SetSpec::complement(SetSpec::half_plane(0.3))});
  const SetSpec t = SetSpec::from_json(s.to_json());
  EXPECT_EQ(s.to_json().dump(), t.to_json().dump());
  const Atlas a = build_atlas(2.0, 65);
  EXPECT_EQ(rasterize_set(s, a), rasterize_set(t, a));
}

TEST(SetSpec, MalformedJsonNamesTheProblem) {
  try {
    SetSpec::parse("{\"type\": \"ball\",\n \"radius\": }");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  try {
    SetSpec::parse("{\"type\": \"ball\"}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("radius"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { SetSpec::parse("{\"type\": \"triangle\"}"); }), ErrorCode::ConfigError);
}

TEST(SetSpec, PredicateFollowsTheTest) {
  const SetSpec p = SetSpec::predicate([](const ProjectivePoint& x) { return std::abs(x.coords[0]) < 0.5 * std::abs(x.coords[1]); },
                                       "small");
  EXPECT_TRUE(p.contains_chart(cplx(0.4, 0.0), 0));
  EXPECT_FALSE(p.contains_chart(cplx(0.6, 0.0), 0));
}

TEST(SetSpec, MaskRoundTripsThroughRasterization) {
  const Atlas a = build_atlas(2.0, 65);
  const auto bits = rasterize_set(SetSpec::annulus(0.0, 0.5, 1.5), a);
  EXPECT_EQ(rasterize_set(SetSpec::mask(a, bits), a), bits);
}

TEST(SetSpec, PgmMaskRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "kahlercap_mask.pgm";
  Bitmap bits(12, 0);
  bits[1] = bits[5] = bits[11] = 1;
  write_pgm_mask(path.string(), bits, 4, 3);
  int w = 0, h = 0;
  EXPECT_EQ(read_pgm_mask(path.string(), w, h), bits);
  EXPECT_EQ(w, 4);
  EXPECT_EQ(h, 3);
  std::filesystem::remove(path);
}
