#include <cmath>

#include <gtest/gtest.h>

#include "kahlercap/dynamics.hpp"
#include "kahlercap/error.hpp"
#include "oracles.hpp"

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

const Endomorphism& squaring() {
  static const Endomorphism f = build_endomorphism(parse_map("z^2, w^2"));
  return f;
}

double green_closed_form(double r) { return std::isinf(r) ? 0.0 : std::log(std::max(1.0, r)) - 0.5 * std::log1p(r * r); }

int count(const Bitmap& b) {
  int n = 0;
  for (auto v : b) n += v ? 1 : 0;
  return n;
}

}  // namespace

TEST(ParseMap, AcceptsCommonSpellings) {
  const auto p = parse_map("z^2 + w^2, 2*z*w");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].coeff({2, 0}), cplx(1.0));
  EXPECT_EQ(p[0].coeff({0, 2}), cplx(1.0));
  EXPECT_EQ(p[1].coeff({1, 1}), cplx(2.0));
  const auto q = parse_map(" 0.5z^3 - w^3 ,z w^2 ");
  EXPECT_EQ(q[0].coeff({3, 0}), cplx(0.5));
  EXPECT_EQ(q[0].coeff({0, 3}), cplx(-1.0));
  EXPECT_EQ(q[1].coeff({1, 2}), cplx(1.0));
  const auto r = parse_map("-z^2 + 3 z w - z w, w^2");
  EXPECT_EQ(r[0].coeff({1, 1}), cplx(2.0));
  EXPECT_EQ(r[0].coeff({2, 0}), cplx(-1.0));
}

TEST(ParseMap, RejectsMalformedInput) {
  for (const char* bad : {"z^2 + w, w^2", "z^2, ", "z^2 + x^2, w^2", "z^, w^2", "*z^2, w^2", "z^2 - z^2, w^2", "1.2.3z^2, w^2"}) {
    EXPECT_EQ(code_of([&] { parse_map(bad); }), ErrorCode::ConfigError) << bad;
  }
}

TEST(Endomorphism, ValidationErrors) {
  EXPECT_EQ(squaring().lambda, 2);
  EXPECT_EQ(code_of([] { build_endomorphism(parse_map("z^2, z*w")); }), ErrorCode::DegenerateLift);
  EXPECT_EQ(code_of([] { build_endomorphism(parse_map("z^2, w^3")); }), ErrorCode::DegreeMismatch);
  EXPECT_EQ(code_of([] { build_endomorphism(parse_map("z, w")); }), ErrorCode::DegreeMismatch);
  EXPECT_EQ(code_of([] { build_endomorphism(parse_map("z^2, w^2, z*w")); }), ErrorCode::ConfigError);
  const Endomorphism f = build_endomorphism(parse_map("z^2 + w^2, z*w"));
  EXPECT_EQ(f.lambda, 2);
  EXPECT_GT(f.resultant, 1e-3);
}

TEST(Endomorphism, StepPotentialClosedForm) {
  const Atlas a = build_atlas(2.0, 65);
  const QpshField phi = green_step_potential(squaring(), a);
  const ChartGrid& g = a.charts[0];
  for (int j = 0; j < g.resolution; j += 4) {
    for (int i = 0; i < g.resolution; i += 4) {
      const double r2 = std::norm(g.node(i, j));
      EXPECT_NEAR(phi.at(0, i, j), 0.25 * std::log((1.0 + r2 * r2) / ((1.0 + r2) * (1.0 + r2))), 1e-13);
    }
  }
  EXPECT_TRUE(defect_report(phi).certified);
}

TEST(Endomorphism, UnitaryConjugateHasSameStepSup) {
  // (z^2, w^2) followed by the unitary swap-and-rotate x -> (i x1, x0).
  const Endomorphism g = build_endomorphism(parse_map("w^2, z^2"));
  const Atlas a = build_atlas(2.0, 65);
  EXPECT_NEAR(green_step_potential(g, a).inf(), green_step_potential(squaring(), a).inf(), 1e-13);
}

TEST(Endomorphism, FsJacobianIntegratesToLambda) {
  // integral of |J_FS f|^2 omega = lambda for n = 1.
  const Atlas a = build_atlas(2.0, 257);
  for (const char* m : {"z^2, w^2", "z^2 + w^2, z*w", "z^3 - 0.5w^3, z w^2"}) {
    const Endomorphism f = build_endomorphism(parse_map(m));
    double s = 0.0;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      for (int j = 0; j < g.resolution; ++j) {
        for (int i = 0; i < g.resolution; ++i) {
          const double w = a.volume_weight(c, i, j);
          if (w == 0.0) continue;
          const ProjectivePoint p = from_chart(g.node(i, j), c);
          const double n = p.norm();
          std::vector<cplx> x = p.coords;
          for (cplx& v : x) v /= n;
          const double J = f.fs_jacobian(x);
          s += w * J * J;
        }
      }
    }
    EXPECT_NEAR(s, f.lambda, 5e-3 * f.lambda) << m;
  }
}

TEST(Green, ZeroIterateIsZero) {
  const GreenResult g = green_iterate(squaring(), build_atlas(2.0, 33), 0);
  EXPECT_EQ(g.field.sup(), 0.0);
  EXPECT_EQ(g.field.inf(), 0.0);
}

TEST(Green, SquaringMatchesClosedForm) {
  const Atlas a = build_atlas(2.0, 65);
  const GreenResult g = green_function(squaring(), a, 1e-8);
  double err = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& gr = a.charts[c];
    for (int j = 0; j < gr.resolution; ++j) {
      for (int i = 0; i < gr.resolution; ++i) {
        err = std::max(err, std::abs(g.field.at(c, i, j) - green_closed_form(oracle::chart_radius(gr.node(i, j), c))));
      }
    }
  }
  EXPECT_LE(err, g.error_bound + 1e-15);
  EXPECT_LE(g.error_bound, 1e-8);
  EXPECT_LE(g.equation_residual, 2e-8);
  EXPECT_NEAR(g.step_mass, 1.0, 5e-3);
  EXPECT_NEAR(g.sup_phi, 0.25 * std::log(2.0), 1e-12);
}

TEST(Green, GeometricTailNodewise) {
  const Atlas a = build_atlas(2.0, 65);
  const Endomorphism f = build_endomorphism(parse_map("z^2 + w^2, z*w"));
  const auto g = green_partial_sums(f, a, 12);
  const double s = std::max(std::abs(g[1].sup()), std::abs(g[1].inf()));
  for (std::size_t j = 1; j + 1 < g.size(); ++j) {
    for (int c = 0; c < 2; ++c) {
      for (std::size_t k = 0; k < g[j].chart(c).size(); ++k) {
        EXPECT_LE(std::abs(g[j + 1].chart(c)[k] - g[j].chart(c)[k]), s * std::pow(2.0, -static_cast<double>(j)) + 1e-12);
      }
    }
  }
}

TEST(Green, LimitHasUnitMass) {
  const Atlas a = build_atlas(2.0, 129);
  const GreenResult g = green_function(squaring(), a, 1e-6);
  EXPECT_TRUE(defect_report(g.field).certified);
  EXPECT_NEAR(ma_measure(g.field).total(), 1.0, 5e-3);
}

TEST(Green, HolderGreenFunctionFailsOnlyNextToTheJuliaSet) {
  // z + 1/z: the Julia set is the imaginary axis, where g is only Hoelder and
  // the 5-point stencil can dip below zero.
  const Atlas a = build_atlas(2.0, 129);
  const GreenResult g = green_function(build_endomorphism(parse_map("z^2 + w^2, z*w")), a, 1e-6);
  const DefectReport d = defect_report(g.field);
  EXPECT_LT(d.failing, d.checked / 200);
  const ChartGrid& gr = a.charts[0];
  for (int j = 1; j + 1 < gr.resolution; ++j) {
    for (int i = 1; i + 1 < gr.resolution; ++i) {
      const cplx z = gr.node(i, j);
      if (std::abs(z) > 1.0 || std::abs(z.real()) < 4.5 * gr.spacing) continue;
      const double lap = g.field.at(0, i + 1, j) + g.field.at(0, i - 1, j) + g.field.at(0, i, j + 1) + g.field.at(0, i, j - 1) -
                         4.0 * g.field.at(0, i, j);
      const double fs = fs_chart_potential(gr.node(i + 1, j)) + fs_chart_potential(gr.node(i - 1, j)) +
                        fs_chart_potential(gr.node(i, j + 1)) + fs_chart_potential(gr.node(i, j - 1)) - 4.0 * fs_chart_potential(z);
      EXPECT_GE((lap + fs) / (2.0 * M_PI * gr.spacing * gr.spacing), -0.05) << z;
    }
  }
}

TEST(ForwardImage, SquaringMapsBallsToBalls) {
  const Atlas a = build_atlas(2.0, 129);
  const auto img = forward_image(squaring(), SetSpec::ball(0.0, 0.5), a, 1, false);
  const auto ref = rasterize_set(SetSpec::ball(0.0, 0.25), a);
  int missing = 0, extra = 0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < ref[c].size(); ++k) {
      if (ref[c][k] && !img[c][k]) ++missing;
      if (!ref[c][k] && img[c][k]) ++extra;
    }
  }
  // Only the boundary ring may differ.
  EXPECT_LT(missing + extra, 4 * 0.25 / a.spacing() * 2 * M_PI / 2);
  EXPECT_EQ(missing, 0);
}

TEST(ForwardImage, MonotoneInTheSet) {
  const Atlas a = build_atlas(2.0, 65);
  const auto small = forward_image(squaring(), SetSpec::ball(cplx(0.3), 0.2), a, 2, true);
  const auto big = forward_image(squaring(), SetSpec::ball(cplx(0.3), 0.4), a, 2, true);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < small[c].size(); ++k) EXPECT_TRUE(!small[c][k] || big[c][k]);
  }
}

TEST(ForwardImage, CommutesWithUnionUpToDilation) {
  const Atlas a = build_atlas(2.0, 65);
  const SetSpec A = SetSpec::ball(cplx(0.5), 0.2), B = SetSpec::ball(cplx(-0.2, 0.6), 0.3);
  const auto u = forward_image(squaring(), SetSpec::unite({A, B}), a, 1, false);
  const auto ia = forward_image(squaring(), A, a, 1, true);
  const auto ib = forward_image(squaring(), B, a, 1, true);
  const auto ud = forward_image(squaring(), SetSpec::unite({A, B}), a, 1, true);
  const auto iau = forward_image(squaring(), A, a, 1, false);
  const auto ibu = forward_image(squaring(), B, a, 1, false);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < u[c].size(); ++k) {
      EXPECT_TRUE(!u[c][k] || ia[c][k] || ib[c][k]);
      EXPECT_TRUE(!(iau[c][k] || ibu[c][k]) || ud[c][k]);
    }
  }
  EXPECT_GT(count(u[0]), 0);
}

TEST(DynCapacity, SquaringOfSmallBall) {
  // f(B_{1/2}) = B_{1/4}: T goes from 0.4472 to 0.2425 up to the rasterization bias.
  const Atlas a = build_atlas(2.0, 129);
  const DynCapacityReport r = dyn_capacity_check(squaring(), {SetSpec::ball(0.0, 0.5)}, {"B"}, a, 1);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_NEAR(r.rows[0].tj, 0.4472, 2e-3);
  EXPECT_GE(r.rows[1].tj, 0.2425 - 2e-3);
  // Conservative rasterization plus dilation grows the image by up to ~2 cells.
  EXPECT_LE(r.rows[1].tj, oracle::ball_alexander(0.25 + 2.5 * a.spacing()));
  EXPECT_TRUE(r.holds_fit);
  EXPECT_TRUE(r.holds_theory);
  EXPECT_GT(r.alpha_fit, 0.0);
  EXPECT_LE(r.alpha_fit, 1.0);
}

TEST(DynCapacity, WholeSpace) {
  const DynCapacityReport r = dyn_capacity_check(squaring(), {SetSpec::full()}, {"X"}, build_atlas(2.0, 65), 2);
  for (const auto& row : r.rows) EXPECT_NEAR(row.tj, 1.0, 1e-9);
  EXPECT_TRUE(r.holds_fit);
}

TEST(DynCapacity, PolarSetIsAnError) {
  EXPECT_EQ(code_of([] { dyn_capacity_check(squaring(), {SetSpec::empty()}, {"0"}, build_atlas(2.0, 33), 1); }),
            ErrorCode::PolarSet);
}

TEST(VolumeDecay, AnnulusTwoWays) {
  const VolumeDecayReport v = volume_decay_check(squaring(), SetSpec::annulus(0.0, 1.0, 2.0), build_atlas(2.0, 257), 2);
  EXPECT_LE(v.worst_disagreement, 0.05);
  for (double m : v.margins) EXPECT_GE(m, -1e-12);
}

TEST(VolumeDecay, WholeSpaceAndEmpty) {
  const VolumeDecayReport v = volume_decay_check(squaring(), SetSpec::full(), build_atlas(2.0, 65), 2);
  for (double x : v.vol_cloud) EXPECT_NEAR(x, 1.0, 1e-2);
  EXPECT_EQ(code_of([] { volume_decay_check(squaring(), SetSpec::empty(), build_atlas(2.0, 33), 1); }),
            ErrorCode::ZeroVolume);
}

TEST(VolumeDecay, FittedConstantScalesWithVolume) {
  // Shrinking discs around the repelling point 1: C should grow no faster than 1/Vol(K).
  const Atlas a = build_atlas(2.0, 257);
  std::vector<double> lv, lc;
  for (double R : {0.2, 0.1, 0.05}) {
    const VolumeDecayReport v = volume_decay_check(squaring(), SetSpec::ball(cplx(1.0), R), a, 2);
    lv.push_back(std::log(v.vol_k));
    lc.push_back(std::log(v.c_fit));
  }
  const double slope = -(lc.back() - lc.front()) / (lv.back() - lv.front());
  EXPECT_LE(slope, 1.1);
}

TEST(Pullback, ZeroStaysZero) {
  const QpshField z = QpshField::sample(build_atlas(2.0, 33), [](cplx, int) { return 0.0; }, true);
  const PullbackReport r = pullback_family_check(z, squaring(), 3);
  for (double s : r.sups) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(r.bounded);
}

TEST(Pullback, StepPotentialDecaysGeometrically) {
  // lambda^{-j} phi o f^j is bounded by lambda^{-j} sup|phi| = lambda^{-j} log 2 / 4.
  const Atlas a = build_atlas(2.0, 65);
  const QpshField phi = green_step_potential(squaring(), a);
  const PullbackReport r = pullback_family_check(phi, squaring(), 5, [](const ProjectivePoint& p) {
    return squaring().step_potential(p.coords);
  });
  for (std::size_t j = 0; j < r.l1.size(); ++j) {
    EXPECT_LE(r.l1[j], 0.25 * std::log(2.0) * std::pow(0.5, static_cast<double>(j)) + 1e-12) << j;
    if (j > 0) EXPECT_LT(r.l1[j], r.l1[j - 1]);
  }
  EXPECT_TRUE(r.bounded);
}

TEST(Pullback, KernelPotentialStaysBoundedInL1) {
  const Atlas a = build_atlas(2.0, 257);
  const ProjectivePoint pole = from_chart(cplx(0.3, 0.4), 0);
  const QpshField k = kernel_potential(a, {Atom{pole, 1.0}});
  const FieldEvaluator exact = [pole](const ProjectivePoint& p) {
    const cplx wedge = p.coords[0] * pole.coords[1] - p.coords[1] * pole.coords[0];
    return std::log(std::abs(wedge) / (p.norm() * pole.norm()));
  };
  const PullbackReport r = pullback_family_check(k, squaring(), 8, exact);
  EXPECT_TRUE(r.bounded);
  for (double l : r.l1) EXPECT_LT(l, 2.0);
}
