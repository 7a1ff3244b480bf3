#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "kahlercap/acceptance.hpp"
#include "kahlercap/error.hpp"
#include "kahlercap/monge_ampere.hpp"
#include "oracles.hpp"

using namespace kahlercap;

TEST(MaMeasure, ZeroFieldGivesFsVolume) {
  const Atlas a = build_atlas(2.0, 129);
  const QpshField z = QpshField::sample(a, [](cplx, int) { return 0.0; }, true);
  const MAMeasure mu = ma_measure(z);
  const DiscreteMeasure fs = DiscreteMeasure::fs_volume(a);
  EXPECT_NEAR(mu.total(), 1.0, 5e-3);
  // Per node the discrete Laplacian of h matches the FS density to O(h^2).
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < fs.weights[c].size(); ++k) worst = std::max(worst, std::abs(mu.measure.weights[c][k] - fs.weights[c][k]));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(MaMeasure, SentinelFieldIsRejected) {
  const Atlas a = build_atlas(2.0, 65);
  const QpshField k = kernel_potential(a, {Atom{from_chart(cplx(0.0), 0), 1.0}});
  try {
    ma_measure(k);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SentinelPresent);
  }
}

TEST(MaMeasure, MassIsConservedForBoundedFields) {
  const Atlas a = build_atlas(2.0, 257);
  std::mt19937_64 rng(0x11);
  for (int k = 0; k < 50; ++k) {
    const QpshField f = random_bounded_field(a, rng);
    EXPECT_NEAR(ma_measure(f).total(), 1.0, 5e-3) << k;
  }
}

TEST(MaMeasure, ClippedKernelPutsMassOnTheSublevelBoundary) {
  // psi = max(-h, -1) + h = max(0, h - 1): no mass on {|z| < R}, the omega-mass
  // of that disc sits on the circle |z| = R, omega itself outside.
  const Atlas a = build_atlas(4.0, 257);
  const QpshField f = QpshField::sample(
      a,
      [](cplx z, int c) {
        const double r = oracle::chart_radius(z, c);
        return std::isinf(r) ? -1.0 : std::max(-0.5 * std::log1p(r * r), -1.0);
      },
      true);
  const MAMeasure mu = ma_measure(f);
  const double R = std::sqrt(std::exp(2.0) - 1.0);
  auto mass_below = [&](double rho) {
    return mu.measure.mass_where([&](int c, std::size_t k) {
      const ChartGrid& g = a.charts[c];
      const int i = static_cast<int>(k % static_cast<std::size_t>(g.resolution));
      const int j = static_cast<int>(k / static_cast<std::size_t>(g.resolution));
      return oracle::chart_radius(g.node(i, j), c) < rho;
    });
  };
  EXPECT_NEAR(mass_below(0.9 * R), 0.0, 5e-3);
  const double rho = 1.1 * R;
  EXPECT_NEAR(mass_below(rho), rho * rho / (1.0 + rho * rho), 5e-3);
  EXPECT_NEAR(mu.total(), 1.0, 5e-3);
}

TEST(RadialMeasure, JumpsOfSlopePowers) {
  // Slope 0 before the first node and 1 after the last, so the total is always 1.
  RadialFunction f;
  f.s = {-3.0, 0.0, 2.0};
  f.u = {0.0, 0.0, 1.0};  // slope 1/2 on [0, 2]
  const RadialMeasure m = ma_measure_radial(f, 2);
  ASSERT_EQ(m.s.size(), 2u);
  EXPECT_EQ(m.s[0], 0.0);
  EXPECT_NEAR(m.mass[0], 0.25, 1e-15);
  EXPECT_NEAR(m.mass[1], 0.75, 1e-15);
  EXPECT_NEAR(ma_measure_radial(f, 1).total(), 1.0, 1e-15);
}

TEST(Comparison, PrincipleHoldsOnRandomPairs) {
  const Atlas a = build_atlas(2.0, 129);
  std::mt19937_64 rng(0xc0);
  for (int k = 0; k < 30; ++k) {
    const QpshField phi = random_bounded_field(a, rng), psi = random_bounded_field(a, rng);
    const ComparisonReport r = comparison_check(phi, psi);
    EXPECT_TRUE(r.passes) << k << ": " << r.mass_psi << " vs " << r.mass_phi;
  }
}

TEST(Comparison, ShiftedCopyHasEqualMasses) {
  // phi < phi + c everywhere, so both masses are the full mass 1.
  const Atlas a = build_atlas(2.0, 65);
  std::mt19937_64 rng(3);
  const QpshField phi = random_bounded_field(a, rng);
  const ComparisonReport r = comparison_check(phi, add_constant(phi, 0.1));
  EXPECT_NEAR(r.mass_psi, r.mass_phi, 1e-12);
  EXPECT_NEAR(r.mass_phi, 1.0, 5e-3);
}

TEST(Cln, PairingWithinBound) {
  const Atlas a = build_atlas(2.0, 129);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 5; ++k) {
    // t(phi - inf) with t <= 1 stays omega-psh and lands in [0, 1].
    const QpshField phi = random_bounded_field(a, rng);
    const double t = std::min(1.0, 1.0 / (phi.sup() - phi.inf()));
    ChartArrays v = phi.values();
    for (auto& arr : v) {
      for (double& x : arr) x = t * (x - phi.inf());
    }
    const QpshField unit(a, v, true);
    const ClnReport r = cln_pairing(random_bounded_field(a, rng), unit);
    EXPECT_TRUE(r.holds) << r.value << " > " << r.bound;
  }
}

TEST(HarmonicReplacement, DoesNotDecreaseAndStaysCertified) {
  const Atlas a = build_atlas(2.0, 129);
  std::mt19937_64 rng(9);
  const QpshField f = random_bounded_field(a, rng);
  const QpshField g = harmonic_replacement(f, SetSpec::ball(cplx(0.2, 0.1), 0.5));
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < f.chart(c).size(); ++k) EXPECT_GE(g.chart(c)[k], f.chart(c)[k] - 1e-9);
  }
  EXPECT_TRUE(defect_report(g).certified);
}

TEST(MeasureIo, CsvAndBinary) {
  const Atlas a = build_atlas(2.0, 33);
  const MAMeasure mu = ma_measure(QpshField::sample(a, [](cplx, int) { return 0.0; }, true));
  const auto dir = std::filesystem::temp_directory_path();
  const auto csv = dir / "kahlercap_mu.csv", bin = dir / "kahlercap_mu.bin";
  write_measure_csv(csv.string(), mu);
  write_measure(bin.string(), mu);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "chart,i,j,weight");
  double total = 0.0;
  while (std::getline(in, line)) total += std::stod(line.substr(line.rfind(',') + 1));
  EXPECT_NEAR(total, mu.total(), 1e-12);
  const QpshField back = read_field(bin.string());
  for (int c = 0; c < 2; ++c) EXPECT_EQ(back.chart(c), mu.measure.weights[c]);
  for (const auto& p : {csv, bin}) std::filesystem::remove(p);
  std::filesystem::remove(bin.string() + ".json");
}
