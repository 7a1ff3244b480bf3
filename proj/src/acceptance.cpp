#include "kahlercap/acceptance.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <ostream>
#include <thread>

#include "kahlercap/capacities.hpp"
#include "kahlercap/dynamics.hpp"
#include "kahlercap/envelopes.hpp"
#include "kahlercap/error.hpp"
#include "kahlercap/monge_ampere.hpp"
#include "kahlercap/sections.hpp"

namespace kahlercap {

namespace {

using nlohmann::json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double chart_radius(cplx z, int chart) {
  if (chart == 0) return std::abs(z);
  return std::abs(z) == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(z);
}

QpshField linear_pullback(const Atlas& atlas, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<cplx, 4> A{};
  while (true) {
    for (cplx& a : A) a = cplx(g(rng), g(rng));
    const double det = std::abs(A[0] * A[3] - A[1] * A[2]);
    double fro = 0.0;
    for (const cplx& a : A) fro += std::norm(a);
    if (det > 0.25 * fro) break;  // keeps the condition number below about 8
  }
  return QpshField::sample(
      atlas,
      [A](cplx z, int c) {
        const cplx x0 = c == 0 ? z : 1.0, x1 = c == 0 ? 1.0 : z;
        const double n = std::sqrt(std::norm(x0) + std::norm(x1));
        const cplx y0 = A[0] * x0 + A[1] * x1, y1 = A[2] * x0 + A[3] * x1;
        return 0.5 * std::log(std::norm(y0) + std::norm(y1)) - std::log(n);
      },
      true);
}

QpshField clipped_kernel(const Atlas& atlas, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int chart = u(rng) < 0.5 ? 0 : 1;
  const cplx pole = std::polar(std::sqrt(u(rng)), 6.283185307179586 * u(rng));
  const double t = 1.0 + 3.0 * u(rng);
  const QpshField k = kernel_potential(atlas, {Atom{from_chart(pole, chart), 1.0}});
  ChartArrays v = k.values();
  for (auto& arr : v) {
    for (double& x : arr) x = std::max(x / t, -1.0);
  }
  return QpshField(atlas, std::move(v), true);
}

QpshField base_field(const Atlas& atlas, std::mt19937_64& rng) {
  return rng() % 2 == 0 ? linear_pullback(atlas, rng) : clipped_kernel(atlas, rng);
}

// ---------------------------------------------------------------------------

using Check = std::function<CriterionResult()>;

constexpr const char* kNames[] = {
    "extremal function of balls, closed form",
    "Alexander capacity of balls",
    "capacity of the complement of a ball",
    "Monge-Ampere mass conservation",
    "capacity by envelopes vs test-function sup",
    "comparison principle",
    "Chebyshev constants vs Alexander capacity",
    "polynomial hull radius",
    "capacity comparison",
    "sublevel capacity decay",
    "Green function of (z^2, w^2)",
    "dynamical capacity inequality",
    "Bergman regularization",
    "Alexander capacity of the real line",
};

CriterionResult named(int id) {
  CriterionResult r;
  r.id = id;
  r.name = kNames[id - 1];
  return r;
}


CriterionResult ac1() {
  CriterionResult r = named(1);
  const Atlas a = build_atlas(8.0, 513);
  double worst = 0.0, slowest = 0.0;
  for (double R : {0.5, 1.0, 2.0}) {
    const auto t0 = std::chrono::steady_clock::now();
    const EnvelopeResult e = global_extremal(SetSpec::ball(0.0, R), a);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double err = 0.0;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      for (int j = 0; j < g.resolution; ++j) {
        for (int i = 0; i < g.resolution; ++i) {
          const double ex = ball_extremal_closed_form(R, chart_radius(g.node(i, j), c));
          err = std::max(err, std::abs(e.field.at(c, i, j) - ex));
        }
      }
    }
    worst = std::max(worst, err);
    slowest = std::max(slowest, dt);
    r.values["sup_error"][fmt("%g", R)] = err;
  }
  r.passed = worst <= 2e-2 && slowest <= 60.0;
  r.detail = "max sup error " + fmt("%.3e", worst) + " (tol 2e-2), slowest R " + fmt("%.1f", slowest) + " s (limit 60 s)";
  return r;
}

CriterionResult ac2() {
  CriterionResult r = named(2);
  const Atlas a = build_atlas(2.0, 257);
  double worst = 0.0;
  for (double R : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double exact = R / std::sqrt(1.0 + R * R);
    const double t = alexander_capacity(SetSpec::ball(0.0, R), a).value;
    const double rel = std::abs(t - exact) / exact;
    worst = std::max(worst, rel);
    r.values["t_alex"][fmt("%g", R)] = t;
  }
  r.passed = worst <= 0.02;
  r.detail = "max relative error " + fmt("%.3e", worst) + " (tol 2e-2)";
  return r;
}

CriterionResult ac3() {
  CriterionResult r = named(3);
  const Atlas a = build_atlas(2.0, 257);
  const double R = std::sqrt(std::exp(2.0) - 1.0);
  const CapacityValue c = ma_capacity(SetSpec::complement(SetSpec::ball(0.0, R)), a);
  r.values["cap"] = c.value;
  r.passed = std::abs(c.value - 1.0) <= 1e-2;
  r.detail = "Cap = " + fmt("%.5f", c.value) + " (target 1 +- 1e-2)";
  return r;
}

CriterionResult ac4() {
  CriterionResult r = named(4);
  const Atlas a = build_atlas(2.0, 257);
  std::mt19937_64 rng(0x4ac4);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const QpshField f = random_bounded_field(a, rng);
    worst = std::max(worst, std::abs(ma_measure(f).total() - 1.0));
  }
  r.values["worst_mass_error"] = worst;
  r.passed = worst <= 5e-3;
  r.detail = "max |mass - 1| over 50 fields " + fmt("%.3e", worst) + " (tol 5e-3)";
  return r;
}

CriterionResult ac5() {
  CriterionResult r = named(5);
  const Atlas a = build_atlas(2.0, 257);
  double worst_brute = -1.0, worst_toric = 0.0;
  for (double R : {0.5, 1.0, 2.0}) {
    const SetSpec B = SetSpec::ball(0.0, R);
    const double cap = ma_capacity(B, a).value;
    const double brute = ma_capacity_bruteforce(B, a, 24, 0x5eed).value;
    const double toric = toric_envelope(B, 1, EnvelopeKind::Relative).energy();
    worst_brute = std::max(worst_brute, brute - cap);
    worst_toric = std::max(worst_toric, std::abs(cap - toric) / toric);
    r.values["cap"][fmt("%g", R)] = cap;
    r.values["bruteforce"][fmt("%g", R)] = brute;
    r.values["toric"][fmt("%g", R)] = toric;
  }
  r.passed = worst_brute <= 5e-3 && worst_toric <= 0.05;
  r.detail = "max(brute - cap) " + fmt("%.3e", worst_brute) + " (tol 5e-3), max relative gap to toric " +
             fmt("%.3e", worst_toric) + " (tol 5e-2)";
  return r;
}

CriterionResult ac6() {
  CriterionResult r = named(6);
  const Atlas a = build_atlas(2.0, 129);
  std::mt19937_64 rng(0x4ac6);
  int violations = 0;
  double worst = -1.0;
  for (int k = 0; k < 100; ++k) {
    const QpshField phi = random_bounded_field(a, rng);
    const QpshField psi = random_bounded_field(a, rng);
    const ComparisonReport c = comparison_check(phi, psi);
    worst = std::max(worst, c.mass_psi - c.mass_phi);
    if (!c.passes) ++violations;
  }
  r.values["violations"] = violations;
  r.values["worst_excess"] = worst;
  r.passed = violations == 0;
  r.detail = std::to_string(violations) + " violations over 100 pairs, worst excess " + fmt("%.3e", worst) +
             " (mass_tol 5e-3)";
  return r;
}

CriterionResult ac7() {
  CriterionResult r = named(7);
  const Atlas cloud = build_atlas(2.0, 65);
  const Atlas a = build_atlas(2.0, 257);
  double worst = 0.0, worst_rise = 0.0;
  for (double R : {0.5, 1.0, 2.0}) {
    const SetSpec B = SetSpec::ball(0.0, R);
    const SectionsAlexander s = alexander_from_sections(B, 64, cloud);
    const double t = alexander_capacity(B, a).value;
    worst = std::max(worst, std::abs(s.value - t) / t);
    for (std::size_t k = 1; k < s.roots.size(); ++k) worst_rise = std::max(worst_rise, s.roots[k] - s.roots[k - 1]);
    r.values["sections"][fmt("%g", R)] = s.value;
    r.values["t_alex"][fmt("%g", R)] = t;
  }
  const SectionsAlexander an = alexander_from_sections(SetSpec::annulus(0.0, 0.5, 1.0), 64, cloud);
  for (std::size_t k = 1; k < an.roots.size(); ++k) worst_rise = std::max(worst_rise, an.roots[k] - an.roots[k - 1]);
  r.values["worst_rise"] = worst_rise;
  r.passed = worst <= 0.05 && worst_rise <= 1e-9;
  r.detail = "max relative gap " + fmt("%.3e", worst) + " (tol 5e-2), largest rise of M_N^(1/N) " +
             fmt("%.1e", worst_rise) + " (tol 1e-9)";
  return r;
}

CriterionResult ac8() {
  CriterionResult r = named(8);
  const Atlas cloud = build_atlas(2.0, 65);
  const Atlas a = build_atlas(2.0, 257);
  double worst = 0.0;
  for (double R : {0.5, 1.0}) {
    const SetSpec B = SetSpec::ball(0.0, R);
    const double h = hull_radius(B, 64, cloud).value;
    const double t = alexander_capacity(B, a).value;
    worst = std::max(worst, std::abs(h - t) / t);
    r.values["hull"][fmt("%g", R)] = h;
  }
  r.passed = worst <= 0.05;
  r.detail = "max relative gap to t_alex " + fmt("%.3e", worst) + " (tol 5e-2)";
  return r;
}

CriterionResult ac9() {
  CriterionResult r = named(9);
  std::vector<SetSpec> fam;
  std::vector<std::string> labels;
  for (double R : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    fam.push_back(SetSpec::ball(0.0, R));
    labels.push_back("B_" + fmt("%g", R));
  }
  const CapacityComparison lo = capacity_comparison(fam, labels, build_atlas(2.0, 129));
  const CapacityComparison hi = capacity_comparison(fam, labels, build_atlas(2.0, 513));
  const double drift = std::abs(hi.fitted_a - lo.fitted_a) / lo.fitted_a;
  const double slack = std::min(lo.worst_slack, hi.worst_slack);
  r.values["fitted_a"] = {{"129", lo.fitted_a}, {"513", hi.fitted_a}};
  r.values["worst_slack"] = slack;
  r.passed = lo.upper_holds && hi.upper_holds && std::isfinite(hi.fitted_a) && drift <= 0.10;
  r.detail = "worst upper slack " + fmt("%.4f", slack) + " (tol -5e-2), fitted A " + fmt("%.4f", lo.fitted_a) +
             " -> " + fmt("%.4f", hi.fitted_a) + " (drift " + fmt("%.2f", 100.0 * drift) + "%, tol 10%)";
  return r;
}

CriterionResult ac10() {
  CriterionResult r = named(10);
  const Atlas a = build_atlas(2.0, 257);
  // -h in chart 0: the kernel potential with its pole at infinity.
  const QpshField fs = kernel_potential(a, {Atom{from_chart(cplx(0.0), 1), 1.0}});
  const QpshField dirac = kernel_potential(a, {Atom{from_chart(cplx(0.3, 0.2), 0), 1.0}});
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  int which = 0;
  for (const QpshField* f : {&fs, &dirac}) {
    const SublevelReport rep = sublevel_capacity_decay(*f, {1.0, 2.0, 3.0});
    ok = ok && rep.passes;
    for (const SublevelRow& row : rep.rows) {
      worst = std::min({worst, row.t_bound - row.t_alex, row.cap_bound - row.cap});
      r.values[which == 0 ? "fs" : "dirac"].push_back(
          {{"t", row.t}, {"t_alex", row.t_alex}, {"t_bound", row.t_bound}, {"cap", row.cap}, {"cap_bound", row.cap_bound}});
    }
    ++which;
  }
  r.passed = ok;
  r.detail = "smallest bound minus value " + fmt("%.4f", worst) + " (tol -5e-2)";
  return r;
}

CriterionResult ac11() {
  CriterionResult r = named(11);
  const Atlas a = build_atlas(2.0, 257);
  const Endomorphism f = build_endomorphism(parse_map("z^2, w^2"));
  const GreenResult g = green_iterate(f, a, 30);
  const auto sums = green_partial_sums(f, a, 30);
  double err = 0.0, tail_excess = -1.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& gr = a.charts[c];
    for (int j = 0; j < gr.resolution; ++j) {
      for (int i = 0; i < gr.resolution; ++i) {
        const double x = chart_radius(gr.node(i, j), c);
        const double ex = std::isinf(x) ? 0.0 : std::log(std::max(1.0, x)) - 0.5 * std::log1p(x * x);
        err = std::max(err, std::abs(g.field.at(c, i, j) - ex));
        for (int k = 0; k <= 30; ++k) {
          const double bound = g.sup_phi * std::pow(2.0, -k) / (1.0 - 0.5);
          tail_excess = std::max(tail_excess, std::abs(sums[static_cast<std::size_t>(k)].at(c, i, j) - ex) - bound);
        }
      }
    }
  }
  r.values["sup_error"] = err;
  r.values["residual"] = g.equation_residual;
  r.values["tail_excess"] = tail_excess;
  r.passed = err <= 1e-6 && g.equation_residual <= 2e-8 && tail_excess <= 0.0;
  r.detail = "sup error " + fmt("%.2e", err) + " (tol 1e-6), residual " + fmt("%.2e", g.equation_residual) +
             " (tol 2e-8), tail bound " + (tail_excess <= 0.0 ? "holds" : "violated") + " at every node for j <= 30";
  return r;
}

CriterionResult ac12() {
  CriterionResult r = named(12);
  const Atlas a = build_atlas(2.0, 257);
  const Endomorphism f = build_endomorphism(parse_map("z^2, w^2"));
  const DynCapacityReport rep = dyn_capacity_check(
      f, {SetSpec::ball(0.0, 0.5), SetSpec::ball(0.0, 1.0), SetSpec::annulus(0.0, 1.0, 2.0)},
      {"B_0.5", "B_1", "annulus(1,2)"}, a, 3);
  for (const DynCapacityRow& row : rep.rows) {
    r.values["rows"].push_back({{"set", row.label}, {"j", row.j}, {"t0", row.t0}, {"tj", row.tj}});
  }
  r.values["alpha_fit"] = rep.alpha_fit;
  r.values["alpha_theory"] = rep.alpha_theory;
  r.passed = rep.holds_fit && rep.holds_theory;
  r.detail = "fitted alpha " + fmt("%.4f", rep.alpha_fit) + (rep.holds_fit ? " holds" : " fails") +
             ", theoretical alpha " + fmt("%.4f", rep.alpha_theory) + (rep.holds_theory ? " holds" : " fails");
  return r;
}

CriterionResult ac13() {
  CriterionResult r = named(13);
  const Atlas a = build_atlas(2.0, 129);
  const QpshField well = QpshField::sample(
      a,
      [](cplx z, int c) {
        const double x = chart_radius(z, c);
        return std::isinf(x) ? 0.0 : -0.25 * std::exp(-x * x);
      },
      true);
  const SandwichReport s = bergman_sandwich(well, {4, 8, 16, 32}, 2, 0.25);
  r.values["l1"] = s.l1;
  r.values["lower_const"] = s.lower_const;
  r.values["upper_const"] = s.upper_const;
  r.passed = s.l1_monotone && s.lower_bounded && s.upper_bounded;
  r.detail = "L1 " + fmt("%.4f", s.l1.front()) + " -> " + fmt("%.4f", s.l1.back()) +
             (s.l1_monotone ? " decreasing" : " not monotone") + ", sandwich " +
             (s.lower_bounded && s.upper_bounded ? "holds" : "fails");
  return r;
}

CriterionResult ac14() {
  CriterionResult r = named(14);
  const Atlas a = build_atlas(2.0, 257);
  const double t = alexander_capacity(SetSpec::real_line(), a).value;
  const double lo = 1.0 / (2.0 * (1.0 + std::sqrt(2.0))) - 5e-2;
  r.values["t_alex"] = t;
  r.passed = t >= lo && t <= 1.0;
  r.detail = "T = " + fmt("%.4f", t) + " in [" + fmt("%.4f", lo) + ", 1]";
  return r;
}

}  // namespace

double ball_extremal_closed_form(double R, double r) {
  if (std::isinf(r)) return 0.5 * std::log1p(R * R) - std::log(R);
  return std::max(std::log(r / R) + 0.5 * std::log1p(R * R) - 0.5 * std::log1p(r * r), 0.0);
}

QpshField random_bounded_field(const Atlas& atlas, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    QpshField f;
    switch (rng() % 4) {
      case 0:
        f = linear_pullback(atlas, rng);
        break;
      case 1:
        f = clipped_kernel(atlas, rng);
        break;
      case 2:
        f = lattice_combine(base_field(atlas, rng), base_field(atlas, rng), CombineMode::Mean);
        break;
      default:
        f = lattice_combine(base_field(atlas, rng), base_field(atlas, rng), CombineMode::Max);
        break;
    }
    if (defect_report(f).certified) return f.with_claim(true);
  }
  return linear_pullback(atlas, rng);
}

std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::vector<int>& only, int threads) {
  const std::vector<Check> all{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10, ac11, ac12, ac13, ac14};
  std::vector<int> ids;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) ids.push_back(id);
  }
  std::vector<CriterionResult> results(ids.size());
  std::vector<bool> done(ids.size(), false);
  std::size_t printed = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto line = [](const CriterionResult& r) {
    char head[32];
    std::snprintf(head, sizeof head, "AC%02d %s ", r.id, r.passed ? "PASS" : "FAIL");
    return std::string(head) + r.name + ": " + r.detail + "\n";
  };

  auto worker = [&] {
    while (true) {
      const std::size_t k = next++;
      if (k >= ids.size()) return;
      CriterionResult r = named(ids[k]);
      try {
        r = all[static_cast<std::size_t>(ids[k] - 1)]();
      } catch (const Error& e) {
        r.passed = false;
        r.detail = e.what();
        r.convergence_failure = e.code() == ErrorCode::ConvergenceFailure;
      }
      std::lock_guard<std::mutex> lock(mu);
      results[k] = std::move(r);
      done[k] = true;
      // Lines come out in criterion order whatever the finishing order.
      while (printed < ids.size() && done[printed]) out << line(results[printed++]) << std::flush;
    }
  };

  const int n = std::max(1, std::min<int>(threads, static_cast<int>(ids.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace kahlercap
