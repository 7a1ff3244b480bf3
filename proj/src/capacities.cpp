#include "kahlercap/capacities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kE = 2.718281828459045235360287471352;

double set_volume(const std::array<Bitmap, 2>& bits, const Atlas& a) {
  double v = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        if (bits[c][g.index(i, j)]) v += a.volume_weight(c, i, j);
      }
    }
  }
  return v;
}

bool any_node(const std::array<Bitmap, 2>& bits) {
  for (const auto& b : bits) {
    if (std::any_of(b.begin(), b.end(), [](std::uint8_t x) { return x != 0; })) return true;
  }
  return false;
}

double energy(const QpshField& f, const MAMeasure& mu) {
  double e = 0.0;
  for (int c = 0; c < 2; ++c) {
    const auto& w = mu.measure.weights[c];
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] != 0.0) e -= w[k] * f.chart(c)[k];
    }
  }
  return e;
}

}  // namespace

CapacityValue ma_capacity(const SetSpec& E, const Atlas& atlas, const EnvelopeOptions& opt) {
  CapacityValue out;
  const auto bits = rasterize_set(E, atlas);
  out.volume = set_volume(bits, atlas);
  if (!any_node(bits)) {
    out.polar = true;
    return out;
  }
  const EnvelopeResult r = relative_extremal(E, atlas, opt);
  out.iterations = r.iterations;
  const MAMeasure mu = ma_measure(r.field, "ma_capacity");
  out.total_mass = mu.total();
  out.clipped_mass = mu.clipped_mass;
  out.value = energy(r.field, mu);
  return out;
}

BruteforceResult ma_capacity_bruteforce(const SetSpec& E, const Atlas& atlas, int family_size, std::uint64_t seed,
                                        const EnvelopeOptions& opt) {
  BruteforceResult out;
  const auto in = rasterize_set(E, atlas);
  if (!any_node(in) || family_size <= 0) return out;

  // Candidate sub-ball centers and radii come from E's own bounding disc when E
  // is a ball, and from the chart-0 unit box otherwise.
  const auto bp = E.ball_params();
  const cplx c0 = bp ? bp->center : cplx(0.0);
  const double r0 = bp ? bp->radius : 1.5;
  const int chart = bp ? bp->chart : 0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Points of E to host kernel poles.
  std::vector<std::pair<int, std::size_t>> e_nodes;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < in[c].size(); ++k) {
      if (in[c][k]) e_nodes.emplace_back(c, k);
    }
  }

  std::vector<std::pair<QpshField, std::string>> members;
  auto score = [&](const QpshField& f, const std::string& name) {
    ++out.tried;
    MAMeasure mu;
    try {
      mu = ma_measure(f, name);
    } catch (const Error&) {
      return;
    }
    ++out.certified;
    const double m = mu.measure.mass_where([&](int c, std::size_t k) { return in[c][k] != 0; });
    if (out.best.empty() || m > out.value) {
      out.value = m;
      out.best = name;
    }
    members.emplace_back(f, name);
  };

  for (int k = 0; k < family_size; ++k) {
    const int type = k % 4;
    if (type == 0) {
      // 1 + h*_B for a sub-ball B; the first one is the largest.
      const double rr = k == 0 ? r0 : r0 * (1.0 - 0.9 * unit(rng) * unit(rng));
      const double room = r0 - rr;
      const double rho = room * std::sqrt(unit(rng));
      const cplx cc = c0 + std::polar(rho, 2.0 * 3.14159265358979323846 * unit(rng));
      const SetSpec B = SetSpec::ball(cc, rr, chart);
      try {
        const EnvelopeResult r = relative_extremal(B, atlas, opt);
        score(add_constant(r.field, 1.0), "envelope of ball r=" + std::to_string(rr));
      } catch (const Error&) {
        ++out.tried;
      }
    } else if (type == 3 && members.size() >= 2) {
      // Lattice maximum of two earlier members.
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      const std::size_t x = pick(rng), y = pick(rng);
      const QpshField m = lattice_combine(members[x].first, members[y].first, CombineMode::Max);
      score(m, "max(" + members[x].second + ", " + members[y].second + ")");
    } else {
      // 1 + max(phi_y / t, -1) for a Dirac kernel potential with pole in E.
      std::uniform_int_distribution<std::size_t> pick(0, e_nodes.size() - 1);
      const auto [c, node] = e_nodes[pick(rng)];
      const ChartGrid& g = atlas.charts[c];
      const int i = static_cast<int>(node % static_cast<std::size_t>(g.resolution));
      const int j = static_cast<int>(node / static_cast<std::size_t>(g.resolution));
      const double t = 1.0 + 3.0 * unit(rng);
      const QpshField phi = kernel_potential(atlas, {Atom{from_chart(g.node(i, j), c), 1.0}});
      ChartArrays v = phi.values();
      for (auto& arr : v) {
        for (double& x : arr) x = 1.0 + std::max(x / t, -1.0);
      }
      score(QpshField(atlas, v, true), "clipped kernel t=" + std::to_string(t));
    }
  }
  return out;
}

AlexanderValue alexander_capacity(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt) {
  AlexanderValue out;
  if (!any_node(rasterize_set(K, atlas))) {
    out.polar = true;
    out.sup_v = std::numeric_limits<double>::infinity();
    return out;
  }
  const EnvelopeResult r = global_extremal(K, atlas, opt);
  out.sup_v = r.sup_value;
  out.polar = r.polar_flag;
  out.value = r.polar_flag ? 0.0 : std::exp(-r.sup_value);
  return out;
}

SublevelReport sublevel_capacity_decay(const QpshField& phi, const std::vector<double>& t_list, double tol,
                                       const FieldEvaluator& exact, const EnvelopeOptions& opt) {
  const Atlas& a = phi.atlas();
  const int n = 1;
  const double mean_neg = fs_integral(phi, [](double x) { return -x; });
  const double sup = phi.sup();
  SublevelReport rep;
  rep.passes = true;
  for (double t : t_list) {
    SublevelRow row;
    row.t = t;
    const SetSpec G = SetSpec::predicate(
        [phi, exact, t](const ProjectivePoint& p) { return (exact ? exact(p) : phi.evaluate(p)) < -t; },
        "sublevel");
    row.t_bound = std::exp(-sup) * std::exp(-t);
    row.cap_bound = (mean_neg + n) / t;
    row.empty = !any_node(rasterize_set(G, a));
    if (!row.empty) {
      row.t_alex = alexander_capacity(G, a, opt).value;
      row.cap = ma_capacity(G, a, opt).value;
    }
    row.t_holds = row.t_alex <= row.t_bound + tol;
    row.cap_holds = row.cap <= row.cap_bound + tol;
    rep.passes = rep.passes && row.t_holds && row.cap_holds;
    rep.rows.push_back(row);
  }
  return rep;
}

CapacityComparison capacity_comparison(const std::vector<SetSpec>& family, const std::vector<std::string>& labels,
                                       const Atlas& atlas, double tol, const EnvelopeOptions& opt) {
  CapacityComparison rep;
  rep.upper_holds = true;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < family.size(); ++k) {
    ComparisonRow row;
    row.label = k < labels.size() ? labels[k] : "set " + std::to_string(k);
    const AlexanderValue t = alexander_capacity(family[k], atlas, opt);
    if (t.polar) throw Error(ErrorCode::PolarSet, "capacity_comparison", row.label + " is polar at this resolution");
    row.t_alex = t.value;
    row.cap = ma_capacity(family[k], atlas, opt).value;
    // n = 1: Cap^{-1/n} = 1 / Cap.
    row.upper = kE * std::exp(-1.0 / row.cap);
    row.slack = row.upper - row.t_alex;
    row.a_needed = -row.cap * std::log(row.t_alex);
    rep.fitted_a = std::max(rep.fitted_a, row.a_needed);
    rep.worst_slack = std::min(rep.worst_slack, row.slack);
    rep.upper_holds = rep.upper_holds && row.slack >= -tol;
    rep.rows.push_back(row);
  }
  return rep;
}

SiciakBracket siciak_bracket(const SetSpec& K, const Atlas& atlas, double tol, const EnvelopeOptions& opt) {
  SiciakBracket out;
  out.t_alex = alexander_capacity(K, atlas, opt).value;
  const EnvelopeResult L = siciak_extremal(K, atlas, opt);
  const ChartGrid& g = atlas.charts[0];
  double s = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g.resolution; ++j) {
    for (int i = 0; i < g.resolution; ++i) {
      const cplx z = g.node(i, j);
      if (std::abs(z) > 1.0) continue;
      s = std::max(s, L.field.at(0, i, j) + fs_chart_potential(z));
    }
  }
  out.t_ball = std::exp(-s);
  out.holds = out.t_ball >= out.t_alex / std::sqrt(2.0) - tol && out.t_ball <= 2.0 * out.t_alex + tol;
  return out;
}

JosefsonResult josefson_potential(const QpshField& v, double eps, const FieldEvaluator& exact,
                                  const EnvelopeOptions& opt) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::ConfigError, "josefson_potential", "eps must lie in (0, 1)");
  const Atlas& a = v.atlas();
  JosefsonResult out;
  std::vector<QpshField> integrand;
  const double du = std::log(2.0);
  for (int k = 0; k < 60; ++k) {
    const double t = std::ldexp(1.0, k);
    const SetSpec G = SetSpec::predicate(
        [v, exact, t](const ProjectivePoint& p) { return (exact ? exact(p) : v.evaluate(p)) < -t; }, "sublevel");
    if (!any_node(rasterize_set(G, a))) break;
    const EnvelopeResult V = global_extremal(G, a, opt);
    out.t_nodes.push_back(t);
    out.sup_v.push_back(V.sup_value);
    integrand.push_back(add_constant(V.field, -V.sup_value));
  }
  const std::size_t K = integrand.size();
  if (K < 4) {
    throw Error(ErrorCode::QuadratureUnderresolved, "josefson_potential",
                std::to_string(K) + " non-empty sublevel sets, need 4");
  }
  out.k_max = static_cast<int>(K) - 1;
  // Trapezoid rule in u = log t for eps * int e^{-eps u} f(e^u) du. The weights
  // add up to less than one, so the sum stays omega-psh.
  ChartArrays acc = v.values();
  for (auto& arr : acc) std::fill(arr.begin(), arr.end(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double end = (k == 0 || k + 1 == K) ? 0.5 : 1.0;
    const double w = eps * std::exp(-eps * du * static_cast<double>(k)) * du * end;
    for (int c = 0; c < 2; ++c) {
      const auto& f = integrand[k].chart(c);
      for (std::size_t q = 0; q < f.size(); ++q) acc[c][q] += w * f[q];
    }
  }
  const double worst = -integrand.back().inf();
  out.tail_bound = std::exp(-eps * du * static_cast<double>(K - 1)) * worst;
  out.field = QpshField(a, acc, true);
  return out;
}

}  // namespace kahlercap
