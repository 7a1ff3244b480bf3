#include "kahlercap/monge_ampere.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.14159265358979323846;

}  // namespace

MAMeasure ma_measure(const QpshField& f, std::string source) {
  if (f.has_sentinel()) {
    throw Error(ErrorCode::SentinelPresent, "ma_measure",
                std::to_string(f.sentinel_count()) + " sentinel nodes in an unbounded field");
  }
  const DefectReport d = defect_report(f);
  if (!d.certified) {
    throw Error(ErrorCode::NotCertified, "ma_measure",
                std::to_string(d.failing) + " nodes fail the omega-psh check (min density " +
                    std::to_string(d.min_density) + ")");
  }
  const Atlas& a = f.atlas();
  const ChartArrays psi = lift_to_lelong(f);
  MAMeasure m;
  m.measure = DiscreteMeasure::zero(a);
  m.source = std::move(source);
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    const int M = g.resolution;
    const auto& p = psi[c];
    auto& w = m.measure.weights[c];
    for (int j = 1; j < M - 1; ++j) {
      for (int i = 1; i < M - 1; ++i) {
        const double b = a.blend(c, i, j);
        if (b == 0.0) continue;
        const std::size_t k = g.index(i, j);
        const double lap = p[k - 1] + p[k + 1] + p[k - M] + p[k + M] - 4.0 * p[k];
        const double v = b * lap / kTwoPi;
        m.raw_mass += v;
        if (v < 0.0) {
          m.clipped_mass -= v;
        } else {
          w[k] = v;
        }
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

double fs_radial(double s) {
  // log1p(e^{2s}) without overflow for large s.
  return s > 0.0 ? s + 0.5 * std::log1p(std::exp(-2.0 * s)) : 0.5 * std::log1p(std::exp(2.0 * s));
}

double RadialFunction::operator()(double x) const {
  if (s.empty()) return kSentinel;
  // Profiles continue with slope 0 on the left and slope 1 on the right.
  if (x <= s.front()) return u.front();
  if (x >= s.back()) return u.back() + (x - s.back());
  const auto it = std::upper_bound(s.begin(), s.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - s.begin()) - 1;
  const double t = (x - s[k]) / (s[k + 1] - s[k]);
  return (1.0 - t) * u[k] + t * u[k + 1];
}

double RadialMeasure::total() const {
  double t = 0.0;
  for (double m : mass) t += m;
  return t;
}

RadialMeasure ma_measure_radial(const RadialFunction& f, int n) {
  RadialMeasure m;
  const std::size_t V = f.s.size();
  double left = 0.0;  // slope 0 beyond the first node
  for (std::size_t k = 0; k < V; ++k) {
    const double right = k + 1 < V ? f.slope(k) : 1.0;  // slope 1 beyond the last node
    const double jump = std::pow(std::clamp(right, 0.0, 1.0), n) - std::pow(std::clamp(left, 0.0, 1.0), n);
    if (jump != 0.0) {
      m.s.push_back(f.s[k]);
      m.mass.push_back(jump);
    }
    left = right;
  }
  return m;
}

// ---------------------------------------------------------------------------

ClnReport cln_pairing(const QpshField& psi, const QpshField& phi, double slack) {
  if (phi.inf() < -1e-9 || phi.sup() > 1.0 + 1e-9) {
    throw Error(ErrorCode::RangeViolation, "cln_pairing", "phi must take values in [0, 1]");
  }
  if (!(psi.atlas() == phi.atlas())) throw Error(ErrorCode::GridMismatch, "cln_pairing", "");
  const MAMeasure mu = ma_measure(phi, "cln_pairing");
  ClnReport r;
  for (int c = 0; c < 2; ++c) {
    const auto& w = mu.measure.weights[c];
    const auto& v = psi.chart(c);
    for (std::size_t k = 0; k < w.size(); ++k) {
      // Sentinel nodes carry a log singularity of zero measure.
      if (w[k] != 0.0 && std::isfinite(v[k])) r.value += w[k] * std::abs(v[k]);
    }
  }
  const double l1 = fs_integral(psi, [](double x) { return std::abs(x); });
  const double s = std::max(psi.sup(), 0.0);
  r.bound = l1 + 1.0 * (1.0 + 2.0 * s) + slack;
  r.holds = r.value <= r.bound;
  return r;
}

ComparisonReport comparison_check(const QpshField& phi, const QpshField& psi, double tol) {
  if (!(psi.atlas() == phi.atlas())) throw Error(ErrorCode::GridMismatch, "comparison_check", "");
  const MAMeasure mphi = ma_measure(phi, "phi");
  const MAMeasure mpsi = ma_measure(psi, "psi");
  auto below = [&](int c, std::size_t k) { return phi.chart(c)[k] < psi.chart(c)[k]; };
  ComparisonReport r;
  r.mass_psi = mpsi.measure.mass_where(below);
  r.mass_phi = mphi.measure.mass_where(below);
  r.passes = r.mass_psi <= r.mass_phi + tol;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

// Red-black SOR for the discrete Laplace equation on the free nodes of one
// chart; all other nodes are Dirichlet data.
void solve_dirichlet(std::vector<double>& p, const std::vector<std::uint8_t>& free, int M, double tol,
                     long cap, const char* op) {
  int span = 0;
  for (int j = 0; j < M; ++j) {
    int lo = M, hi = -1;
    for (int i = 0; i < M; ++i) {
      if (free[static_cast<std::size_t>(j) * M + i]) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    span = std::max(span, hi - lo + 1);
  }
  if (span <= 0) return;
  const double omega = 2.0 / (1.0 + std::sin(kPi / (span + 1)));
  for (long it = 0; it < cap; ++it) {
    double delta = 0.0;
    for (int color = 0; color < 2; ++color) {
      for (int j = 1; j < M - 1; ++j) {
        for (int i = 1 + ((j + color) & 1); i < M - 1; i += 2) {
          const std::size_t k = static_cast<std::size_t>(j) * M + i;
          if (!free[k]) continue;
          const double avg = 0.25 * (p[k - 1] + p[k + 1] + p[k - M] + p[k + M]);
          const double d = omega * (avg - p[k]);
          p[k] += d;
          delta = std::max(delta, std::abs(d));
        }
      }
    }
    if (delta <= tol) return;
  }
  throw Error(ErrorCode::ConvergenceFailure, op, "Dirichlet relaxation hit its iteration cap");
}

}  // namespace

QpshField harmonic_replacement(const QpshField& f, const SetSpec& ball) {
  const auto bp = ball.ball_params();
  if (!bp) throw Error(ErrorCode::ConfigError, "harmonic_replacement", "the region must be a ball");
  if (f.has_sentinel()) throw Error(ErrorCode::SentinelPresent, "harmonic_replacement", "");
  const Atlas& a = f.atlas();
  const ChartGrid& home = a.charts[bp->chart];
  const double reach = std::max(std::abs(bp->center.real()), std::abs(bp->center.imag())) + bp->radius;
  if (reach >= home.box_radius - home.spacing) {
    throw Error(ErrorCode::BallTouchesBoundary, "harmonic_replacement", "ball must sit strictly inside its chart box");
  }
  ChartArrays psi = lift_to_lelong(f);
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    const int M = g.resolution;
    std::vector<std::uint8_t> free(g.node_count(), 0);
    std::size_t count = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = 1; j < M - 1; ++j) {
      for (int i = 1; i < M - 1; ++i) {
        if (!ball.contains_chart(g.node(i, j), c)) continue;
        free[g.index(i, j)] = 1;
        ++count;
      }
    }
    if (count == 0) continue;
    for (int j = 0; j < M; ++j) {
      for (int i = 0; i < M; ++i) {
        const std::size_t k = g.index(i, j);
        if (free[k]) continue;
        // Boundary oscillation over the nodes adjacent to the free set.
        const bool adj = (i > 0 && free[k - 1]) || (i < M - 1 && free[k + 1]) ||
                         (j > 0 && free[k - M]) || (j < M - 1 && free[k + M]);
        if (adj) {
          lo = std::min(lo, psi[c][k]);
          hi = std::max(hi, psi[c][k]);
        }
      }
    }
    const double tol = 1e-10 * ((hi - lo) + 1.0);
    solve_dirichlet(psi[c], free, M, tol, 1000000, "harmonic_replacement");
  }
  return QpshField::from_lifted(a, psi, f.claimed_psh());
}

void write_measure_csv(const std::string& path, const MAMeasure& mu) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "write_measure_csv", "cannot open " + path);
  out << "chart,i,j,weight\n";
  char buf[96];
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = mu.measure.atlas.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        const double w = mu.measure.weights[c][g.index(i, j)];
        if (w == 0.0) continue;
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g\n", c, i, j, w);
        out << buf;
      }
    }
  }
}

void write_measure(const std::string& path, const MAMeasure& mu) {
  write_field(path, QpshField(mu.measure.atlas, mu.measure.weights),
              {{"kind", "ma_measure"}, {"source", mu.source}, {"total", mu.total()}, {"clipped_mass", mu.clipped_mass}});
}

}  // namespace kahlercap
