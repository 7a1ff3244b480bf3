#include "kahlercap/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Obstacle { Relative, Global, Siciak };

// Edge nodes of one chart take their values from the other chart:
// psi[node] = sum wt * psi_other[corner] + offset.
struct EdgeCoupling {
  std::vector<std::size_t> node;
  std::vector<std::array<std::size_t, 4>> corner;
  std::vector<std::array<double, 4>> wt;
  std::vector<double> offset;
};

EdgeCoupling build_coupling(const Atlas& a, int c) {
  const ChartGrid& g = a.charts[c];
  const ChartGrid& o = a.charts[1 - c];
  const int M = g.resolution;
  EdgeCoupling e;
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      if (!g.is_edge(i, j)) continue;
      const cplx z = g.node(i, j);
      const cplx w = 1.0 / z;
      const double half = 0.5 * (o.resolution - 1);
      const double fi = w.real() / o.spacing + half;
      const double fj = w.imag() / o.spacing + half;
      const int i0 = std::clamp(static_cast<int>(std::floor(fi)), 0, o.resolution - 2);
      const int j0 = std::clamp(static_cast<int>(std::floor(fj)), 0, o.resolution - 2);
      const double s = fi - i0;
      const double t = fj - j0;
      const std::array<std::size_t, 4> idx{o.index(i0, j0), o.index(i0 + 1, j0), o.index(i0, j0 + 1),
                                           o.index(i0 + 1, j0 + 1)};
      const std::array<double, 4> wt{(1 - s) * (1 - t), s * (1 - t), (1 - s) * t, s * t};
      double off = fs_chart_potential(z);
      const std::array<cplx, 4> cn{o.node(i0, j0), o.node(i0 + 1, j0), o.node(i0, j0 + 1), o.node(i0 + 1, j0 + 1)};
      for (int q = 0; q < 4; ++q) off -= wt[q] * fs_chart_potential(cn[q]);
      e.node.push_back(g.index(i, j));
      e.corner.push_back(idx);
      e.wt.push_back(wt);
      e.offset.push_back(off);
    }
  }
  return e;
}

// Free node next to the set whose stencil reaches the true set boundary
// before the neighboring node (Shortley-Weller). Directions W, E, S, N.
struct BoundaryStencil {
  std::size_t node;
  std::array<double, 4> a;  // weight of each neighbor node (0 when cut)
  double fixed;             // sum of weight * boundary value over cut arms
  double inv_diag;
};

struct Problem {
  Atlas atlas;
  ChartArrays upper;
  ChartArrays h;
  std::array<std::vector<BoundaryStencil>, 2> stencils;
  std::array<std::vector<std::int32_t>, 2> stencil_of;
  std::size_t set_nodes = 0;
};

double boundary_value(Obstacle kind, int c, cplx z) {
  switch (kind) {
    case Obstacle::Relative: return fs_chart_potential(z) - 1.0;
    case Obstacle::Global: return fs_chart_potential(z);
    case Obstacle::Siciak: return c == 0 ? 0.0 : std::log(std::abs(z));
  }
  return 0.0;
}

// Fraction of the way from z_out to z_in at which membership switches on.
double crossing(const SetSpec& set, int c, cplx z_out, cplx z_in) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (set.contains_chart(z_out + mid * (z_in - z_out), c)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::max(hi, 1e-3);
}

void build_stencils(const SetSpec& set, Obstacle kind, const std::array<Bitmap, 2>& in, Problem& p) {
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = p.atlas.charts[c];
    const int M = g.resolution;
    p.stencil_of[c].assign(g.node_count(), -1);
    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};
    for (int j = 1; j < M - 1; ++j) {
      for (int i = 1; i < M - 1; ++i) {
        const std::size_t k = g.index(i, j);
        if (in[c][k]) continue;
        std::array<double, 4> theta{1.0, 1.0, 1.0, 1.0};
        std::array<double, 4> bval{0.0, 0.0, 0.0, 0.0};
        bool cut = false;
        for (int d = 0; d < 4; ++d) {
          const std::size_t kn = g.index(i + di[d], j + dj[d]);
          if (!in[c][kn]) continue;
          const cplx z = g.node(i, j);
          const cplx zn = g.node(i + di[d], j + dj[d]);
          theta[d] = crossing(set, c, z, zn);
          bval[d] = boundary_value(kind, c, z + theta[d] * (zn - z));
          cut = true;
        }
        if (!cut) continue;
        BoundaryStencil st{};
        st.node = k;
        st.fixed = 0.0;
        double diag = 0.0;
        for (int axis = 0; axis < 2; ++axis) {
          const int m = 2 * axis, q = 2 * axis + 1;
          const double tm = theta[m], tq = theta[q];
          const double wm = 2.0 / (tm * (tm + tq));
          const double wq = 2.0 / (tq * (tm + tq));
          diag += wm + wq;
          if (tm < 1.0 || in[c][g.index(i + di[m], j + dj[m])]) {
            st.a[m] = 0.0;
            st.fixed += wm * bval[m];
          } else {
            st.a[m] = wm;
          }
          if (tq < 1.0 || in[c][g.index(i + di[q], j + dj[q])]) {
            st.a[q] = 0.0;
            st.fixed += wq * bval[q];
          } else {
            st.a[q] = wq;
          }
        }
        st.inv_diag = 1.0 / diag;
        p.stencil_of[c][k] = static_cast<std::int32_t>(p.stencils[c].size());
        p.stencils[c].push_back(st);
      }
    }
  }
}

Problem build_problem(const SetSpec& set, const Atlas& a, Obstacle kind) {
  Problem p;
  p.atlas = a;
  std::array<Bitmap, 2> inside;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    inside[c].assign(g.node_count(), 0);
    p.upper[c].resize(g.node_count());
    p.h[c].resize(g.node_count());
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        const std::size_t k = g.index(i, j);
        const cplx z = g.node(i, j);
        const double h = fs_chart_potential(z);
        p.h[c][k] = h;
        const bool in = set.contains_chart(z, c);
        inside[c][k] = in ? 1 : 0;
        // Chart 1 edge nodes duplicate points owned by chart 0; count each point once.
        if (in && !(c == 1 && std::norm(z) > 1.0)) ++p.set_nodes;
        switch (kind) {
          case Obstacle::Relative: p.upper[c][k] = in ? h - 1.0 : h; break;
          case Obstacle::Global: p.upper[c][k] = in ? h : kInf; break;
          case Obstacle::Siciak:
            p.upper[c][k] = in ? (c == 0 ? 0.0 : (z == cplx(0.0) ? -kInf : std::log(std::abs(z)))) : kInf;
            break;
        }
      }
    }
  }
  build_stencils(set, kind, inside, p);
  return p;
}

struct SolveStats {
  long sweeps = 0;
  double residual = 0.0;
  bool polar = false;
};

double max_phi(const ChartArrays& psi, const ChartArrays& h) {
  double m = -kInf;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < psi[c].size(); ++k) m = std::max(m, psi[c][k] - h[c][k]);
  }
  return m;
}

SolveStats relax(const Problem& p, ChartArrays& psi, const EnvelopeOptions& opt, bool watch_sup, const char* op) {
  const int M = p.atlas.resolution();
  const std::array<EdgeCoupling, 2> edges{build_coupling(p.atlas, 0), build_coupling(p.atlas, 1)};
  const double omega = 2.0 / (1.0 + std::sin(kPi / (M - 1)));
  SolveStats st;
  auto apply_edges = [&](int c) {
    double d = 0.0;
    const EdgeCoupling& e = edges[c];
    const auto& src = psi[1 - c];
    auto& dst = psi[c];
    const auto& up = p.upper[c];
    for (std::size_t q = 0; q < e.node.size(); ++q) {
      const auto& cn = e.corner[q];
      const auto& wt = e.wt[q];
      double v = wt[0] * src[cn[0]] + wt[1] * src[cn[1]] + wt[2] * src[cn[2]] + wt[3] * src[cn[3]] + e.offset[q];
      const std::size_t k = e.node[q];
      v = std::min(v, up[k]);
      d = std::max(d, std::abs(v - dst[k]));
      dst[k] = v;
    }
    return d;
  };
  apply_edges(0);
  apply_edges(1);
  for (long it = 0; it < opt.max_sweeps; ++it) {
    double delta = 0.0;
    for (int c = 0; c < 2; ++c) {
      double* x = psi[c].data();
      const double* up = p.upper[c].data();
      const std::int32_t* sw = p.stencil_of[c].data();
      const BoundaryStencil* stencils = p.stencils[c].data();
      for (int color = 0; color < 2; ++color) {
        for (int j = 1; j < M - 1; ++j) {
          const std::size_t row = static_cast<std::size_t>(j) * M;
          for (int i = 1 + ((j + color) & 1); i < M - 1; i += 2) {
            const std::size_t k = row + i;
            double avg;
            if (sw[k] < 0) {
              avg = 0.25 * (x[k - 1] + x[k + 1] + x[k - M] + x[k + M]);
            } else {
              const BoundaryStencil& st = stencils[sw[k]];
              avg = (st.a[0] * x[k - 1] + st.a[1] * x[k + 1] + st.a[2] * x[k - M] + st.a[3] * x[k + M] + st.fixed) *
                    st.inv_diag;
            }
            double v = x[k] + omega * (avg - x[k]);
            // Project after the relaxation step.
            if (v > up[k]) v = up[k];
            const double d = std::abs(v - x[k]);
            if (d > delta) delta = d;
            x[k] = v;
          }
        }
      }
      delta = std::max(delta, apply_edges(1 - c));
    }
    st.sweeps = it + 1;
    st.residual = delta;
    if (delta <= opt.tol) return st;
    if (watch_sup && (it % 64) == 0 && max_phi(psi, p.h) > opt.polar_threshold) {
      st.polar = true;
      return st;
    }
  }
  throw Error(ErrorCode::ConvergenceFailure, op,
              "residual " + std::to_string(st.residual) + " after " + std::to_string(st.sweeps) + " sweeps");
}

ChartArrays prolong(const Atlas& coarse, const ChartArrays& psi_c, const Problem& fine) {
  // Interpolate phi = psi - h, which is smoother across charts than psi.
  ChartArrays phi_c = psi_c;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = coarse.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) phi_c[c][g.index(i, j)] -= fs_chart_potential(g.node(i, j));
    }
  }
  ChartArrays out;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = fine.atlas.charts[c];
    out[c].resize(g.node_count());
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        const std::size_t k = g.index(i, j);
        const double v = coarse.interpolate_chart(phi_c[c], c, g.node(i, j)) + fine.h[c][k];
        out[c][k] = std::min(v, fine.upper[c][k]);
      }
    }
  }
  return out;
}

ChartArrays default_start(const Problem& p, Obstacle kind) {
  ChartArrays psi = p.h;
  double shift = 0.0;
  if (kind == Obstacle::Relative) shift = -1.0;
  if (kind == Obstacle::Siciak) {
    // phi = -max_K h is admissible.
    double m = 0.0;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t k = 0; k < psi[c].size(); ++k) {
        if (p.upper[c][k] < kInf) m = std::max(m, p.h[c][k] - p.upper[c][k]);
      }
    }
    shift = -m;
  }
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < psi[c].size(); ++k) psi[c][k] = std::min(psi[c][k] + shift, p.upper[c][k]);
  }
  return psi;
}

struct LevelResult {
  ChartArrays psi;
  SolveStats stats;
  std::size_t set_nodes = 0;
  std::optional<double> coarse_sup;
  std::size_t coarse_set_nodes = 0;
  bool coarse_empty = false;
  double sup = 0.0;
};

std::optional<Atlas> coarser(const Atlas& a, const EnvelopeOptions& opt) {
  const int M = a.resolution();
  if (!opt.nested || (M - 1) % 2 != 0) return std::nullopt;
  const int Mc = (M - 1) / 2 + 1;
  if (Mc < opt.coarsest) return std::nullopt;
  try {
    return build_atlas(a.box_radius(), Mc);
  } catch (const Error&) {
    return std::nullopt;
  }
}

LevelResult solve_level(const SetSpec& set, const Atlas& a, Obstacle kind, const EnvelopeOptions& opt,
                        const char* op) {
  const Problem p = build_problem(set, a, kind);
  LevelResult r;
  r.set_nodes = p.set_nodes;
  if (p.set_nodes == 0) {
    if (kind == Obstacle::Relative) throw Error(ErrorCode::EmptyRegion, op, "set rasterizes to no node");
    throw Error(ErrorCode::EmptyRegion, op, "set rasterizes to no node");
  }
  ChartArrays start;
  bool have_start = false;
  if (auto ca = coarser(a, opt)) {
    try {
      LevelResult c = solve_level(set, *ca, kind, opt, op);
      r.coarse_sup = c.sup;
      r.coarse_set_nodes = c.set_nodes;
      if (!c.stats.polar) {
        start = prolong(*ca, c.psi, p);
        have_start = true;
      } else if (kind != Obstacle::Relative) {
        // Already beyond the polar threshold on the coarse atlas.
        r.psi = prolong(*ca, c.psi, p);
        r.stats = c.stats;
        r.sup = max_phi(r.psi, p.h);
        return r;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyRegion) throw;
      r.coarse_empty = true;
    }
  }
  r.psi = have_start ? std::move(start) : default_start(p, kind);
  r.stats = relax(p, r.psi, opt, kind != Obstacle::Relative, op);
  r.sup = max_phi(r.psi, p.h);
  return r;
}

double ring_disagreement(const QpshField& f) {
  const Atlas& a = f.atlas();
  const ChartGrid& g = a.charts[0];
  double worst = 0.0;
  for (int j = 0; j < g.resolution; ++j) {
    for (int i = 0; i < g.resolution; ++i) {
      const cplx z = g.node(i, j);
      const double r = std::abs(z);
      if (r < 1.0 / kBlendRadius || r > kBlendRadius) continue;
      const double other = a.interpolate_chart(f.chart(1), 1, 1.0 / z);
      worst = std::max(worst, std::abs(f.chart(0)[g.index(i, j)] - other));
    }
  }
  return worst;
}

EnvelopeResult run_envelope(const SetSpec& set, const Atlas& a, Obstacle kind, const EnvelopeOptions& opt,
                            const char* op) {
  LevelResult lr = solve_level(set, a, kind, opt, op);
  EnvelopeResult r;
  r.kind = kind == Obstacle::Relative ? EnvelopeKind::Relative : EnvelopeKind::Global;
  r.set = set;
  r.iterations = lr.stats.sweeps;
  r.residual = lr.stats.residual;
  r.set_nodes = lr.set_nodes;
  r.coarse_sup = lr.coarse_sup;
  r.field = QpshField::from_lifted(a, lr.psi, true);
  r.sup_value = r.field.sup();
  r.polar_flag = lr.stats.polar || r.sup_value > opt.polar_threshold;
  if (kind == Obstacle::Global && lr.coarse_sup && !r.polar_flag) {
    // A sup that keeps growing by a fixed amount per halving of the spacing
    // diverges in the limit: the grid sees a polar set.
    if (r.sup_value - *lr.coarse_sup >= 0.5 * std::log(2.0)) r.polar_flag = true;
    // Sets given by node masks keep their effective size when the spacing
    // halves, so the sup test above cannot fire. Their node count does not
    // grow either (curves double, regions quadruple).
    if (2 * lr.set_nodes < 3 * lr.coarse_set_nodes) r.polar_flag = true;
  }
  if (kind == Obstacle::Global && lr.coarse_empty) r.polar_flag = true;
  r.chart_disagreement = ring_disagreement(r.field);
  if (!r.polar_flag && r.chart_disagreement > 1e-6 + a.spacing()) {
    throw Error(ErrorCode::ConvergenceFailure, op,
                "charts disagree by " + std::to_string(r.chart_disagreement) + " on the blend ring");
  }
  return r;
}

}  // namespace

EnvelopeResult relative_extremal(const SetSpec& E, const Atlas& atlas, const EnvelopeOptions& opt) {
  return run_envelope(E, atlas, Obstacle::Relative, opt, "relative_extremal");
}

EnvelopeResult global_extremal(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt) {
  return run_envelope(K, atlas, Obstacle::Global, opt, "global_extremal");
}

EnvelopeResult siciak_extremal(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt) {
  return run_envelope(K, atlas, Obstacle::Siciak, opt, "siciak_extremal");
}

// ---------------------------------------------------------------------------

SupportReport support_and_mass_check(const EnvelopeResult& r, double support_tol, double mass_tol) {
  const MAMeasure mu = ma_measure(r.field, "envelope");
  const Atlas& a = r.field.atlas();
  SupportReport s;
  s.total_mass = mu.total();
  s.clipped_mass = mu.clipped_mass;
  // The measure may charge the set and the discrete boundary layer around it:
  // nodes whose 5-point stencil touches the set.
  std::array<Bitmap, 2> near;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    const Bitmap in = rasterize_set(r.set, g);
    const int M = g.resolution;
    near[c].assign(g.node_count(), 0);
    for (int j = 1; j < M - 1; ++j) {
      for (int i = 1; i < M - 1; ++i) {
        const std::size_t k = g.index(i, j);
        near[c][k] = in[k] | in[k - 1] | in[k + 1] | in[k - M] | in[k + M];
      }
    }
  }
  auto closure = [&](int c, std::size_t k) { return near[c][k] != 0; };
  if (r.kind == EnvelopeKind::Global) {
    s.set_mass = mu.measure.mass_where(closure);
    s.forbidden_mass = s.total_mass - s.set_mass;
    s.passes = s.forbidden_mass <= support_tol && std::abs(s.set_mass - 1.0) <= 2.0 * mass_tol;
  } else {
    // Forbidden region: {h* < 0} minus the closure of E.
    const double cut = -1e-7;
    s.forbidden_mass = mu.measure.mass_where(
        [&](int c, std::size_t k) { return !closure(c, k) && r.field.chart(c)[k] < cut; });
    s.set_mass = mu.measure.mass_where(closure);
    s.passes = s.forbidden_mass <= support_tol;
  }
  return s;
}

MonotoneReport monotone_limit_check(const std::vector<SetSpec>& family, EnvelopeKind kind, const Atlas& atlas,
                                    const EnvelopeOptions& opt) {
  MonotoneReport rep;
  if (family.size() < 2) {
    rep.passes = true;
    return rep;
  }
  std::vector<std::array<Bitmap, 2>> bits;
  for (const auto& s : family) bits.push_back(rasterize_set(s, atlas));
  auto subset = [&](std::size_t x, std::size_t y) {
    for (int c = 0; c < 2; ++c) {
      for (std::size_t k = 0; k < bits[x][c].size(); ++k) {
        if (bits[x][c][k] && !bits[y][c][k]) return false;
      }
    }
    return true;
  };
  bool increasing = true, decreasing = true;
  for (std::size_t k = 0; k + 1 < family.size(); ++k) {
    increasing &= subset(k, k + 1);
    decreasing &= subset(k + 1, k);
  }
  if (!increasing && !decreasing) {
    throw Error(ErrorCode::NotMonotoneFamily, "monotone_limit_check", "family is not nested on the grid");
  }
  std::vector<QpshField> fields;
  for (const auto& s : family) {
    EnvelopeResult r = kind == EnvelopeKind::Global ? global_extremal(s, atlas, opt) : relative_extremal(s, atlas, opt);
    if (kind == EnvelopeKind::Global) {
      rep.capacities.push_back(r.polar_flag ? 0.0 : std::exp(-r.sup_value));
    } else {
      const MAMeasure mu = ma_measure(r.field, "monotone_limit_check");
      double e = 0.0;
      for (int c = 0; c < 2; ++c) {
        for (std::size_t k = 0; k < mu.measure.weights[c].size(); ++k) e -= mu.measure.weights[c][k] * r.field.chart(c)[k];
      }
      rep.capacities.push_back(e);
    }
    fields.push_back(r.field);
  }
  // Larger sets give smaller envelopes, for both kinds.
  for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
    const QpshField& big = increasing ? fields[k + 1] : fields[k];
    const QpshField& small = increasing ? fields[k] : fields[k + 1];
    for (int c = 0; c < 2; ++c) {
      for (std::size_t q = 0; q < big.chart(c).size(); ++q) {
        rep.worst_order_violation = std::max(rep.worst_order_violation, big.chart(c)[q] - small.chart(c)[q]);
      }
    }
  }
  rep.passes = rep.worst_order_violation <= 1e-6;
  return rep;
}

// ---------------------------------------------------------------------------

double ToricEnvelope::phi(double r) const {
  if (polar) return kInf;
  if (r == 0.0) return psi.u.front();
  if (std::isinf(r)) {
    // u(s) - H(s) -> u_last - s_last as s -> infinity (slope 1 tail).
    return psi.u.back() - psi.s.back();
  }
  const double s = std::log(r);
  return psi(s) - fs_radial(s);
}

double ToricEnvelope::sup() const {
  if (polar) return kInf;
  double m = std::max(phi(0.0), phi(kInf));
  for (std::size_t k = 0; k < psi.s.size(); ++k) m = std::max(m, psi.u[k] - fs_radial(psi.s[k]));
  return m;
}

double ToricEnvelope::energy() const {
  if (polar) return 0.0;
  const RadialMeasure mu = ma_measure_radial(psi, n);
  double e = 0.0;
  for (std::size_t k = 0; k < mu.s.size(); ++k) {
    const double ph = std::clamp(psi(mu.s[k]) - fs_radial(mu.s[k]), -kInf, 0.0);
    e -= ph * mu.mass[k];
  }
  return e;
}

ToricEnvelope toric_envelope(const SetSpec& set, int n, EnvelopeKind kind, std::size_t samples, double s_range) {
  const auto rad = set.radial();
  if (!rad) throw Error(ErrorCode::NotCircled, "toric_envelope", "set is not invariant under rotations");
  if (n < 1) throw Error(ErrorCode::ConfigError, "toric_envelope", "dimension must be >= 1");
  // Sample grid in s, with every finite positive interval endpoint inserted.
  std::vector<double> s;
  s.reserve(samples + 2 * rad->intervals.size());
  for (std::size_t k = 0; k < samples; ++k) {
    s.push_back(-s_range + 2.0 * s_range * static_cast<double>(k) / static_cast<double>(samples - 1));
  }
  for (const auto& iv : rad->intervals) {
    for (double r : iv) {
      if (r > 0.0 && std::isfinite(r) && std::abs(std::log(r)) < s_range) s.push_back(std::log(r));
    }
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  // Obstacle G(s): H - 1 on E, H off E (relative); H on K, absent off K (global).
  std::vector<double> xs, gs;
  for (double x : s) {
    const bool in = rad->contains(std::exp(x));
    const double H = fs_radial(x);
    if (kind == EnvelopeKind::Relative) {
      xs.push_back(x);
      gs.push_back(in ? H - 1.0 : H);
    } else if (in) {
      xs.push_back(x);
      gs.push_back(H);
    }
  }
  ToricEnvelope out;
  out.kind = kind;
  out.n = n;
  if (xs.empty()) {
    out.polar = true;
    return out;
  }
  // Lower convex hull (monotone chain).
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross = (xs[b] - xs[a]) * (gs[k] - gs[a]) - (gs[b] - gs[a]) * (xs[k] - xs[a]);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(k);
  }
  // Keep the part whose slopes lie in [0, 1]: from the minimum vertex to the
  // last vertex whose incoming slope is <= 1. Beyond them the envelope is
  // continued with slope 0 on the left and slope 1 on the right.
  std::size_t first = 0;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const double sl = (gs[hull[k + 1]] - gs[hull[k]]) / (xs[hull[k + 1]] - xs[hull[k]]);
    if (sl < 0.0) first = k + 1;
  }
  std::size_t last = first;
  for (std::size_t k = first; k + 1 < hull.size(); ++k) {
    const double sl = (gs[hull[k + 1]] - gs[hull[k]]) / (xs[hull[k + 1]] - xs[hull[k]]);
    if (sl <= 1.0) last = k + 1;
    else break;
  }
  for (std::size_t k = first; k <= last; ++k) {
    out.psi.s.push_back(xs[hull[k]]);
    out.psi.u.push_back(gs[hull[k]]);
  }
  return out;
}

}  // namespace kahlercap
