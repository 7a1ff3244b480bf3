#include "kahlercap/qpsh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_same_grid(const QpshField& a, const QpshField& b, const char* op) {
  if (!(a.atlas() == b.atlas())) throw Error(ErrorCode::GridMismatch, op, "fields live on different grids");
}

}  // namespace

QpshField::QpshField(Atlas atlas, ChartArrays phi, bool claimed_psh)
    : atlas_(atlas), phi_(std::move(phi)), claimed_(claimed_psh) {
  for (int c = 0; c < 2; ++c) {
    if (phi_[c].size() != atlas_.charts[c].node_count()) {
      throw Error(ErrorCode::GridMismatch, "QpshField", "value array does not match grid");
    }
  }
  double hi = -std::numeric_limits<double>::infinity();
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& arr : phi_) {
    for (double v : arr) {
      if (std::isinf(v) && v < 0) {
        ++sentinels_;
        continue;
      }
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
  }
  sup_ = hi;
  inf_ = sentinels_ > 0 ? kSentinel : lo;
}

bool QpshField::polar_flagged() const {
  const double total = static_cast<double>(phi_[0].size() + phi_[1].size());
  return static_cast<double>(sentinels_) > 1e-3 * total;
}

QpshField QpshField::sample(const Atlas& atlas, const std::function<double(cplx, int)>& fn, bool claimed) {
  ChartArrays phi;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = atlas.charts[c];
    phi[c].resize(g.node_count());
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) phi[c][g.index(i, j)] = fn(g.node(i, j), c);
    }
  }
  return QpshField(atlas, std::move(phi), claimed);
}

QpshField QpshField::from_lifted(const Atlas& atlas, const ChartArrays& psi, bool claimed) {
  ChartArrays phi = psi;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = atlas.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) phi[c][g.index(i, j)] -= fs_chart_potential(g.node(i, j));
    }
  }
  return QpshField(atlas, std::move(phi), claimed);
}

// ---------------------------------------------------------------------------

double DiscreteMeasure::total() const {
  double s = 0.0;
  for (const auto& w : weights) {
    for (double v : w) s += v;
  }
  return s;
}

double DiscreteMeasure::mass_where(const std::function<bool(int, std::size_t)>& pred) const {
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < weights[c].size(); ++k) {
      if (weights[c][k] != 0.0 && pred(c, k)) s += weights[c][k];
    }
  }
  return s;
}

DiscreteMeasure DiscreteMeasure::zero(const Atlas& atlas) {
  DiscreteMeasure m;
  m.atlas = atlas;
  for (int c = 0; c < 2; ++c) m.weights[c].assign(atlas.charts[c].node_count(), 0.0);
  return m;
}

DiscreteMeasure DiscreteMeasure::fs_volume(const Atlas& atlas) {
  DiscreteMeasure m = zero(atlas);
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = atlas.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) m.weights[c][g.index(i, j)] = atlas.volume_weight(c, i, j);
    }
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const Atlas& atlas, int chart, int i, int j) {
  DiscreteMeasure m = zero(atlas);
  m.weights[chart][atlas.charts[chart].index(i, j)] = 1.0;
  return m;
}

// ---------------------------------------------------------------------------

ChartArrays lift_to_lelong(const QpshField& f) {
  ChartArrays psi = f.values();
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = f.atlas().charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) psi[c][g.index(i, j)] += fs_chart_potential(g.node(i, j));
    }
  }
  return psi;
}

DefectReport defect_report(const QpshField& f) {
  const Atlas& a = f.atlas();
  const ChartArrays psi = lift_to_lelong(f);
  const double h = a.spacing();
  DefectReport r;
  r.min_density = std::numeric_limits<double>::infinity();
  double max_e4 = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    const auto& p = psi[c];
    const int M = g.resolution;
    for (int j = 2; j < M - 2; ++j) {
      for (int i = 2; i < M - 2; ++i) {
        if (!a.supported(c, i, j)) continue;
        const std::size_t k = g.index(i, j);
        const double v[9] = {p[k], p[k - 1], p[k + 1], p[k - M], p[k + M],
                              p[k - 2], p[k + 2], p[k - 2 * M], p[k + 2 * M]};
        bool bad = false;
        for (double x : v) bad |= std::isinf(x);
        if (bad) {
          ++r.skipped;
          continue;
        }
        ++r.checked;
        const double density = (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (kTwoPi * h * h);
        const double d4 = (v[5] - 4.0 * v[1] + 6.0 * v[0] - 4.0 * v[2] + v[6]) +
                          (v[7] - 4.0 * v[3] + 6.0 * v[0] - 4.0 * v[4] + v[8]);
        const double e4 = std::abs(d4) / (12.0 * kTwoPi * h * h);
        max_e4 = std::max(max_e4, e4);
        r.min_density = std::min(r.min_density, density);
        // Exact omega-psh functions satisfy the discrete inequality up to the
        // 5-point truncation error, which the fourth differences estimate.
        if (density < -(4.0 * h + 2.0 * e4)) ++r.failing;
      }
    }
  }
  if (r.checked == 0) r.min_density = 0.0;
  r.defect_tol = 4.0 * h * (1.0 + max_e4);
  r.certified = r.failing == 0;
  return r;
}

double omega_psh_defect(const QpshField& f, bool strict) {
  const DefectReport r = defect_report(f);
  if (strict && r.skipped > 0) {
    throw Error(ErrorCode::SentinelInStencil, "omega_psh_defect",
                std::to_string(r.skipped) + " stencils touch a sentinel node");
  }
  return r.min_density;
}

// ---------------------------------------------------------------------------

QpshField lattice_combine(const QpshField& a, const QpshField& b, CombineMode mode) {
  require_same_grid(a, b, "lattice_combine");
  ChartArrays out = a.values();
  for (int c = 0; c < 2; ++c) {
    const auto& x = a.chart(c);
    const auto& y = b.chart(c);
    for (std::size_t k = 0; k < x.size(); ++k) {
      switch (mode) {
        case CombineMode::Max: out[c][k] = std::max(x[k], y[k]); break;
        case CombineMode::Mean: out[c][k] = 0.5 * (x[k] + y[k]); break;
        case CombineMode::Softmax: {
          const double m = std::max(x[k], y[k]);
          out[c][k] = std::isinf(m) ? m : m + std::log(std::exp(x[k] - m) + std::exp(y[k] - m));
          break;
        }
      }
    }
  }
  return QpshField(a.atlas(), std::move(out), a.claimed_psh() && b.claimed_psh());
}

QpshField add_constant(const QpshField& f, double c) {
  ChartArrays out = f.values();
  for (auto& arr : out) {
    for (double& v : arr) v += c;
  }
  return QpshField(f.atlas(), std::move(out), f.claimed_psh());
}

QpshField normalize_sup(const QpshField& f) {
  if (f.sentinel_count() == f.chart(0).size() + f.chart(1).size()) {
    throw Error(ErrorCode::AllSentinel, "normalize_sup", "every node is a sentinel");
  }
  return add_constant(f, -f.sup());
}

// ---------------------------------------------------------------------------

QpshField kernel_potential(const Atlas& atlas, const std::vector<Atom>& atoms) {
  double mass = 0.0;
  for (const auto& a : atoms) {
    if (a.weight < 0.0) throw Error(ErrorCode::NotProbability, "kernel_potential", "negative weight");
    mass += a.weight;
  }
  if (std::abs(mass - 1.0) > 1e-9) {
    throw Error(ErrorCode::NotProbability, "kernel_potential", "total mass " + std::to_string(mass));
  }
  std::vector<std::array<cplx, 2>> ys;
  std::vector<double> ws;
  for (const auto& a : atoms) {
    if (a.weight == 0.0) continue;
    const double n = a.point.norm();
    ys.push_back({a.point.coords[0] / n, a.point.coords[1] / n});
    ws.push_back(a.weight);
  }
  return QpshField::sample(
      atlas,
      [&](cplx z, int chart) {
        std::array<cplx, 2> x = chart == 0 ? std::array<cplx, 2>{z, 1.0} : std::array<cplx, 2>{1.0, z};
        const double n = std::sqrt(std::norm(x[0]) + std::norm(x[1]));
        x[0] /= n;
        x[1] /= n;
        double s = 0.0;
        for (std::size_t k = 0; k < ys.size(); ++k) {
          const double wedge = std::abs(x[0] * ys[k][1] - x[1] * ys[k][0]);
          if (wedge == 0.0) return kSentinel;
          s += ws[k] * std::log(wedge);
        }
        return s;
      },
      true);
}

QpshField kernel_potential(const DiscreteMeasure& m) {
  std::vector<Atom> atoms;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = m.atlas.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        const double w = m.weights[c][g.index(i, j)];
        if (w != 0.0) atoms.push_back({from_chart(g.node(i, j), c), w});
      }
    }
  }
  return kernel_potential(m.atlas, atoms);
}

// ---------------------------------------------------------------------------

QpshField extend_local_psh(const Atlas& atlas, const std::vector<double>& u, double A, double eps) {
  const ChartGrid& g0 = atlas.charts[0];
  if (u.size() != g0.node_count()) throw Error(ErrorCode::GridMismatch, "extend_local_psh", "u must live on chart 0");
  if (!(eps > 0.0) || 1.0 + eps > g0.box_radius - 2.0 * g0.spacing) {
    throw Error(ErrorCode::ConfigError, "extend_local_psh", "collar must fit inside the chart box");
  }
  const double outer = 1.0 + eps;
  double m = 0.0;
  for (int j = 0; j < g0.resolution; ++j) {
    for (int i = 0; i < g0.resolution; ++i) {
      const double v = u[g0.index(i, j)];
      if (std::abs(g0.node(i, j)) <= 1.0 && std::isfinite(v)) m = std::max(m, std::abs(v));
    }
  }
  auto log_term = [&](double r) { return A * std::max(std::log(r), 0.0) - m - 1.0; };
  // The max must be taken by the log term on the outer collar circle.
  double worst = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < g0.resolution; ++j) {
    for (int i = 0; i < g0.resolution; ++i) {
      const double r = std::abs(g0.node(i, j));
      if (r > outer - g0.spacing && r <= outer) worst = std::max(worst, u[g0.index(i, j)] - log_term(r));
    }
  }
  if (worst > 0.0) {
    throw Error(ErrorCode::CollarMismatch, "extend_local_psh",
                "u exceeds the logarithmic term by " + std::to_string(worst) + " on the outer collar");
  }
  if (A > 1.0) {
    throw Error(ErrorCode::RangeViolation, "extend_local_psh",
                "A > 1 leaves the Lelong class; the result would not be omega-psh");
  }
  const double C = m + 1.0;
  auto U = [&](cplx z) {
    const double r = std::abs(z);
    if (r <= 1.0) return atlas.interpolate_chart(u, 0, z);
    if (r <= outer) return std::max(atlas.interpolate_chart(u, 0, z), log_term(r));
    return log_term(r);
  };
  return QpshField::sample(
      atlas,
      [&](cplx z, int chart) {
        if (chart == 0) {
          const auto ij = g0.nearest(z);
          const double uz = std::abs(z) <= outer ? u[g0.index((*ij)[0], (*ij)[1])] : 0.0;
          const double r = std::abs(z);
          double Uz = r <= 1.0 ? uz : (r <= outer ? std::max(uz, log_term(r)) : log_term(r));
          return Uz - fs_chart_potential(z) + C;
        }
        if (z == cplx(0.0)) return A == 1.0 ? 0.0 : kSentinel;
        const cplx zz = 1.0 / z;
        // log|zz| - h(zz) = -h(z) in the chart at infinity; keep it exact there.
        if (std::abs(zz) > outer) return (A - 1.0) * std::log(std::abs(zz)) - fs_chart_potential(z) - m - 1.0 + C;
        return U(zz) - fs_chart_potential(zz) + C;
      },
      true);
}

// ---------------------------------------------------------------------------

double fs_integral(const QpshField& f, const std::function<double(double)>& g) {
  const Atlas& a = f.atlas();
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& gr = a.charts[c];
    for (int j = 0; j < gr.resolution; ++j) {
      for (int i = 0; i < gr.resolution; ++i) {
        const double w = a.volume_weight(c, i, j);
        if (w == 0.0) continue;
        const double v = f.chart(c)[gr.index(i, j)];
        if (std::isinf(v)) continue;
        s += w * g(v);
      }
    }
  }
  return s;
}

double fs_mean(const QpshField& f) {
  return fs_integral(f, [](double v) { return v; });
}

// ---------------------------------------------------------------------------

nlohmann::json field_metadata(const QpshField& f) {
  nlohmann::json j;
  j["charts"] = 2;
  j["box_radius"] = f.atlas().box_radius();
  j["resolution"] = f.atlas().resolution();
  j["spacing"] = f.atlas().spacing();
  j["claimed_psh"] = f.claimed_psh();
  j["sup"] = f.sup();
  j["sentinel_nodes"] = f.sentinel_count();
  j["sentinel_encoding"] = kSentinelDisk;
  return j;
}

void write_field(const std::string& path, const QpshField& f, const nlohmann::json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_field", "cannot open " + path);
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = f.atlas().charts[c];
    const std::int32_t chart = c;
    const double box = g.box_radius;
    const std::int32_t res = g.resolution;
    out.write(reinterpret_cast<const char*>(&chart), sizeof chart);
    out.write(reinterpret_cast<const char*>(&box), sizeof box);
    out.write(reinterpret_cast<const char*>(&res), sizeof res);
    for (double v : f.chart(c)) {
      const double d = std::isinf(v) && v < 0 ? kSentinelDisk : v;
      out.write(reinterpret_cast<const char*>(&d), sizeof d);
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write_field", "short write to " + path);
  nlohmann::json side = field_metadata(f);
  for (auto it = meta.begin(); it != meta.end(); ++it) side[it.key()] = it.value();
  std::ofstream js(path + ".json");
  js << side.dump(2) << "\n";
}

QpshField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "read_field", "cannot open " + path);
  ChartArrays phi;
  double box = 0.0;
  std::int32_t res = 0;
  for (int c = 0; c < 2; ++c) {
    std::int32_t chart = -1;
    in.read(reinterpret_cast<char*>(&chart), sizeof chart);
    in.read(reinterpret_cast<char*>(&box), sizeof box);
    in.read(reinterpret_cast<char*>(&res), sizeof res);
    if (!in || chart != c || res < 3 || res > 100000) {
      throw Error(ErrorCode::IoError, "read_field", path + ": bad header");
    }
    phi[c].resize(static_cast<std::size_t>(res) * res);
    in.read(reinterpret_cast<char*>(phi[c].data()), static_cast<std::streamsize>(phi[c].size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::IoError, "read_field", path + ": truncated");
    for (double& v : phi[c]) {
      if (v <= kSentinelDisk) v = kSentinel;
    }
  }
  bool claimed = false;
  std::ifstream js(path + ".json");
  if (js) {
    try {
      claimed = nlohmann::json::parse(js).value("claimed_psh", false);
    } catch (const nlohmann::json::exception&) {
      claimed = false;
    }
  }
  return QpshField(build_atlas(box, res), std::move(phi), claimed);
}

}  // namespace kahlercap
