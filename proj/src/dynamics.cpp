#include "kahlercap/dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

double norm2(const std::vector<cplx>& x) {
  double s = 0.0;
  for (const cplx& v : x) s += std::norm(v);
  return std::sqrt(s);
}

std::vector<cplx> unit(const std::vector<cplx>& x) {
  const double n = norm2(x);
  std::vector<cplx> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] / n;
  return y;
}

std::vector<cplx> chart_rep(cplx z, int chart) {
  return unit(chart == 0 ? std::vector<cplx>{z, 1.0} : std::vector<cplx>{1.0, z});
}

// Partial derivative of a homogeneous polynomial in variable k at x.
cplx partial(const HomPoly& p, int k, const std::vector<cplx>& x) {
  cplx s = 0.0;
  for (const auto& [e, c] : p.terms()) {
    if (e[static_cast<std::size_t>(k)] == 0) continue;
    cplx t = c * static_cast<double>(e[static_cast<std::size_t>(k)]);
    for (std::size_t q = 0; q < e.size(); ++q) {
      const int pw = e[q] - (static_cast<int>(q) == k ? 1 : 0);
      for (int r = 0; r < pw; ++r) t *= x[q];
    }
    s += t;
  }
  return s;
}

// ---- map parser ----------------------------------------------------------

struct Term {
  cplx coeff;
  int a;  // power of z
  int b;  // power of w
};

class MapParser {
public:
  explicit MapParser(const std::string& s) : s_(s) {}

  std::vector<HomPoly> parse() {
    std::vector<HomPoly> out;
    while (true) {
      out.push_back(component());
      skip();
      if (pos_ == s_.size()) break;
      if (s_[pos_] != ',') fail("expected ',' or end of input");
      ++pos_;
    }
    return out;
  }

private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::ConfigError, "parse_map", what + " at column " + std::to_string(pos_ + 1) + " of \"" + s_ + "\"");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool at_factor() {
    skip();
    if (pos_ >= s_.size()) return false;
    const char c = s_[pos_];
    return c == 'z' || c == 'w' || c == '*' || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  HomPoly component() {
    std::vector<Term> terms;
    skip();
    const std::size_t start = pos_;
    double sign = 1.0;
    if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
      sign = s_[pos_] == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    while (true) {
      Term t = term();
      t.coeff *= sign;
      terms.push_back(t);
      skip();
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
        sign = s_[pos_] == '-' ? -1.0 : 1.0;
        ++pos_;
        continue;
      }
      break;
    }
    const int deg = terms.front().a + terms.front().b;
    HomPoly p(1, deg);
    for (const Term& t : terms) {
      if (t.a + t.b != deg) {
        pos_ = start;
        fail("component is not homogeneous");
      }
      p.set({t.a, t.b}, p.coeff({t.a, t.b}) + t.coeff);
    }
    if (p.is_zero()) {
      pos_ = start;
      fail("component is identically zero");
    }
    return p;
  }

  Term term() {
    Term t{1.0, 0, 0};
    bool any = false;
    while (at_factor()) {
      const char c = s_[pos_];
      if (c == '*') {
        if (!any) fail("'*' without a left operand");
        ++pos_;
        skip();
        if (!at_factor() || s_[pos_] == '*') fail("'*' without a right operand");
        continue;
      }
      any = true;
      if (c == 'z' || c == 'w') {
        ++pos_;
        int e = 1;
        skip();
        if (pos_ < s_.size() && s_[pos_] == '^') {
          ++pos_;
          skip();
          const std::size_t b = pos_;
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
          if (b == pos_) fail("expected an integer exponent");
          e = std::stoi(s_.substr(b, pos_ - b));
        }
        (c == 'z' ? t.a : t.b) += e;
      } else {
        const std::size_t b = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        try {
          std::size_t used = 0;
          const std::string num = s_.substr(b, pos_ - b);
          const double v = std::stod(num, &used);
          if (used != num.size()) throw std::invalid_argument(num);
          t.coeff *= v;
        } catch (const std::exception&) {
          pos_ = b;
          fail("malformed number");
        }
      }
    }
    if (!any) fail("expected a term");
    return t;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

// Resultant of two binary forms of degree d via the Sylvester matrix.
double normalized_resultant(const HomPoly& p, const HomPoly& q) {
  const int d = p.degree();
  const int n = 2 * d;
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  double np = 0.0, nq = 0.0;
  for (int k = 0; k <= d; ++k) {
    // Coefficient of z^{d-k} w^k.
    const cplx a = p.coeff({d - k, k});
    const cplx b = q.coeff({d - k, k});
    np += std::norm(a);
    nq += std::norm(b);
    for (int r = 0; r < d; ++r) {
      S(r, r + k) = a;
      S(d + r, r + k) = b;
    }
  }
  const double det = std::abs(S.partialPivLu().determinant());
  return det / std::pow(std::sqrt(np) * std::sqrt(nq), d);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<cplx> Endomorphism::apply_unit(const std::vector<cplx>& x, double* log_norm) const {
  std::vector<cplx> y{lift[0](x), lift[1](x)};
  const double n = norm2(y);
  if (n == 0.0) throw Error(ErrorCode::DegenerateLift, "Endomorphism::apply", "lift vanishes");
  if (log_norm) *log_norm = std::log(n);
  y[0] /= n;
  y[1] /= n;
  return y;
}

ProjectivePoint Endomorphism::apply(const ProjectivePoint& p) const {
  const auto y = apply_unit(unit(p.coords));
  return normalize_point(y);
}

double Endomorphism::step_potential(const std::vector<cplx>& x) const {
  const std::vector<cplx> y{lift[0](x), lift[1](x)};
  return std::log(norm2(y)) / lambda - std::log(norm2(x));
}

double Endomorphism::fs_jacobian(const std::vector<cplx>& x) const {
  const cplx det = partial(lift[0], 0, x) * partial(lift[1], 1, x) - partial(lift[0], 1, x) * partial(lift[1], 0, x);
  const std::vector<cplx> y{lift[0](x), lift[1](x)};
  const double nx = norm2(x), ny = norm2(y);
  return std::abs(det) * nx * nx / (lambda * ny * ny);
}

std::string Endomorphism::to_string() const {
  return "(" + lift[0].to_string() + ", " + lift[1].to_string() + ")";
}

std::vector<HomPoly> parse_map(const std::string& text) { return MapParser(text).parse(); }

Endomorphism build_endomorphism(const std::vector<HomPoly>& polys, double floor) {
  if (polys.size() != 2) {
    throw Error(ErrorCode::ConfigError, "build_endomorphism", "need 2 components on CP^1, got " + std::to_string(polys.size()));
  }
  const int d = polys[0].degree();
  if (polys[1].degree() != d) {
    throw Error(ErrorCode::DegreeMismatch, "build_endomorphism",
                "degrees " + std::to_string(d) + " and " + std::to_string(polys[1].degree()));
  }
  if (d < 2) throw Error(ErrorCode::DegreeMismatch, "build_endomorphism", "degree must be >= 2");
  for (const auto& p : polys) {
    if (p.dimension() != 1) throw Error(ErrorCode::ConfigError, "build_endomorphism", "components must be binary forms");
    if (p.is_zero()) throw Error(ErrorCode::DegenerateLift, "build_endomorphism", "zero component");
  }
  Endomorphism f;
  f.lift = polys;
  f.lambda = d;
  f.resultant = normalized_resultant(polys[0], polys[1]);
  // Test cloud on the unit sphere of C^2 (phases of x0 are irrelevant).
  double m = kInf;
  for (int a = 0; a <= 256; ++a) {
    const double t = 0.5 * kPi * a / 256;
    for (int b = 0; b < 64; ++b) {
      const std::vector<cplx> x{std::cos(t), std::sin(t) * std::polar(1.0, 2.0 * kPi * b / 64)};
      m = std::min(m, norm2({polys[0](x), polys[1](x)}));
    }
  }
  f.lift_floor = m;
  if (f.resultant <= 1e-12 || m < floor) {
    throw Error(ErrorCode::DegenerateLift, "build_endomorphism",
                "components have a common zero (resultant " + std::to_string(f.resultant) + ")");
  }
  return f;
}

QpshField green_step_potential(const Endomorphism& f, const Atlas& atlas) {
  return QpshField::sample(atlas, [&](cplx z, int c) { return f.step_potential(chart_rep(z, c)); }, true);
}

std::vector<QpshField> green_partial_sums(const Endomorphism& f, const Atlas& atlas, int j_max) {
  std::vector<ChartArrays> g(static_cast<std::size_t>(j_max) + 1);
  for (auto& arr : g) {
    for (int c = 0; c < 2; ++c) arr[c].assign(atlas.charts[c].node_count(), 0.0);
  }
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& gr = atlas.charts[c];
    for (int j = 0; j < gr.resolution; ++j) {
      for (int i = 0; i < gr.resolution; ++i) {
        const std::size_t k = gr.index(i, j);
        std::vector<cplx> x = chart_rep(gr.node(i, j), c);
        double acc = 0.0, w = 1.0;
        for (int l = 0; l < j_max; ++l) {
          double ln = 0.0;
          std::vector<cplx> y = f.apply_unit(x, &ln);
          acc += w * ln / f.lambda;
          w /= f.lambda;
          g[static_cast<std::size_t>(l) + 1][c][k] = acc;
          x = std::move(y);
        }
      }
    }
  }
  std::vector<QpshField> out;
  for (auto& arr : g) out.emplace_back(atlas, std::move(arr), true);
  return out;
}

GreenResult green_iterate(const Endomorphism& f, const Atlas& atlas, int j) {
  if (j < 0) throw Error(ErrorCode::ConfigError, "green_iterate", "j must be >= 0");
  GreenResult r;
  r.j = j;
  ChartArrays g;
  double sup_phi = 0.0, resid = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& gr = atlas.charts[c];
    g[c].assign(gr.node_count(), 0.0);
    for (int jj = 0; jj < gr.resolution; ++jj) {
      for (int i = 0; i < gr.resolution; ++i) {
        std::vector<cplx> x = chart_rep(gr.node(i, jj), c);
        // phi along the orbit x_0, ..., x_j.
        std::vector<double> phi(static_cast<std::size_t>(j) + 1);
        for (int l = 0; l <= j; ++l) {
          double ln = 0.0;
          std::vector<cplx> y = f.apply_unit(x, &ln);
          phi[static_cast<std::size_t>(l)] = ln / f.lambda;
          sup_phi = std::max(sup_phi, std::abs(phi[static_cast<std::size_t>(l)]));
          x = std::move(y);
        }
        double gj = 0.0, gjf = 0.0, w = 1.0;
        for (int l = 0; l < j; ++l) {
          gj += w * phi[static_cast<std::size_t>(l)];
          gjf += w * phi[static_cast<std::size_t>(l) + 1];
          w /= f.lambda;
        }
        g[c][gr.index(i, jj)] = gj;
        resid = std::max(resid, std::abs(gj - phi[0] - gjf / f.lambda));
      }
    }
  }
  r.field = QpshField(atlas, std::move(g), true);
  r.sup_phi = sup_phi;
  r.error_bound = sup_phi * std::pow(static_cast<double>(f.lambda), -j) / (1.0 - 1.0 / f.lambda);
  r.equation_residual = resid;
  r.step_mass = ma_measure(green_step_potential(f, atlas), "green_step_potential").total();
  return r;
}

GreenResult green_function(const Endomorphism& f, const Atlas& atlas, double tol, int j_cap) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ConfigError, "green_function", "tol must be positive");
  // sup |phi| over the grid sets the number of terms; the final bound uses
  // the sup over every orbit point actually visited.
  const QpshField phi = green_step_potential(f, atlas);
  const double s = std::max(std::abs(phi.sup()), std::abs(phi.inf()));
  int j = 0;
  while (s * std::pow(static_cast<double>(f.lambda), -j) / (1.0 - 1.0 / f.lambda) > tol) {
    if (++j > j_cap) throw Error(ErrorCode::ConvergenceFailure, "green_function", "tail bound above tol at the cap");
  }
  return green_iterate(f, atlas, j);
}

// ---------------------------------------------------------------------------

namespace {

// Even-odd test for a point inside a quadrilateral.
bool in_polygon(const std::array<cplx, 4>& q, cplx p) {
  bool in = false;
  for (int a = 0, b = 3; a < 4; b = a++) {
    const double ya = q[a].imag(), yb = q[b].imag();
    if ((ya > p.imag()) != (yb > p.imag())) {
      const double x = (q[b].real() - q[a].real()) * (p.imag() - ya) / (yb - ya) + q[a].real();
      if (p.real() < x) in = !in;
    }
  }
  return in;
}

std::optional<cplx> coordinate(const std::vector<cplx>& x, int chart) {
  const cplx num = chart == 0 ? x[0] : x[1];
  const cplx den = chart == 0 ? x[1] : x[0];
  if (std::abs(den) < 1e-300) return std::nullopt;
  return num / den;
}

std::vector<cplx> iterate(const Endomorphism& f, std::vector<cplx> x, int j) {
  for (int l = 0; l < j; ++l) x = f.apply_unit(x);
  return x;
}

}  // namespace

std::array<Bitmap, 2> forward_image(const Endomorphism& f, const SetSpec& K, const Atlas& atlas, int j, bool dilate) {
  const auto in = rasterize_set(K, atlas);
  std::array<Bitmap, 2> out;
  for (int t = 0; t < 2; ++t) out[t].assign(atlas.charts[t].node_count(), 0);
  const double h = atlas.spacing();
  const std::array<cplx, 4> offs{cplx(-0.5, -0.5), cplx(0.5, -0.5), cplx(0.5, 0.5), cplx(-0.5, 0.5)};
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = atlas.charts[c];
    for (int jj = 0; jj < g.resolution; ++jj) {
      for (int i = 0; i < g.resolution; ++i) {
        if (!in[c][g.index(i, jj)]) continue;
        const cplx z = g.node(i, jj);
        const auto center = iterate(f, chart_rep(z, c), j);
        std::array<std::vector<cplx>, 4> corners;
        for (int q = 0; q < 4; ++q) corners[q] = iterate(f, chart_rep(z + offs[q] * h, c), j);
        for (int t = 0; t < 2; ++t) {
          const ChartGrid& gt = atlas.charts[t];
          const auto yc = coordinate(center, t);
          if (!yc) continue;
          if (auto idx = gt.nearest(*yc)) out[t][gt.index((*idx)[0], (*idx)[1])] = 1;
          std::array<cplx, 4> quad;
          bool ok = true;
          for (int q = 0; q < 4 && ok; ++q) {
            const auto y = coordinate(corners[q], t);
            if (!y) ok = false;
            else quad[q] = *y;
          }
          if (!ok) continue;
          double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
          for (const cplx& p : quad) {
            x0 = std::min(x0, p.real());
            x1 = std::max(x1, p.real());
            y0 = std::min(y0, p.imag());
            y1 = std::max(y1, p.imag());
          }
          const double half = 0.5 * (gt.resolution - 1);
          const int i0 = std::max(0, static_cast<int>(std::ceil(x0 / h + half)));
          const int i1 = std::min(gt.resolution - 1, static_cast<int>(std::floor(x1 / h + half)));
          const int j0 = std::max(0, static_cast<int>(std::ceil(y0 / h + half)));
          const int j1 = std::min(gt.resolution - 1, static_cast<int>(std::floor(y1 / h + half)));
          // Images wider than a quarter of the box wrap around a critical
          // point; only their center is kept.
          if (i1 - i0 > gt.resolution / 4 || j1 - j0 > gt.resolution / 4) continue;
          for (int b = j0; b <= j1; ++b) {
            for (int a = i0; a <= i1; ++a) {
              if (in_polygon(quad, gt.node(a, b))) out[t][gt.index(a, b)] = 1;
            }
          }
        }
      }
    }
  }
  if (dilate) {
    for (int t = 0; t < 2; ++t) {
      const ChartGrid& g = atlas.charts[t];
      const int M = g.resolution;
      Bitmap d = out[t];
      for (int jj = 0; jj < M; ++jj) {
        for (int i = 0; i < M; ++i) {
          if (!out[t][g.index(i, jj)]) continue;
          for (int b = std::max(0, jj - 1); b <= std::min(M - 1, jj + 1); ++b) {
            for (int a = std::max(0, i - 1); a <= std::min(M - 1, i + 1); ++a) d[g.index(a, b)] = 1;
          }
        }
      }
      out[t] = std::move(d);
    }
  }
  return out;
}

DynCapacityReport dyn_capacity_check(const Endomorphism& f, const std::vector<SetSpec>& sets,
                                     const std::vector<std::string>& labels, const Atlas& atlas, int j_max,
                                     const EnvelopeOptions& opt) {
  DynCapacityReport rep;
  const auto g = green_partial_sums(f, atlas, j_max);
  double osc = 0.0;
  for (const auto& gj : g) osc = std::max(osc, gj.sup() - gj.inf());
  rep.alpha_theory = std::exp(-osc);
  rep.alpha_fit = 1.0;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const std::string label = s < labels.size() ? labels[s] : "set " + std::to_string(s);
    const AlexanderValue t0 = alexander_capacity(sets[s], atlas, opt);
    if (t0.polar) throw Error(ErrorCode::PolarSet, "dyn_capacity_check", label + " is polar at this resolution");
    for (int j = 0; j <= j_max; ++j) {
      DynCapacityRow row;
      row.label = label;
      row.j = j;
      row.t0 = t0.value;
      if (j == 0) {
        row.tj = t0.value;
      } else {
        const SetSpec img = SetSpec::mask(atlas, forward_image(f, sets[s], atlas, j, true));
        row.tj = alexander_capacity(img, atlas, opt).value;
      }
      const double power = std::pow(static_cast<double>(f.lambda), j);
      row.alpha_needed = std::pow(row.tj, 1.0 / power) / row.t0;
      rep.alpha_fit = std::min(rep.alpha_fit, row.alpha_needed);
      rep.rows.push_back(row);
    }
  }
  rep.holds_fit = rep.alpha_fit > 0.0 && rep.alpha_fit <= 1.0;
  rep.holds_theory = true;
  for (const auto& row : rep.rows) {
    const double power = std::pow(static_cast<double>(f.lambda), row.j);
    rep.holds_fit = rep.holds_fit && std::pow(rep.alpha_fit * row.t0, power) <= row.tj * (1.0 + 1e-12);
    rep.holds_theory = rep.holds_theory && std::pow(rep.alpha_theory * row.t0, power) <= row.tj;
  }
  return rep;
}

VolumeDecayReport volume_decay_check(const Endomorphism& f, const SetSpec& K, const Atlas& atlas, int j_max) {
  VolumeDecayReport rep;
  const auto in = rasterize_set(K, atlas);
  auto mask_volume = [&](const std::array<Bitmap, 2>& bits) {
    double v = 0.0;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = atlas.charts[c];
      for (int j = 0; j < g.resolution; ++j) {
        for (int i = 0; i < g.resolution; ++i) {
          if (bits[c][g.index(i, j)]) v += atlas.volume_weight(c, i, j);
        }
      }
    }
    return v;
  };
  rep.vol_k = mask_volume(in);
  if (rep.vol_k <= 0.0) throw Error(ErrorCode::ZeroVolume, "volume_decay_check", "set has no volume on the grid");
  for (int j = 0; j <= j_max; ++j) {
    rep.vol_cloud.push_back(j == 0 ? rep.vol_k : mask_volume(forward_image(f, K, atlas, j, false)));
    double v = 0.0;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = atlas.charts[c];
      for (int jj = 0; jj < g.resolution; ++jj) {
        for (int i = 0; i < g.resolution; ++i) {
          if (!in[c][g.index(i, jj)]) continue;
          const double w = atlas.volume_weight(c, i, jj);
          if (w == 0.0) continue;
          std::vector<cplx> x = chart_rep(g.node(i, jj), c);
          double jac = 1.0;
          for (int l = 0; l < j; ++l) {
            jac *= f.fs_jacobian(x);
            x = f.apply_unit(x);
          }
          v += w * jac * jac;
        }
      }
    }
    rep.vol_change.push_back(v / std::pow(static_cast<double>(f.lambda), j));
  }
  for (int j = 0; j <= j_max; ++j) {
    const double need = -std::log(rep.vol_cloud[static_cast<std::size_t>(j)]) * rep.vol_k /
                        std::pow(static_cast<double>(f.lambda), j);
    rep.c_fit = std::max(rep.c_fit, need);
    const double gap = std::abs(rep.vol_cloud[static_cast<std::size_t>(j)] - rep.vol_change[static_cast<std::size_t>(j)]) /
                       rep.vol_change[static_cast<std::size_t>(j)];
    rep.worst_disagreement = std::max(rep.worst_disagreement, gap);
  }
  for (int j = 0; j <= j_max; ++j) {
    rep.margins.push_back(std::log(rep.vol_cloud[static_cast<std::size_t>(j)]) +
                          rep.c_fit * std::pow(static_cast<double>(f.lambda), j) / rep.vol_k);
  }
  return rep;
}

PullbackReport pullback_family_check(const QpshField& phi, const Endomorphism& f, int j_max,
                                     const FieldEvaluator& exact) {
  const Atlas& a = phi.atlas();
  PullbackReport rep;
  for (int j = 0; j <= j_max; ++j) {
    ChartArrays v;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      v[c].resize(g.node_count());
      for (int jj = 0; jj < g.resolution; ++jj) {
        for (int i = 0; i < g.resolution; ++i) {
          const auto y = normalize_point(iterate(f, chart_rep(g.node(i, jj), c), j));
          const double val = exact ? exact(y) : phi.evaluate(y);
          v[c][g.index(i, jj)] = val / std::pow(static_cast<double>(f.lambda), j);
        }
      }
    }
    const QpshField pj(a, std::move(v));
    rep.sups.push_back(pj.sup());
    rep.l1.push_back(fs_integral(pj, [](double x) { return std::abs(x); }));
  }
  const double sup0 = rep.sups.front();
  rep.bounded = true;
  for (std::size_t j = 0; j < rep.sups.size(); ++j) {
    const double cap = std::max(sup0, 0.0) / std::pow(static_cast<double>(f.lambda), static_cast<double>(j));
    rep.bounded = rep.bounded && rep.sups[j] <= cap + 1e-9 && rep.l1[j] <= 2.0 * rep.l1.front() + 1.0;
  }
  return rep;
}

}  // namespace kahlercap
