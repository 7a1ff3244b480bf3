#include "kahlercap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void config_error(const std::string& detail) {
  throw Error(ErrorCode::ConfigError, "SetSpec", detail);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::AtInfinity: return "AtInfinity";
    case ErrorCode::ResolutionTooSmall: return "ResolutionTooSmall";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::AllSentinel: return "AllSentinel";
    case ErrorCode::SentinelInStencil: return "SentinelInStencil";
    case ErrorCode::NotProbability: return "NotProbability";
    case ErrorCode::CollarMismatch: return "CollarMismatch";
    case ErrorCode::NotCertified: return "NotCertified";
    case ErrorCode::SentinelPresent: return "SentinelPresent";
    case ErrorCode::RangeViolation: return "RangeViolation";
    case ErrorCode::BallTouchesBoundary: return "BallTouchesBoundary";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::NotMonotoneFamily: return "NotMonotoneFamily";
    case ErrorCode::NotCircled: return "NotCircled";
    case ErrorCode::PolarSet: return "PolarSet";
    case ErrorCode::QuadratureUnderresolved: return "QuadratureUnderresolved";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::NormalizationInfeasible: return "NormalizationInfeasible";
    case ErrorCode::GramSingular: return "GramSingular";
    case ErrorCode::DegreeMismatch: return "DegreeMismatch";
    case ErrorCode::DegenerateLift: return "DegenerateLift";
    case ErrorCode::ZeroVolume: return "ZeroVolume";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Points and charts

double ProjectivePoint::norm() const {
  double s = 0.0;
  for (const auto& c : coords) s += std::norm(c);
  return std::sqrt(s);
}

ProjectivePoint normalize_point(std::span<const cplx> coords) {
  double m = 0.0;
  for (const auto& c : coords) m = std::max(m, std::abs(c));
  if (coords.empty() || m == 0.0) {
    throw Error(ErrorCode::AllZero, "normalize_point", "every coordinate is zero");
  }
  ProjectivePoint p;
  p.coords.reserve(coords.size());
  // The coordinate of largest modulus is set to exactly modulus one.
  for (const auto& c : coords) p.coords.push_back(c / m);
  return p;
}

int chart_denominator(int chart, int n) {
  if (chart < 0 || chart > n) {
    throw Error(ErrorCode::ConfigError, "chart_denominator", "chart index out of range");
  }
  return chart == 0 ? n : chart - 1;
}

std::vector<cplx> chart_coordinates(const ProjectivePoint& p, int chart) {
  const int n = p.dimension();
  const int d = chart_denominator(chart, n);
  if (p.coords[d] == cplx(0.0)) {
    throw Error(ErrorCode::AtInfinity, "chart_transition", "target coordinate vanishes");
  }
  std::vector<cplx> z;
  z.reserve(n);
  for (int k = 0; k <= n; ++k) {
    if (k != d) z.push_back(p.coords[k] / p.coords[d]);
  }
  return z;
}

ProjectivePoint from_chart(std::span<const cplx> z, int chart) {
  const int n = static_cast<int>(z.size());
  const int d = chart_denominator(chart, n);
  std::vector<cplx> x;
  x.reserve(n + 1);
  int k = 0;
  for (int idx = 0; idx <= n; ++idx) x.push_back(idx == d ? cplx(1.0) : z[k++]);
  return normalize_point(x);
}

cplx chart_transition(const ProjectivePoint& p, int to) { return chart_coordinates(p, to)[0]; }

cplx chart_transition(cplx z, int from, int to) {
  if (from == to) return z;
  if (z == cplx(0.0)) {
    throw Error(ErrorCode::AtInfinity, "chart_transition", "target coordinate vanishes");
  }
  return 1.0 / z;
}

ProjectivePoint from_chart(cplx z, int chart) {
  const std::array<cplx, 1> a{z};
  return from_chart(std::span<const cplx>(a), chart);
}

double fs_chart_potential(std::span<const cplx> z) {
  double s = 0.0;
  for (const auto& c : z) s += std::norm(c);
  return 0.5 * std::log1p(s);
}

double fs_chart_potential(cplx z) { return 0.5 * std::log1p(std::norm(z)); }

// ---------------------------------------------------------------------------
// Grids

std::optional<std::array<int, 2>> ChartGrid::nearest(cplx z) const {
  const double half = 0.5 * (resolution - 1);
  const double fi = z.real() / spacing + half;
  const double fj = z.imag() / spacing + half;
  if (!(fi > -0.5 && fj > -0.5 && fi < resolution - 0.5 && fj < resolution - 0.5)) {
    return std::nullopt;
  }
  return std::array<int, 2>{static_cast<int>(std::lround(fi)), static_cast<int>(std::lround(fj))};
}

ChartGrid build_grid(int chart, double box_radius, int resolution, int n) {
  if (n != 1) {
    throw Error(ErrorCode::ConfigError, "build_grid",
                "grids exist only for n = 1; use radial profiles for n >= 2");
  }
  if (resolution < 3) {
    throw Error(ErrorCode::ResolutionTooSmall, "build_grid", "resolution must be >= 3");
  }
  if (!(box_radius > 0.0)) {
    throw Error(ErrorCode::ConfigError, "build_grid", "box_radius must be positive");
  }
  ChartGrid g;
  g.chart_index = chart;
  g.box_radius = box_radius;
  g.resolution = resolution;
  g.spacing = 2.0 * box_radius / (resolution - 1);
  return g;
}

Atlas build_atlas(double box_radius, int resolution) {
  Atlas a{{build_grid(0, box_radius, resolution), build_grid(1, box_radius, resolution)}};
  if (box_radius <= kBlendRadius + 3.0 * a.spacing()) {
    throw Error(ErrorCode::ConfigError, "build_atlas",
                "box radius must exceed the blend radius 1.25 by three cells");
  }
  return a;
}

double blend_weight(cplx z) {
  const double r = std::abs(z);
  const double lo = 1.0 / kBlendRadius;
  if (r <= lo) return 1.0;
  if (r >= kBlendRadius) return 0.0;
  // t runs from 0 at r = 1/rho to 1 at r = rho, symmetric in log r.
  const double t = (std::log(r) - std::log(lo)) / (2.0 * std::log(kBlendRadius));
  auto f = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double a = f(1.0 - t);
  const double b = f(t);
  return a / (a + b);
}

bool Atlas::owns(int chart, int i, int j) const {
  const double r2 = std::norm(charts[chart].node(i, j));
  return chart == 0 ? r2 <= 1.0 : r2 < 1.0;
}

double Atlas::volume_weight(int chart, int i, int j) const {
  const cplx z = charts[chart].node(i, j);
  const double b = blend_weight(z);
  if (b == 0.0) return 0.0;
  return b * fs_density(z) * spacing() * spacing();
}

double Atlas::interpolate_chart(const std::vector<double>& data, int chart, cplx z) const {
  const ChartGrid& g = charts[chart];
  const double half = 0.5 * (g.resolution - 1);
  double fi = z.real() / g.spacing + half;
  double fj = z.imag() / g.spacing + half;
  fi = std::clamp(fi, 0.0, g.resolution - 1.0);
  fj = std::clamp(fj, 0.0, g.resolution - 1.0);
  int i0 = std::min(static_cast<int>(fi), g.resolution - 2);
  int j0 = std::min(static_cast<int>(fj), g.resolution - 2);
  const double a = fi - i0;
  const double b = fj - j0;
  const double v00 = data[g.index(i0, j0)];
  const double v10 = data[g.index(i0 + 1, j0)];
  const double v01 = data[g.index(i0, j0 + 1)];
  const double v11 = data[g.index(i0 + 1, j0 + 1)];
  if (std::isinf(v00) || std::isinf(v10) || std::isinf(v01) || std::isinf(v11)) {
    // A sentinel corner poisons the interpolant; fall back to the nearest node.
    const int ii = a < 0.5 ? i0 : i0 + 1;
    const int jj = b < 0.5 ? j0 : j0 + 1;
    return data[g.index(ii, jj)];
  }
  return (1 - a) * (1 - b) * v00 + a * (1 - b) * v10 + (1 - a) * b * v01 + a * b * v11;
}

double Atlas::interpolate(const std::array<std::vector<double>, 2>& data, const ProjectivePoint& p) const {
  const int chart = std::abs(p.coords[0]) <= std::abs(p.coords[1]) ? 0 : 1;
  const cplx z = chart == 0 ? p.coords[0] / p.coords[1] : p.coords[1] / p.coords[0];
  return interpolate_chart(data[chart], chart, z);
}

// ---------------------------------------------------------------------------
// Radial sets

bool SetSpec::RadialSet::contains(double r) const {
  for (const auto& iv : intervals) {
    if (r >= iv[0] && r <= iv[1]) return true;
  }
  return false;
}

SetSpec::RadialSet SetSpec::RadialSet::complement() const {
  RadialSet out;
  double start = 0.0;
  bool open_start = false;
  for (const auto& iv : intervals) {
    if (iv[0] > start || (!open_start && iv[0] > 0.0)) out.intervals.push_back({start, iv[0]});
    start = iv[1];
    open_start = true;
  }
  if (!open_start) {
    out.intervals.push_back({0.0, kInf});
  } else if (start < kInf) {
    out.intervals.push_back({start, kInf});
  }
  return out;
}

SetSpec::RadialSet SetSpec::RadialSet::unite(const RadialSet& o) const {
  std::vector<std::array<double, 2>> all = intervals;
  all.insert(all.end(), o.intervals.begin(), o.intervals.end());
  std::sort(all.begin(), all.end());
  RadialSet out;
  for (const auto& iv : all) {
    if (!out.intervals.empty() && iv[0] <= out.intervals.back()[1]) {
      out.intervals.back()[1] = std::max(out.intervals.back()[1], iv[1]);
    } else {
      out.intervals.push_back(iv);
    }
  }
  return out;
}

SetSpec::RadialSet SetSpec::RadialSet::intersect(const RadialSet& o) const {
  RadialSet out;
  for (const auto& a : intervals) {
    for (const auto& b : o.intervals) {
      const double lo = std::max(a[0], b[0]);
      const double hi = std::min(a[1], b[1]);
      if (lo <= hi) out.intervals.push_back({lo, hi});
    }
  }
  return RadialSet{}.unite(out);
}

// ---------------------------------------------------------------------------
// SetSpec tree

struct SetSpec::Node {
  Kind kind = Kind::Empty;
  cplx center{0.0, 0.0};
  double r0 = 0.0;
  double r1 = 0.0;
  int chart = 0;
  std::vector<SetSpec> children;
  std::optional<Atlas> atlas;
  std::array<Bitmap, 2> bits;
  bool has_chart1 = false;
  RadialSet profile;
  std::array<cplx, 4> u{};  // row-major unitary
  std::string source_path;
  std::function<bool(const ProjectivePoint&)> test;
};

namespace {

// Affine coordinate of p in chart `chart` of CP^1, if finite.
std::optional<cplx> coordinate_in(const ProjectivePoint& p, int chart) {
  const cplx num = chart == 0 ? p.coords[0] : p.coords[1];
  const cplx den = chart == 0 ? p.coords[1] : p.coords[0];
  if (den == cplx(0.0)) return std::nullopt;
  return num / den;
}

}  // namespace

SetSpec SetSpec::empty() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Empty;
  return SetSpec(n);
}

SetSpec SetSpec::full() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Full;
  return SetSpec(n);
}

SetSpec SetSpec::ball(cplx center, double radius, int chart) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Ball;
  n->center = center;
  n->r1 = radius;
  n->chart = chart;
  return SetSpec(n);
}

SetSpec SetSpec::annulus(cplx center, double r_in, double r_out, int chart) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Annulus;
  n->center = center;
  n->r0 = r_in;
  n->r1 = r_out;
  n->chart = chart;
  return SetSpec(n);
}

SetSpec SetSpec::point(cplx z, int chart) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Point;
  n->center = z;
  n->chart = chart;
  return SetSpec(n);
}

SetSpec SetSpec::half_plane(double angle, int chart) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::HalfPlane;
  n->r0 = angle;
  n->chart = chart;
  return SetSpec(n);
}

SetSpec SetSpec::real_line() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::RealLine;
  return SetSpec(n);
}

SetSpec SetSpec::complement(const SetSpec& s) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Complement;
  n->children = {s};
  return SetSpec(n);
}

SetSpec SetSpec::unite(std::vector<SetSpec> parts) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Union;
  n->children = std::move(parts);
  return SetSpec(n);
}

SetSpec SetSpec::intersect(std::vector<SetSpec> parts) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Intersection;
  n->children = std::move(parts);
  return SetSpec(n);
}

SetSpec SetSpec::mask(const Atlas& atlas, std::array<Bitmap, 2> bits) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Mask;
  n->atlas = atlas;
  n->has_chart1 = !bits[1].empty();
  n->bits = std::move(bits);
  return SetSpec(n);
}

SetSpec SetSpec::single_node(const Atlas& atlas, int chart, int i, int j) {
  std::array<Bitmap, 2> bits;
  bits[0].assign(atlas.charts[0].node_count(), 0);
  bits[1].assign(atlas.charts[1].node_count(), 0);
  bits[chart][atlas.charts[chart].index(i, j)] = 1;
  // The same point seen from the other chart, if it lands on a node there.
  const cplx z = atlas.charts[chart].node(i, j);
  if (z != cplx(0.0)) {
    if (auto nn = atlas.charts[1 - chart].nearest(1.0 / z)) {
      const cplx w = atlas.charts[1 - chart].node((*nn)[0], (*nn)[1]);
      if (std::abs(w - 1.0 / z) < 1e-9) bits[1 - chart][atlas.charts[1 - chart].index((*nn)[0], (*nn)[1])] = 1;
    }
  }
  return mask(atlas, std::move(bits));
}

SetSpec SetSpec::radial_profile(RadialSet profile) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::RadialProfile;
  n->profile = RadialSet{}.unite(profile);
  return SetSpec(n);
}

SetSpec SetSpec::unitary(std::array<cplx, 4> u, const SetSpec& s) {
  const cplx c0 = u[0] * std::conj(u[0]) + u[2] * std::conj(u[2]);
  const cplx c1 = u[1] * std::conj(u[1]) + u[3] * std::conj(u[3]);
  const cplx x = std::conj(u[0]) * u[1] + std::conj(u[2]) * u[3];
  if (std::abs(c0 - 1.0) > 1e-9 || std::abs(c1 - 1.0) > 1e-9 || std::abs(x) > 1e-9) {
    throw Error(ErrorCode::ConfigError, "SetSpec::unitary", "matrix is not unitary");
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unitary;
  n->u = u;
  n->children = {s};
  return SetSpec(n);
}

SetSpec SetSpec::rotation(double angle, const SetSpec& s) {
  // z -> e^{i angle} z, realized as diag(e^{i angle/2}, e^{-i angle/2}).
  const cplx a = std::polar(1.0, 0.5 * angle);
  return unitary({a, 0.0, 0.0, std::conj(a)}, s);
}

SetSpec SetSpec::predicate(std::function<bool(const ProjectivePoint&)> test, std::string label) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Predicate;
  n->test = std::move(test);
  n->source_path = std::move(label);
  return SetSpec(std::move(n));
}

SetSpec::Kind SetSpec::kind() const { return node_->kind; }

std::optional<SetSpec::BallParams> SetSpec::ball_params() const {
  if (node_->kind != Kind::Ball) return std::nullopt;
  return BallParams{node_->center, node_->r1, node_->chart};
}

bool SetSpec::contains(const ProjectivePoint& p) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Empty: return false;
    case Kind::Full: return true;
    case Kind::Ball: {
      auto z = coordinate_in(p, n.chart);
      return z && std::abs(*z - n.center) <= n.r1;
    }
    case Kind::Annulus: {
      auto z = coordinate_in(p, n.chart);
      if (!z) return false;
      const double d = std::abs(*z - n.center);
      return d >= n.r0 && d <= n.r1;
    }
    case Kind::Point: {
      auto z = coordinate_in(p, n.chart);
      return z && std::abs(*z - n.center) <= 1e-12 * std::max(1.0, std::abs(n.center));
    }
    case Kind::HalfPlane: {
      auto z = coordinate_in(p, n.chart);
      if (!z) return true;
      return (*z * std::polar(1.0, -n.r0)).imag() >= 0.0;
    }
    case Kind::RealLine: {
      const double im = (p.coords[0] * std::conj(p.coords[1])).imag();
      return std::abs(im) <= 1e-12;
    }
    case Kind::Complement: return !n.children[0].contains(p);
    case Kind::Union:
      return std::any_of(n.children.begin(), n.children.end(),
                         [&](const SetSpec& c) { return c.contains(p); });
    case Kind::Intersection:
      return std::all_of(n.children.begin(), n.children.end(),
                         [&](const SetSpec& c) { return c.contains(p); });
    case Kind::Mask: {
      const Atlas& a = *n.atlas;
      int chart = std::abs(p.coords[0]) <= std::abs(p.coords[1]) ? 0 : 1;
      if (!n.has_chart1) chart = 0;
      auto z = coordinate_in(p, chart);
      if (!z) return false;
      auto idx = a.charts[chart].nearest(*z);
      if (!idx) return false;
      return n.bits[chart][a.charts[chart].index((*idx)[0], (*idx)[1])] != 0;
    }
    case Kind::RadialProfile: {
      const int dim = p.dimension();
      const cplx den = p.coords[dim];
      if (den == cplx(0.0)) return n.profile.contains(kInf);
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += std::norm(p.coords[k]);
      return n.profile.contains(std::sqrt(s) / std::abs(den));
    }
    case Kind::Unitary: {
      // Membership of x in U(S) is membership of U^* x in S.
      const auto& u = n.u;
      const cplx y0 = std::conj(u[0]) * p.coords[0] + std::conj(u[2]) * p.coords[1];
      const cplx y1 = std::conj(u[1]) * p.coords[0] + std::conj(u[3]) * p.coords[1];
      const std::array<cplx, 2> y{y0, y1};
      return n.children[0].contains(normalize_point(y));
    }
    case Kind::Predicate: return n.test(p);
  }
  return false;
}

bool SetSpec::contains_chart(cplx z, int chart) const {
  const Node& n = *node_;
  // A mask answers from the chart it is asked in, so masks round-trip exactly.
  if (n.kind == Kind::Mask && (chart == 0 || n.has_chart1)) {
    const ChartGrid& g = n.atlas->charts[chart];
    if (auto idx = g.nearest(z)) return n.bits[chart][g.index((*idx)[0], (*idx)[1])] != 0;
  }
  return contains(from_chart(z, chart));
}

bool SetSpec::is_circled() const { return radial().has_value(); }

std::optional<SetSpec::RadialSet> SetSpec::radial() const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Empty: return RadialSet{};
    case Kind::Full: return RadialSet{{{0.0, kInf}}};
    case Kind::Ball:
      if (n.center != cplx(0.0)) return std::nullopt;
      if (n.chart == 0) return RadialSet{{{0.0, n.r1}}};
      return RadialSet{{{n.r1 > 0.0 ? 1.0 / n.r1 : kInf, kInf}}};
    case Kind::Annulus:
      if (n.center != cplx(0.0)) return std::nullopt;
      if (n.chart == 0) return RadialSet{{{n.r0, n.r1}}};
      return RadialSet{{{n.r1 > 0.0 ? 1.0 / n.r1 : kInf, n.r0 > 0.0 ? 1.0 / n.r0 : kInf}}};
    case Kind::Point:
      if (n.center != cplx(0.0)) return std::nullopt;
      return n.chart == 0 ? RadialSet{{{0.0, 0.0}}} : RadialSet{{{kInf, kInf}}};
    case Kind::RadialProfile: return n.profile;
    case Kind::Complement: {
      auto c = n.children[0].radial();
      if (!c) return std::nullopt;
      return c->complement();
    }
    case Kind::Union:
    case Kind::Intersection: {
      std::optional<RadialSet> acc;
      for (const auto& c : n.children) {
        auto r = c.radial();
        if (!r) return std::nullopt;
        if (!acc) {
          acc = *r;
        } else {
          acc = n.kind == Kind::Union ? acc->unite(*r) : acc->intersect(*r);
        }
      }
      if (!acc) return RadialSet{};
      return acc;
    }
    case Kind::Unitary: {
      if (std::abs(n.u[1]) > 1e-14 || std::abs(n.u[2]) > 1e-14) return std::nullopt;
      return n.children[0].radial();
    }
    case Kind::HalfPlane:
    case Kind::RealLine:
    case Kind::Mask:
    case Kind::Predicate: return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

double radius_json_value(const nlohmann::json& v) {
  if (v.is_null()) return kInf;
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "Infinity")) {
    return kInf;
  }
  if (!v.is_number()) config_error("radius bound must be a number, null or \"inf\"");
  return v.get<double>();
}

nlohmann::json radius_to_json(double r) {
  if (std::isinf(r)) return "inf";
  return r;
}

const nlohmann::json& field(const nlohmann::json& j, const char* name, const std::string& type) {
  if (!j.contains(name)) config_error("\"" + type + "\" spec is missing field '" + name + "'");
  return j.at(name);
}

double number_field(const nlohmann::json& j, const char* name, const std::string& type) {
  const auto& v = field(j, name, type);
  if (!v.is_number()) config_error("field '" + std::string(name) + "' of \"" + type + "\" must be a number");
  return v.get<double>();
}

cplx complex_field(const nlohmann::json& j, const char* name, const std::string& type) {
  const auto& v = field(j, name, type);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    config_error("field '" + std::string(name) + "' of \"" + type + "\" must be [re, im]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

int chart_field(const nlohmann::json& j, const std::string& type) {
  if (!j.contains("chart")) return 0;
  if (!j["chart"].is_number_integer()) config_error("field 'chart' of \"" + type + "\" must be 0 or 1");
  const int c = j["chart"].get<int>();
  if (c != 0 && c != 1) config_error("field 'chart' of \"" + type + "\" must be 0 or 1");
  return c;
}

}  // namespace

nlohmann::json SetSpec::to_json() const {
  const Node& n = *node_;
  nlohmann::json j;
  switch (n.kind) {
    case Kind::Empty: j["type"] = "empty"; break;
    case Kind::Full: j["type"] = "full"; break;
    case Kind::Ball:
      j = {{"type", "ball"}, {"center", complex_json(n.center)}, {"radius", n.r1}, {"chart", n.chart}};
      break;
    case Kind::Annulus:
      j = {{"type", "annulus"}, {"center", complex_json(n.center)}, {"inner", n.r0},
           {"outer", radius_to_json(n.r1)}, {"chart", n.chart}};
      break;
    case Kind::Point:
      j = {{"type", "point"}, {"at", complex_json(n.center)}, {"chart", n.chart}};
      break;
    case Kind::HalfPlane: j = {{"type", "half_plane"}, {"angle", n.r0}, {"chart", n.chart}}; break;
    case Kind::RealLine: j["type"] = "real_line"; break;
    case Kind::Complement: j = {{"type", "complement"}, {"of", n.children[0].to_json()}}; break;
    case Kind::Union:
    case Kind::Intersection: {
      j["type"] = n.kind == Kind::Union ? "union" : "intersection";
      j["sets"] = nlohmann::json::array();
      for (const auto& c : n.children) j["sets"].push_back(c.to_json());
      break;
    }
    case Kind::Mask: {
      const Atlas& a = *n.atlas;
      j = {{"type", "mask"}, {"box_radius", a.box_radius()}, {"resolution", a.resolution()}};
      if (!n.source_path.empty()) {
        j["path"] = n.source_path;
        break;
      }
      for (int c = 0; c < (n.has_chart1 ? 2 : 1); ++c) {
        nlohmann::json nodes = nlohmann::json::array();
        for (std::size_t k = 0; k < n.bits[c].size(); ++k) {
          if (n.bits[c][k]) nodes.push_back(k);
        }
        j[c == 0 ? "chart0_nodes" : "chart1_nodes"] = nodes;
      }
      break;
    }
    case Kind::RadialProfile: {
      j["type"] = "radial_profile";
      j["intervals"] = nlohmann::json::array();
      for (const auto& iv : n.profile.intervals) {
        j["intervals"].push_back({iv[0], radius_to_json(iv[1])});
      }
      break;
    }
    case Kind::Unitary: {
      j["type"] = "unitary";
      j["matrix"] = nlohmann::json::array();
      for (const auto& c : n.u) j["matrix"].push_back(complex_json(c));
      j["of"] = n.children[0].to_json();
      break;
    }
    case Kind::Predicate: j = {{"type", "predicate"}, {"label", n.source_path}}; break;
  }
  return j;
}

SetSpec SetSpec::from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) config_error("set spec must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) config_error("set spec is missing string field 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "empty") return empty();
  if (type == "full") return full();
  if (type == "ball") {
    const double r = number_field(j, "radius", type);
    if (!(r >= 0.0)) config_error("field 'radius' of \"ball\" must be >= 0");
    const cplx c = j.contains("center") ? complex_field(j, "center", type) : cplx(0.0);
    return ball(c, r, chart_field(j, type));
  }
  if (type == "annulus") {
    const double r0 = number_field(j, "inner", type);
    const double r1 = radius_json_value(field(j, "outer", type));
    if (!(r0 >= 0.0 && r1 >= r0)) config_error("annulus needs 0 <= inner <= outer");
    const cplx c = j.contains("center") ? complex_field(j, "center", type) : cplx(0.0);
    return annulus(c, r0, r1, chart_field(j, type));
  }
  if (type == "point") return point(complex_field(j, "at", type), chart_field(j, type));
  if (type == "half_plane") {
    return half_plane(j.contains("angle") ? number_field(j, "angle", type) : 0.0, chart_field(j, type));
  }
  if (type == "real_line") return real_line();
  if (type == "complement") return complement(from_json(field(j, "of", type), base_dir));
  if (type == "union" || type == "intersection") {
    const auto& sets = field(j, "sets", type);
    if (!sets.is_array()) config_error("field 'sets' of \"" + type + "\" must be an array");
    std::vector<SetSpec> parts;
    for (const auto& s : sets) parts.push_back(from_json(s, base_dir));
    return type == "union" ? unite(std::move(parts)) : intersect(std::move(parts));
  }
  if (type == "radial_profile") {
    const auto& ivs = field(j, "intervals", type);
    if (!ivs.is_array()) config_error("field 'intervals' of \"radial_profile\" must be an array");
    RadialSet rs;
    for (const auto& iv : ivs) {
      if (!iv.is_array() || iv.size() != 2) config_error("each radial interval must be [lo, hi]");
      const double lo = radius_json_value(iv[0]);
      const double hi = radius_json_value(iv[1]);
      if (!(lo >= 0.0 && hi >= lo)) config_error("radial interval needs 0 <= lo <= hi");
      rs.intervals.push_back({lo, hi});
    }
    return radial_profile(rs);
  }
  if (type == "mask") {
    const double box = number_field(j, "box_radius", type);
    if (j.contains("path")) {
      std::filesystem::path p = j["path"].get<std::string>();
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      int w = 0, h = 0;
      Bitmap bits = read_pgm_mask(p.string(), w, h);
      if (w != h) config_error("mask bitmap must be square");
      Atlas a = build_atlas(box, w);
      auto n = std::make_shared<Node>();
      n->kind = Kind::Mask;
      n->atlas = a;
      n->bits[0] = std::move(bits);
      n->source_path = j["path"].get<std::string>();
      return SetSpec(n);
    }
    const int res = static_cast<int>(number_field(j, "resolution", type));
    Atlas a = build_atlas(box, res);
    std::array<Bitmap, 2> bits;
    for (int c = 0; c < 2; ++c) {
      const char* key = c == 0 ? "chart0_nodes" : "chart1_nodes";
      if (!j.contains(key)) continue;
      bits[c].assign(a.charts[c].node_count(), 0);
      for (const auto& k : j[key]) {
        const auto idx = k.get<std::size_t>();
        if (idx >= bits[c].size()) config_error(std::string("node index out of range in '") + key + "'");
        bits[c][idx] = 1;
      }
    }
    if (bits[0].empty()) config_error("mask needs 'path' or 'chart0_nodes'");
    return mask(a, std::move(bits));
  }
  if (type == "unitary") {
    const auto& m = field(j, "matrix", type);
    if (!m.is_array() || m.size() != 4) config_error("field 'matrix' of \"unitary\" must hold 4 [re, im] entries");
    std::array<cplx, 4> u;
    for (int k = 0; k < 4; ++k) {
      if (!m[k].is_array() || m[k].size() != 2) config_error("unitary entries must be [re, im]");
      u[k] = {m[k][0].get<double>(), m[k][1].get<double>()};
    }
    return unitary(u, from_json(field(j, "of", type), base_dir));
  }
  if (type == "rotation") {
    return rotation(number_field(j, "angle", type), from_json(field(j, "of", type), base_dir));
  }
  config_error("unknown set type \"" + type + "\"");
}

SetSpec SetSpec::parse(const std::string& text, const std::string& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    config_error(e.what());
  }
  return from_json(j, base_dir);
}

SetSpec SetSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "SetSpec", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse(ss.str(), dir.empty() ? "." : dir.string());
}

// ---------------------------------------------------------------------------
// Rasterization

Bitmap rasterize_set(const SetSpec& s, const ChartGrid& g) {
  Bitmap out(g.node_count(), 0);
  for (int j = 0; j < g.resolution; ++j) {
    for (int i = 0; i < g.resolution; ++i) {
      out[g.index(i, j)] = s.contains_chart(g.node(i, j), g.chart_index) ? 1 : 0;
    }
  }
  return out;
}

std::array<Bitmap, 2> rasterize_set(const SetSpec& s, const Atlas& a) {
  return {rasterize_set(s, a.charts[0]), rasterize_set(s, a.charts[1])};
}

// ---------------------------------------------------------------------------
// PGM

Bitmap read_pgm_mask(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "read_pgm_mask", "cannot open " + path);
  auto next_token = [&]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") {
    throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": not a P2/P5 graymap");
  }
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": bad header");
  }
  const int maxval = std::stoi(next_token());
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": bad header");
  }
  Bitmap bits(static_cast<std::size_t>(width) * height, 0);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      int v = 0;
      if (magic == "P2") {
        const std::string tok = next_token();
        if (tok.empty()) throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": truncated");
        v = std::stoi(tok);
      } else if (maxval < 256) {
        char c;
        if (!in.get(c)) throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": truncated");
        v = static_cast<unsigned char>(c);
      } else {
        char hi, lo;
        if (!in.get(hi) || !in.get(lo)) throw Error(ErrorCode::ConfigError, "read_pgm_mask", path + ": truncated");
        v = (static_cast<unsigned char>(hi) << 8) | static_cast<unsigned char>(lo);
      }
      // Image rows run top to bottom; grid index j runs bottom to top.
      const int j = height - 1 - row;
      bits[static_cast<std::size_t>(j) * width + col] = v != 0 ? 1 : 0;
    }
  }
  return bits;
}

void write_pgm_mask(const std::string& path, const Bitmap& bits, int width, int height) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_pgm_mask", "cannot open " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  for (int row = 0; row < height; ++row) {
    const int j = height - 1 - row;
    for (int col = 0; col < width; ++col) {
      out.put(bits[static_cast<std::size_t>(j) * width + col] ? static_cast<char>(255) : 0);
    }
  }
}

}  // namespace kahlercap
