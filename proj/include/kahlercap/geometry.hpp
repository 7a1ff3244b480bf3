#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace kahlercap {

using cplx = std::complex<double>;

// Homogeneous coordinates [x_0 : ... : x_n], stored with max modulus 1.
struct ProjectivePoint {
  std::vector<cplx> coords;

  int dimension() const { return static_cast<int>(coords.size()) - 1; }
  double norm() const;
};

ProjectivePoint normalize_point(std::span<const cplx> coords);

// Chart 0 is {x_n != 0} with affine coordinates x_k / x_n (the hyperplane at
// infinity is x_n = 0). Chart c >= 1 is {x_{c-1} != 0}. For n = 1 this gives
// z = x_0 / x_1 in chart 0 and w = x_1 / x_0 = 1 / z in chart 1.
int chart_denominator(int chart, int n);
std::vector<cplx> chart_coordinates(const ProjectivePoint& p, int chart);
ProjectivePoint from_chart(std::span<const cplx> z, int chart);

// n = 1 conveniences.
cplx chart_transition(const ProjectivePoint& p, int to);
cplx chart_transition(cplx z, int from, int to);
ProjectivePoint from_chart(cplx z, int chart);

// h(z) = 1/2 log(1 + |z|^2), the Fubini-Study potential in any affine chart.
double fs_chart_potential(std::span<const cplx> z);
double fs_chart_potential(cplx z);

// Density of the Fubini-Study area form (dd^c h) with respect to dx dy on C.
inline double fs_density(cplx z) {
  const double q = 1.0 + std::norm(z);
  return 1.0 / (3.14159265358979323846 * q * q);
}

struct ChartGrid {
  int chart_index = 0;
  double box_radius = 1.0;
  int resolution = 3;
  double spacing = 1.0;

  std::size_t node_count() const {
    return static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(resolution) +
           static_cast<std::size_t>(i);
  }
  // Node coordinates are symmetric about the origin; for odd resolution the
  // middle row and column sit exactly on the real and imaginary axes.
  double axis(int i) const { return 0.5 * (2.0 * i - (resolution - 1)) * spacing; }
  cplx node(int i, int j) const { return {axis(i), axis(j)}; }
  bool is_edge(int i, int j) const {
    return i == 0 || j == 0 || i == resolution - 1 || j == resolution - 1;
  }
  // Nearest node to z, if z lies in the box.
  std::optional<std::array<int, 2>> nearest(cplx z) const;
  bool same_layout(const ChartGrid& other) const {
    return resolution == other.resolution && box_radius == other.box_radius;
  }
};

ChartGrid build_grid(int chart, double box_radius, int resolution, int n = 1);

// Smooth partition of unity on CP^1 subordinate to the two charts: weight 1
// for |z| <= 1/kBlendRadius, 0 for |z| >= kBlendRadius, and the two chart
// weights sum to 1 everywhere. Symmetric under z -> 1/z.
inline constexpr double kBlendRadius = 1.25;
double blend_weight(cplx z);

// The pair of chart grids covering CP^1. Chart 0 owns |z| <= 1, chart 1 owns |w| < 1.
struct Atlas {
  std::array<ChartGrid, 2> charts;

  double spacing() const { return charts[0].spacing; }
  int resolution() const { return charts[0].resolution; }
  double box_radius() const { return charts[0].box_radius; }
  bool owns(int chart, int i, int j) const;
  double blend(int chart, int i, int j) const { return blend_weight(charts[chart].node(i, j)); }
  // Nodes whose blend weight is positive; all of them are at least two cells
  // away from the box edge.
  bool supported(int chart, int i, int j) const { return blend(chart, i, j) > 0.0; }
  // FS volume quadrature weight of a node: blend * density * cell area.
  double volume_weight(int chart, int i, int j) const;
  // Value at p of per-chart data, bilinear in the chart that owns p.
  double interpolate(const std::array<std::vector<double>, 2>& data, const ProjectivePoint& p) const;
  double interpolate_chart(const std::vector<double>& data, int chart, cplx z) const;
  bool operator==(const Atlas& o) const {
    return charts[0].same_layout(o.charts[0]);
  }
};

Atlas build_atlas(double box_radius, int resolution);

using Bitmap = std::vector<std::uint8_t>;

// Constructive description of a Borel subset of CP^1 (and, through radial
// profiles, of circled subsets of CP^n).
class SetSpec {
public:
  enum class Kind {
    Empty,
    Full,
    Ball,
    Annulus,
    Point,
    HalfPlane,
    RealLine,
    Complement,
    Union,
    Intersection,
    Mask,
    RadialProfile,
    Unitary,
    Predicate,
  };

  // Closed intervals of radii |z| in chart 0; hi may be +inf.
  struct RadialSet {
    std::vector<std::array<double, 2>> intervals;
    bool contains(double r) const;
    RadialSet complement() const;
    RadialSet unite(const RadialSet& o) const;
    RadialSet intersect(const RadialSet& o) const;
    bool empty() const { return intervals.empty(); }
  };

  static SetSpec empty();
  static SetSpec full();
  static SetSpec ball(cplx center, double radius, int chart = 0);
  static SetSpec annulus(cplx center, double r_in, double r_out, int chart = 0);
  static SetSpec point(cplx z, int chart = 0);
  // {Im(e^{-i angle} z) >= 0} in the given chart.
  static SetSpec half_plane(double angle = 0.0, int chart = 0);
  // Closure of R in CP^1.
  static SetSpec real_line();
  static SetSpec complement(const SetSpec& s);
  static SetSpec unite(std::vector<SetSpec> parts);
  static SetSpec intersect(std::vector<SetSpec> parts);
  static SetSpec mask(const Atlas& atlas, std::array<Bitmap, 2> bits);
  static SetSpec single_node(const Atlas& atlas, int chart, int i, int j);
  static SetSpec radial_profile(RadialSet profile);
  // Image of s under the unitary map x -> U x of C^2 (row-major U).
  static SetSpec unitary(std::array<cplx, 4> u, const SetSpec& s);
  static SetSpec rotation(double angle, const SetSpec& s);
  // Arbitrary membership test, e.g. a sublevel set of a field. Serializes by label only.
  static SetSpec predicate(std::function<bool(const ProjectivePoint&)> test, std::string label);

  struct BallParams {
    cplx center;
    double radius;
    int chart;
  };

  Kind kind() const;
  // Center, radius and chart when this spec is a plain ball.
  std::optional<BallParams> ball_params() const;
  bool contains(const ProjectivePoint& p) const;
  bool contains_chart(cplx z, int chart) const;
  bool is_circled() const;
  std::optional<RadialSet> radial() const;

  nlohmann::json to_json() const;
  static SetSpec from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static SetSpec parse(const std::string& text, const std::string& base_dir = ".");
  static SetSpec load(const std::string& path);

  struct Node;

private:
  explicit SetSpec(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

Bitmap rasterize_set(const SetSpec& s, const ChartGrid& g);
std::array<Bitmap, 2> rasterize_set(const SetSpec& s, const Atlas& a);

// Portable graymap (P2/P5) masks: nonzero pixels are members. Row 0 is the top
// (largest imaginary part).
Bitmap read_pgm_mask(const std::string& path, int& width, int& height);
void write_pgm_mask(const std::string& path, const Bitmap& bits, int width, int height);

}  // namespace kahlercap
