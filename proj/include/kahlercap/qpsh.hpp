#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "kahlercap/geometry.hpp"

namespace kahlercap {

inline constexpr double kSentinel = -std::numeric_limits<double>::infinity();
// On-disk encoding of the sentinel.
inline constexpr double kSentinelDisk = -1e300;

using ChartArrays = std::array<std::vector<double>, 2>;

// Grid samples of a candidate omega-psh function phi on both charts of CP^1.
// Values are finite or kSentinel (-inf). Immutable once built.
class QpshField {
public:
  QpshField() = default;
  QpshField(Atlas atlas, ChartArrays phi, bool claimed_psh = false);

  // phi(z) for chart point z of chart c.
  static QpshField sample(const Atlas& atlas, const std::function<double(cplx z, int chart)>& fn,
                          bool claimed_psh = false);
  // phi from the lifted psi = phi + h given per chart.
  static QpshField from_lifted(const Atlas& atlas, const ChartArrays& psi, bool claimed_psh = false);

  const Atlas& atlas() const { return atlas_; }
  const ChartArrays& values() const { return phi_; }
  const std::vector<double>& chart(int c) const { return phi_[c]; }
  double at(int chart, int i, int j) const { return phi_[chart][atlas_.charts[chart].index(i, j)]; }
  double evaluate(const ProjectivePoint& p) const { return atlas_.interpolate(phi_, p); }
  bool claimed_psh() const { return claimed_; }
  double sup() const { return sup_; }
  double inf() const { return inf_; }
  std::size_t sentinel_count() const { return sentinels_; }
  bool polar_flagged() const;
  bool has_sentinel() const { return sentinels_ > 0; }

  QpshField with_claim(bool claimed) const { return QpshField(atlas_, phi_, claimed); }

private:
  Atlas atlas_{};
  ChartArrays phi_;
  bool claimed_ = false;
  double sup_ = kSentinel;
  double inf_ = kSentinel;
  std::size_t sentinels_ = 0;
};

// Node weights per chart. Weights are already multiplied by cell area and the
// partition of unity, so the mass of a set is a plain sum.
struct DiscreteMeasure {
  Atlas atlas{};
  ChartArrays weights;

  double total() const;
  double mass_where(const std::function<bool(int chart, std::size_t node)>& pred) const;
  static DiscreteMeasure zero(const Atlas& atlas);
  static DiscreteMeasure fs_volume(const Atlas& atlas);
  static DiscreteMeasure dirac(const Atlas& atlas, int chart, int i, int j);
};

// psi = phi + h per chart.
ChartArrays lift_to_lelong(const QpshField& f);

struct DefectReport {
  double min_density = 0.0;  // most negative (1/2pi) Lap psi over checked nodes
  double defect_tol = 0.0;   // 4 h (1 + max fourth-difference estimate)
  std::size_t checked = 0;
  std::size_t skipped = 0;   // stencils touching a sentinel
  std::size_t failing = 0;   // nodes below their local truncation allowance
  bool certified = false;
};

// Scans every node that carries blend weight in either chart.
DefectReport defect_report(const QpshField& f);
// Most negative discrete curvature density; throws SentinelInStencil when
// strict and any stencil had to be skipped.
double omega_psh_defect(const QpshField& f, bool strict = false);

enum class CombineMode { Max, Mean, Softmax };
QpshField lattice_combine(const QpshField& a, const QpshField& b, CombineMode mode);
QpshField normalize_sup(const QpshField& f);
QpshField add_constant(const QpshField& f, double c);

// phi_mu(x) = sum_y w_y log(|x ^ y| / (|x| |y|)).
QpshField kernel_potential(const DiscreteMeasure& m);
struct Atom {
  ProjectivePoint point;
  double weight = 0.0;
};
QpshField kernel_potential(const Atlas& atlas, const std::vector<Atom>& atoms);

// Glues a psh function u given on chart-0 nodes near the closed unit disc to a
// Lelong-class function and returns the corresponding bounded omega-psh field.
QpshField extend_local_psh(const Atlas& atlas, const std::vector<double>& u, double A, double eps);

// Integrals against the FS volume (blend-weighted midpoint rule).
double fs_integral(const QpshField& f, const std::function<double(double)>& g);
double fs_mean(const QpshField& f);

// Binary layout: int32 chart, float64 box_radius, int32 resolution, then
// row-major float64 values, sentinel as -1e300. One block per chart.
void write_field(const std::string& path, const QpshField& f, const nlohmann::json& meta = {});
QpshField read_field(const std::string& path);
nlohmann::json field_metadata(const QpshField& f);

}  // namespace kahlercap
