#pragma once

#include <string>
#include <vector>

#include "kahlercap/capacities.hpp"
#include "kahlercap/sections.hpp"

namespace kahlercap {

// f: CP^1 -> CP^1 given by a lift F = (F0, F1) of common degree lambda.
struct Endomorphism {
  std::vector<HomPoly> lift;
  int lambda = 0;
  double lift_floor = 0.0;  // min over the test cloud of |F(x)| / |x|^lambda
  double resultant = 0.0;   // |Res(F0, F1)| over the product of coefficient norms^lambda

  // F(x) rescaled to unit norm; log |F(x)| for unit x is returned in log_norm.
  std::vector<cplx> apply_unit(const std::vector<cplx>& x, double* log_norm = nullptr) const;
  ProjectivePoint apply(const ProjectivePoint& p) const;
  // phi(x) = (1/lambda) log |F(x)| - log |x|.
  double step_potential(const std::vector<cplx>& x) const;
  // Fubini-Study Jacobian |det DF(x)| |x|^2 / (lambda |F(x)|^2) at unit x.
  double fs_jacobian(const std::vector<cplx>& x) const;
  std::string to_string() const;
};

// Homogeneous polynomials in z, w (z = x0, w = x1) separated by commas, e.g.
// "z^2 + w^2, 2*z*w" or "0.5z^3 - w^3, z w^2".
std::vector<HomPoly> parse_map(const std::string& text);

Endomorphism build_endomorphism(const std::vector<HomPoly>& polys, double floor = 1e-8);

QpshField green_step_potential(const Endomorphism& f, const Atlas& atlas);

struct GreenResult {
  QpshField field;       // g_j
  int j = 0;
  double error_bound = 0.0;   // sup|phi| lambda^{-j} / (1 - 1/lambda)
  double sup_phi = 0.0;       // sup |phi|
  double equation_residual = 0.0;  // sup |g_j - phi - g_j o f / lambda|
  double step_mass = 0.0;     // mass of omega + dd^c phi
};

// g_j = sum_{l<j} lambda^{-l} phi o f^l, summed along exact orbits of the nodes.
GreenResult green_iterate(const Endomorphism& f, const Atlas& atlas, int j);
// Smallest j whose tail bound is <= tol.
GreenResult green_function(const Endomorphism& f, const Atlas& atlas, double tol, int j_cap = 200);
// g_0, ..., g_{j_max} in one pass.
std::vector<QpshField> green_partial_sums(const Endomorphism& f, const Atlas& atlas, int j_max);

// f^j(K) as a node mask per chart: images of the node-centred dual cells of K.
// Dilation adds every node within one cell of the image.
std::array<Bitmap, 2> forward_image(const Endomorphism& f, const SetSpec& K, const Atlas& atlas, int j,
                                    bool dilate);

struct DynCapacityRow {
  std::string label;
  int j = 0;
  double t0 = 0.0;  // T(K)
  double tj = 0.0;  // T(f^j K)
  double alpha_needed = 0.0;  // T_j^{1/lambda^j} / T_0
};

struct DynCapacityReport {
  std::vector<DynCapacityRow> rows;
  double alpha_fit = 1.0;
  double alpha_theory = 0.0;  // exp(-max_j osc g_j)
  bool holds_fit = false;
  bool holds_theory = false;
};

DynCapacityReport dyn_capacity_check(const Endomorphism& f, const std::vector<SetSpec>& sets,
                                     const std::vector<std::string>& labels, const Atlas& atlas, int j_max,
                                     const EnvelopeOptions& opt = {});

struct VolumeDecayReport {
  double vol_k = 0.0;
  std::vector<double> vol_cloud;   // FS volume of the rasterized image
  std::vector<double> vol_change;  // lambda^{-j} integral over K of |J_FS(f^j)|^2
  std::vector<double> margins;     // log vol + C lambda^j / vol_k with the fitted C
  double c_fit = 0.0;
  double worst_disagreement = 0.0; // max relative gap between the two volumes
};

VolumeDecayReport volume_decay_check(const Endomorphism& f, const SetSpec& K, const Atlas& atlas, int j_max);

struct PullbackReport {
  std::vector<double> sups;
  std::vector<double> l1;
  bool bounded = false;
};

// phi_j = lambda^{-j} phi o f^j, evaluated by interpolation or by `exact`.
PullbackReport pullback_family_check(const QpshField& phi, const Endomorphism& f, int j_max,
                                     const FieldEvaluator& exact = {});

}  // namespace kahlercap
