#pragma once

#include <string>
#include <vector>

#include "kahlercap/qpsh.hpp"

namespace kahlercap {

inline constexpr double kMassTol = 5e-3;

// Discrete (omega + dd^c phi)^n. For n = 1 grids, the weight at a node is
// blend * (1/2pi) * (5-point Laplacian of psi) * h^2, negative parts clipped.
struct MAMeasure {
  DiscreteMeasure measure;
  double clipped_mass = 0.0;  // total of the negative weights removed
  double raw_mass = 0.0;      // mass before clipping
  int order = 1;
  std::string source;

  double total() const { return measure.total(); }
};

MAMeasure ma_measure(const QpshField& f, std::string source = "field");

// Rows "chart,i,j,weight" for every node with nonzero weight.
void write_measure_csv(const std::string& path, const MAMeasure& mu);
// Same layout as write_field, one weight per node.
void write_measure(const std::string& path, const MAMeasure& mu);

// Circled data in C^n: psi(z) = u(log|z|) with u convex, slopes in [0, 1].
// Stored as a piecewise-linear profile on increasing s nodes.
struct RadialFunction {
  std::vector<double> s;
  std::vector<double> u;

  double operator()(double x) const;
  // Right slope on each segment.
  double slope(std::size_t seg) const { return (u[seg + 1] - u[seg]) / (s[seg + 1] - s[seg]); }
};

// Atoms of (dd^c psi)^n for a radial psi: mass u'(s)^n jumps at vertices.
struct RadialMeasure {
  std::vector<double> s;
  std::vector<double> mass;
  double total() const;
};

RadialMeasure ma_measure_radial(const RadialFunction& f, int n);

// H(s) = 1/2 log(1 + e^{2s}), the FS potential as a function of s = log|z|.
double fs_radial(double s);

struct ClnReport {
  double value = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// Integral of |psi| against ma_measure(phi), with the Chern-Levine-Nirenberg
// type bound on it.
ClnReport cln_pairing(const QpshField& psi, const QpshField& phi, double slack = kMassTol);

struct ComparisonReport {
  double mass_psi = 0.0;  // mu_psi({phi < psi})
  double mass_phi = 0.0;  // mu_phi({phi < psi})
  bool passes = false;
};

ComparisonReport comparison_check(const QpshField& phi, const QpshField& psi, double tol = kMassTol);

// Replaces psi = phi + h inside the ball by the discrete harmonic function with
// the same boundary values. Each chart solves on its own nodes.
QpshField harmonic_replacement(const QpshField& f, const SetSpec& ball);

}  // namespace kahlercap
