#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kahlercap/envelopes.hpp"

namespace kahlercap {

struct CapacityValue {
  double value = 0.0;
  bool polar = false;
  double volume = 0.0;        // FS volume of the rasterized set
  double total_mass = 0.0;    // mass of the envelope's Monge-Ampere measure
  double clipped_mass = 0.0;
  long iterations = 0;
};

// Cap(E) = integral of (-h*_E) against (omega + dd^c h*_E).
CapacityValue ma_capacity(const SetSpec& E, const Atlas& atlas, const EnvelopeOptions& opt = {});

struct BruteforceResult {
  double value = 0.0;       // best integral over E found
  std::size_t tried = 0;
  std::size_t certified = 0;
  std::string best;         // description of the winning member
};

// Lower bound for Cap(E): max of the Monge-Ampere mass on E over a seeded
// family of certified fields with values in [0, 1].
BruteforceResult ma_capacity_bruteforce(const SetSpec& E, const Atlas& atlas, int family_size, std::uint64_t seed,
                                        const EnvelopeOptions& opt = {});

struct AlexanderValue {
  double value = 0.0;
  double sup_v = 0.0;
  bool polar = false;
};

// T(K) = exp(-sup V*_K); 0 when the envelope is flagged polar.
AlexanderValue alexander_capacity(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt = {});

struct SublevelRow {
  double t = 0.0;
  bool empty = false;
  double t_alex = 0.0;
  double cap = 0.0;
  double t_bound = 0.0;    // exp(-sup phi) exp(-t)
  double cap_bound = 0.0;  // (1/t)(integral of -phi + n)
  bool t_holds = false;
  bool cap_holds = false;
};

struct SublevelReport {
  std::vector<SublevelRow> rows;
  bool passes = false;
};

// Membership test for {phi < -t}; by default the field's own interpolation.
using FieldEvaluator = std::function<double(const ProjectivePoint&)>;

SublevelReport sublevel_capacity_decay(const QpshField& phi, const std::vector<double>& t_list, double tol = 5e-2,
                                       const FieldEvaluator& exact = {}, const EnvelopeOptions& opt = {});

struct ComparisonRow {
  std::string label;
  double cap = 0.0;
  double t_alex = 0.0;
  double upper = 0.0;  // e exp(-Cap^{-1/n})
  double slack = 0.0;  // upper - T
  double a_needed = 0.0;  // -Cap log T, smallest A for this set
};

struct CapacityComparison {
  std::vector<ComparisonRow> rows;
  double fitted_a = 0.0;
  double worst_slack = 0.0;
  bool upper_holds = false;
};

CapacityComparison capacity_comparison(const std::vector<SetSpec>& family, const std::vector<std::string>& labels,
                                       const Atlas& atlas, double tol = 5e-2, const EnvelopeOptions& opt = {});

// Unit-ball Siciak capacity exp(-sup_{|z|<=1} L_K) against T(K).
struct SiciakBracket {
  double t_ball = 0.0;
  double t_alex = 0.0;
  bool holds = false;  // T/sqrt2 <= T_ball <= 2T
};

SiciakBracket siciak_bracket(const SetSpec& K, const Atlas& atlas, double tol = 1e-2,
                             const EnvelopeOptions& opt = {});

struct JosefsonResult {
  QpshField field;
  std::vector<double> t_nodes;    // sublevel levels used
  std::vector<double> sup_v;      // sup V_t per level
  int k_max = 0;
  double tail_bound = 0.0;        // bound on the truncated part of the integral
};

// phi_eps = eps * integral_1^inf t^{-1-eps} (V_t - sup V_t) dt with
// V_t = V*_{v < -t}, by the trapezoid rule in log t on t = 2^k.
JosefsonResult josefson_potential(const QpshField& v, double eps, const FieldEvaluator& exact = {},
                                  const EnvelopeOptions& opt = {});

}  // namespace kahlercap
