#pragma once

#include <optional>
#include <vector>

#include "kahlercap/monge_ampere.hpp"
#include "kahlercap/qpsh.hpp"

namespace kahlercap {

struct EnvelopeOptions {
  double tol = 1e-8;          // max change of psi over one sweep
  long max_sweeps = 2000000;
  double polar_threshold = 50.0;
  bool nested = true;         // start from the solution on the half-resolution atlas
  int coarsest = 33;
};

enum class EnvelopeKind { Relative, Global };

struct EnvelopeResult {
  QpshField field;
  EnvelopeKind kind = EnvelopeKind::Relative;
  SetSpec set = SetSpec::empty();
  long iterations = 0;
  double residual = 0.0;
  bool polar_flag = false;
  double sup_value = 0.0;
  // sup on the half-resolution atlas, when the nested start was used.
  std::optional<double> coarse_sup;
  // Largest gap between the two charts' values on the blend ring.
  double chart_disagreement = 0.0;
  std::size_t set_nodes = 0;
};

// Largest omega-psh grid function <= 0 everywhere and <= -1 on E.
EnvelopeResult relative_extremal(const SetSpec& E, const Atlas& atlas, const EnvelopeOptions& opt = {});
// Largest omega-psh grid function <= 0 on K.
EnvelopeResult global_extremal(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt = {});
// Siciak's extremal function L_K of K in C (chart 0): largest Lelong-class
// function <= 0 on K, returned as the omega-psh field L_K - h.
EnvelopeResult siciak_extremal(const SetSpec& K, const Atlas& atlas, const EnvelopeOptions& opt = {});

struct SupportReport {
  double forbidden_mass = 0.0;  // mass where the measure must vanish
  double set_mass = 0.0;        // global: mass on the closure of K
  double total_mass = 0.0;
  double clipped_mass = 0.0;
  bool passes = false;
};

SupportReport support_and_mass_check(const EnvelopeResult& r, double support_tol = kMassTol,
                                     double mass_tol = kMassTol);

struct MonotoneReport {
  double worst_order_violation = 0.0;  // largest positive step against the expected order
  std::vector<double> capacities;
  bool passes = false;
};

// family must be increasing or decreasing under inclusion (checked on nodes).
MonotoneReport monotone_limit_check(const std::vector<SetSpec>& family, EnvelopeKind kind, const Atlas& atlas,
                                    const EnvelopeOptions& opt = {});

// One-dimensional envelopes for circled sets in C^n, in s = log|z|.
struct ToricEnvelope {
  EnvelopeKind kind = EnvelopeKind::Relative;
  int n = 1;
  RadialFunction psi;  // lifted profile u(s)
  bool polar = false;

  // phi at |z| = r (r = inf allowed).
  double phi(double r) const;
  double sup() const;
  // Integral of -phi against the Monge-Ampere measure.
  double energy() const;
};

ToricEnvelope toric_envelope(const SetSpec& set, int n, EnvelopeKind kind, std::size_t samples = 100000,
                             double s_range = 12.0);

}  // namespace kahlercap
