#pragma once

#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "kahlercap/qpsh.hpp"

namespace kahlercap {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;       // measured values against their tolerances
  nlohmann::json values;    // the same numbers, machine readable
  bool convergence_failure = false;
};

// Bounded omega-psh test fields: log|Ax| - log|x| for random invertible A,
// clipped kernel potentials, and convex combinations and maxima of those.
QpshField random_bounded_field(const Atlas& atlas, std::mt19937_64& rng);

// Runs the acceptance criteria (all of them when `only` is empty) on up to
// `threads` workers and prints one line per criterion, in order, to `out`.
std::vector<CriterionResult> run_acceptance(std::ostream& out, const std::vector<int>& only = {}, int threads = 1);

// Exact value of the global extremal function of the closed ball |z| <= R at |z| = r.
double ball_extremal_closed_form(double R, double r);

inline constexpr int kCriterionCount = 14;

}  // namespace kahlercap
