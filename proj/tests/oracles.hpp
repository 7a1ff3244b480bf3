#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "kahlercap/geometry.hpp"

namespace oracle {

inline double chart_radius(kahlercap::cplx z, int chart) {
  if (chart == 0) return std::abs(z);
  return std::abs(z) == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / std::abs(z);
}

// H(s) = 1/2 log(1 + e^{2s}) and its derivative.
inline double H(double s) { return 0.5 * std::log1p(std::exp(2.0 * s)); }
inline double dH(double s) { return 1.0 / (1.0 + std::exp(-2.0 * s)); }

// V*_{B_R} at |z| = r.
inline double ball_extremal(double R, double r) {
  if (std::isinf(r)) return 0.5 * std::log1p(R * R) - std::log(R);
  return std::max(std::log(r / R) + 0.5 * std::log1p(R * R) - 0.5 * std::log1p(r * r), 0.0);
}

inline double ball_alexander(double R) { return R / std::sqrt(1.0 + R * R); }

// Cap(B_R) on CP^1 from the convex minorant in s = log|z| of the obstacle
// H - 1 (s <= log R), H (s > log R). The minorant leaves the corner at
// s = log R along a line tangent to H at s2, and the capacity is its slope.
inline double ball_capacity(double R) {
  const double a = std::log(R);
  if (H(a) - 1.0 - a <= 0.0) return 1.0;
  auto gap = [a](double s) { return H(s) + dH(s) * (a - s) - H(a) + 1.0; };
  double lo = a, hi = a + 60.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  return dH(0.5 * (lo + hi));
}

}  // namespace oracle
