#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "kahlercap/qpsh.hpp"

namespace kahlercap {

// Homogeneous polynomial of degree N in n + 1 variables: a section of O(N).
class HomPoly {
public:
  using Exponent = std::vector<int>;

  HomPoly(int n, int degree);
  static HomPoly monomial(const Exponent& e, cplx coeff = 1.0);

  int dimension() const { return n_; }
  int degree() const { return degree_; }
  const std::map<Exponent, cplx>& terms() const { return terms_; }
  // Throws ConfigError when the exponent has the wrong size or degree.
  void set(const Exponent& e, cplx c);
  cplx coeff(const Exponent& e) const;
  bool is_zero() const;

  cplx operator()(std::span<const cplx> x) const;
  // |s(x)| / |x|^N, the FS norm of the section at [x].
  double fs_norm(std::span<const cplx> x) const;
  HomPoly operator*(const HomPoly& o) const;
  HomPoly scaled(cplx c) const;
  std::string to_string() const;

private:
  int n_;
  int degree_;
  std::map<Exponent, cplx> terms_;
};

// Unit representatives of projective sample points.
struct SectionCloud {
  int n = 1;
  std::vector<std::vector<cplx>> points;

  // Every node of both charts of the atlas, each point once (owning chart).
  static SectionCloud from_atlas(const Atlas& atlas);
  // Points of the cloud inside the set.
  SectionCloud restrict_to(const SetSpec& s) const;
  std::size_t size() const { return points.size(); }
};

// Sup over the cloud of |s(x)|/|x|^N.
double section_supnorm(const HomPoly& s, const SectionCloud& cloud);
double section_supnorm(const HomPoly& s, const SectionCloud& cloud, const SetSpec& region);

enum class TchebStrategy { Auto, Monomial, Subgradient };

struct TchebResult {
  double value = 0.0;  // M_N(K), an upper bound for the infimum
  HomPoly best{1, 1};
  TchebStrategy used = TchebStrategy::Monomial;
};

// M_N(K) = inf sup_K |s| over degree N sections with sup_X |s| = 1. Circled
// sets (radial profiles in chart 0) are solved exactly over monomials; other
// sets by multi-start subgradient descent on clouds drawn from the atlas.
TchebResult tcheb_constant(const SetSpec& K, int N, const Atlas& cloud_atlas,
                           TchebStrategy strategy = TchebStrategy::Auto, int n = 1);

struct SectionsAlexander {
  std::vector<int> degrees;
  std::vector<double> m;      // M_N
  std::vector<double> roots;  // M_N^{1/N}
  double value = 1.0;         // min of the roots
};

// min over N in {1, 2, 4, ..., N_max} of M_N(K)^{1/N}.
SectionsAlexander alexander_from_sections(const SetSpec& K, int n_max, const Atlas& cloud_atlas, int n = 1);

struct HullRadius {
  double value = 1.0;
  std::vector<int> degrees;
  std::vector<double> roots;
  std::size_t k0_points = 0;
  std::size_t sphere_points = 0;
};

// Inradius of the polynomial hull of the circled cone over K, from sample
// clouds on the unit sphere of C^2.
HullRadius hull_radius(const SetSpec& K, int n_max, const Atlas& cloud_atlas);

struct MuAResult {
  double value = 0.0;  // M^{mu,A}_N(K)
  double root = 0.0;   // value^{1/N}
  HomPoly best{1, 1};
};

// Mean of log(|s|/|x|^N) against mu (-inf if s vanishes at an atom).
double mu_log_mean(const HomPoly& s, const DiscreteMeasure& mu);
// c * s with mu_log_mean = N * A.
HomPoly mu_normalize(const HomPoly& s, const DiscreteMeasure& mu, double A);
MuAResult mu_A_tcheb(const SetSpec& K, int N, const DiscreteMeasure& mu, double A);

struct BergmanResult {
  QpshField field;
  std::size_t rank = 0;    // eigenvalues kept
  double min_eigen = 0.0;  // smallest kept eigenvalue, relative to the largest
};

// phi_{j,j0} = (1/2j) log((1/d) sum |sigma_l|^2 e^{-2jh}) for an orthonormal
// basis of degree-j sections under the weight exp(-2[(j-j0)(phi+h) + j0 h]) dV.
BergmanResult bergman_regularize(const QpshField& phi, int j, int j0);

struct SandwichReport {
  std::vector<int> degrees;
  std::vector<double> l1;             // FS L1 distance to phi
  std::vector<double> lower_const;    // log C4 needed at each j
  std::vector<double> upper_const;    // C needed at each j
  double radius = 0.0;                // radius of the local sup in the upper bound
  bool l1_monotone = false;
  bool lower_bounded = false;         // j * slack_j stays bounded
  bool upper_bounded = false;
};

// Runs bergman_regularize over the degrees and fits the constants of the
// lower bound phi_j >= (1 - j0/j) phi - log C4 / 2j and of the upper bound
// phi_j <= (1 - j0/j) sup_{B(x,r)} phi + (C - log r) / j.
SandwichReport bergman_sandwich(const QpshField& phi, const std::vector<int>& degrees, int j0, double radius);

}  // namespace kahlercap
