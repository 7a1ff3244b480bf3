#include "kahlercap/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "kahlercap/error.hpp"

namespace kahlercap {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

cplx ipow(cplx x, int k) {
  cplx r = 1.0;
  for (int q = 0; q < k; ++q) r *= x;
  return r;
}

std::vector<cplx> unit_rep(const ProjectivePoint& p) {
  const double n = p.norm();
  std::vector<cplx> x(p.coords.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = p.coords[k] / n;
  return x;
}

// Bidegree monomial x_0^a x_n^{N-a}, the natural candidates on circled sets.
HomPoly edge_monomial(int n, int N, int a) {
  HomPoly::Exponent e(static_cast<std::size_t>(n) + 1, 0);
  e[0] = a;
  e[static_cast<std::size_t>(n)] = N - a;
  return HomPoly::monomial(e);
}

// log of r^a / (1 + r^2)^{N/2}, with the limits at r = 0 and r = inf.
double log_profile(int a, int N, double r) {
  if (r == 0.0) return a == 0 ? 0.0 : -kInf;
  if (std::isinf(r)) return a == N ? 0.0 : -kInf;
  return a * std::log(r) - 0.5 * N * std::log1p(r * r);
}

double peak_radius(int a, int N) {
  if (a == 0) return 0.0;
  if (a == N) return kInf;
  return std::sqrt(static_cast<double>(a) / (N - a));
}

// Exact sup over a radial set of log(|x_0^a x_n^{N-a}| / |x|^N); the profile
// increases up to the peak radius and decreases after it.
double log_sup_radial(int a, int N, const SetSpec::RadialSet& rs) {
  const double rstar = peak_radius(a, N);
  double best = -kInf;
  for (const auto& iv : rs.intervals) {
    const double r = std::clamp(rstar, iv[0], iv[1]);
    best = std::max(best, log_profile(a, N, r));
  }
  return best;
}

// Values of a basis of monomials on a cloud, one row per point.
Eigen::MatrixXcd monomial_matrix(const std::vector<std::vector<cplx>>& pts, const std::vector<HomPoly>& basis) {
  Eigen::MatrixXcd V(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t p = 0; p < pts.size(); ++p) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      V(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b)) = basis[b](pts[p]);
    }
  }
  return V;
}

std::vector<HomPoly> monomial_basis(int n, int N) {
  std::vector<HomPoly> out;
  HomPoly::Exponent e(static_cast<std::size_t>(n) + 1, 0);
  // Enumerate all exponents with |e| = N.
  std::function<void(std::size_t, int)> rec = [&](std::size_t k, int left) {
    if (k == e.size() - 1) {
      e[k] = left;
      out.push_back(HomPoly::monomial(e));
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[k] = v;
      rec(k + 1, left - v);
    }
  };
  rec(0, N);
  return out;
}

struct RatioEval {
  double value;
  Eigen::Index arg_k;
  Eigen::Index arg_x;
  double sup_k;
  double sup_x;
};

RatioEval evaluate_ratio(const Eigen::MatrixXcd& VK, const Eigen::MatrixXcd& VX, const Eigen::VectorXcd& c) {
  const Eigen::VectorXd ak = (VK * c).cwiseAbs();
  const Eigen::VectorXd ax = (VX * c).cwiseAbs();
  RatioEval r{};
  r.sup_k = ak.maxCoeff(&r.arg_k);
  r.sup_x = ax.maxCoeff(&r.arg_x);
  r.value = r.sup_x > 0.0 ? r.sup_k / r.sup_x : kInf;
  return r;
}

// Minimizes sup_K |s| / sup_X |s| over coefficient vectors: 32 deterministic
// starts on the unit sphere, 500 normalized subgradient steps of size 1/sqrt(k).
Eigen::VectorXcd minimize_ratio(const Eigen::MatrixXcd& VK, const Eigen::MatrixXcd& VX,
                                const Eigen::VectorXcd& warm, double& best_value) {
  const Eigen::Index m = VK.cols();
  Eigen::VectorXcd best = warm;
  best_value = evaluate_ratio(VK, VX, warm).value;
  for (int start = 0; start < 32; ++start) {
    Eigen::VectorXcd c(m);
    if (start == 0) {
      c = warm;
    } else {
      std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(start));
      std::normal_distribution<double> g(0.0, 1.0);
      for (Eigen::Index q = 0; q < m; ++q) c(q) = cplx(g(rng), g(rng));
    }
    c.normalize();
    for (int k = 1; k <= 500; ++k) {
      const RatioEval r = evaluate_ratio(VK, VX, c);
      if (r.value < best_value) {
        best_value = r.value;
        best = c;
      }
      if (r.sup_k == 0.0 || r.sup_x == 0.0) break;
      const cplx sk = (VK.row(r.arg_k) * c)(0);
      const cplx sx = (VX.row(r.arg_x) * c)(0);
      const Eigen::VectorXcd gk = VK.row(r.arg_k).adjoint() * (sk / r.sup_k);
      const Eigen::VectorXcd gx = VX.row(r.arg_x).adjoint() * (sx / r.sup_x);
      Eigen::VectorXcd grad = (gk * r.sup_x - gx * r.sup_k) / (r.sup_x * r.sup_x);
      const double gn = grad.norm();
      if (gn == 0.0) break;
      c -= (1.0 / std::sqrt(static_cast<double>(k))) * grad / gn;
      c.normalize();
    }
    const RatioEval r = evaluate_ratio(VK, VX, c);
    if (r.value < best_value) {
      best_value = r.value;
      best = c;
    }
  }
  return best;
}

HomPoly combine(const std::vector<HomPoly>& basis, const Eigen::VectorXcd& c) {
  HomPoly s(basis.front().dimension(), basis.front().degree());
  for (std::size_t b = 0; b < basis.size(); ++b) {
    const auto& t = *basis[b].terms().begin();
    if (c(static_cast<Eigen::Index>(b)) != cplx(0.0)) s.set(t.first, c(static_cast<Eigen::Index>(b)));
  }
  return s;
}

std::vector<std::vector<cplx>> phased(const std::vector<std::vector<cplx>>& pts, int phases) {
  std::vector<std::vector<cplx>> out;
  out.reserve(pts.size() * static_cast<std::size_t>(phases * phases));
  for (const auto& p : pts) {
    for (int a = 0; a < phases; ++a) {
      for (int b = 0; b < phases; ++b) {
        out.push_back({p[0] * std::polar(1.0, 2.0 * kPi * a / phases), p[1] * std::polar(1.0, 2.0 * kPi * b / phases)});
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

HomPoly::HomPoly(int n, int degree) : n_(n), degree_(degree) {
  if (n < 1 || degree < 0) throw Error(ErrorCode::ConfigError, "HomPoly", "need n >= 1 and degree >= 0");
}

HomPoly HomPoly::monomial(const Exponent& e, cplx coeff) {
  int d = 0;
  for (int v : e) d += v;
  HomPoly p(static_cast<int>(e.size()) - 1, d);
  p.set(e, coeff);
  return p;
}

void HomPoly::set(const Exponent& e, cplx c) {
  if (static_cast<int>(e.size()) != n_ + 1) throw Error(ErrorCode::ConfigError, "HomPoly", "exponent size mismatch");
  int d = 0;
  for (int v : e) {
    if (v < 0) throw Error(ErrorCode::ConfigError, "HomPoly", "negative exponent");
    d += v;
  }
  if (d != degree_) throw Error(ErrorCode::ConfigError, "HomPoly", "exponent degree mismatch");
  if (c == cplx(0.0)) {
    terms_.erase(e);
  } else {
    terms_[e] = c;
  }
}

cplx HomPoly::coeff(const Exponent& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? cplx(0.0) : it->second;
}

bool HomPoly::is_zero() const { return terms_.empty(); }

cplx HomPoly::operator()(std::span<const cplx> x) const {
  cplx s = 0.0;
  for (const auto& [e, c] : terms_) {
    cplx t = c;
    for (std::size_t k = 0; k < e.size(); ++k) t *= ipow(x[k], e[k]);
    s += t;
  }
  return s;
}

double HomPoly::fs_norm(std::span<const cplx> x) const {
  double n2 = 0.0;
  for (const cplx& v : x) n2 += std::norm(v);
  return std::abs((*this)(x)) / std::pow(std::sqrt(n2), degree_);
}

HomPoly HomPoly::operator*(const HomPoly& o) const {
  if (o.n_ != n_) throw Error(ErrorCode::ConfigError, "HomPoly", "dimension mismatch");
  HomPoly p(n_, degree_ + o.degree_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : o.terms_) {
      Exponent e(ea.size());
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      p.set(e, p.coeff(e) + ca * cb);
    }
  }
  return p;
}

HomPoly HomPoly::scaled(cplx c) const {
  HomPoly p(n_, degree_);
  for (const auto& [e, v] : terms_) p.set(e, v * c);
  return p;
}

std::string HomPoly::to_string() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << "(" << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)";
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (e[k] > 0) os << "*x" << k << "^" << e[k];
    }
  }
  return first ? "0" : os.str();
}

// ---------------------------------------------------------------------------

SectionCloud SectionCloud::from_atlas(const Atlas& atlas) {
  SectionCloud cl;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = atlas.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        if (!atlas.owns(c, i, j)) continue;
        cl.points.push_back(unit_rep(from_chart(g.node(i, j), c)));
      }
    }
  }
  return cl;
}

SectionCloud SectionCloud::restrict_to(const SetSpec& s) const {
  SectionCloud out;
  out.n = n;
  for (const auto& p : points) {
    if (s.contains(normalize_point(p))) out.points.push_back(p);
  }
  return out;
}

double section_supnorm(const HomPoly& s, const SectionCloud& cloud) {
  if (cloud.points.empty()) throw Error(ErrorCode::EmptyRegion, "section_supnorm", "no sample points");
  double m = 0.0;
  for (const auto& p : cloud.points) m = std::max(m, s.fs_norm(p));
  return m;
}

double section_supnorm(const HomPoly& s, const SectionCloud& cloud, const SetSpec& region) {
  const SectionCloud r = cloud.restrict_to(region);
  if (r.points.empty()) throw Error(ErrorCode::EmptyRegion, "section_supnorm", "region contains no sample point");
  return section_supnorm(s, r);
}

TchebResult tcheb_constant(const SetSpec& K, int N, const Atlas& cloud_atlas, TchebStrategy strategy, int n) {
  if (N < 1) throw Error(ErrorCode::ConfigError, "tcheb_constant", "degree must be >= 1");
  const auto rs = K.radial();
  TchebResult out;
  if (strategy != TchebStrategy::Subgradient && rs) {
    if (rs->empty()) throw Error(ErrorCode::EmptyRegion, "tcheb_constant", "empty set");
    double best = kInf;
    int best_a = N;
    for (int a = 0; a <= N; ++a) {
      const double v = log_sup_radial(a, N, *rs) - log_profile(a, N, peak_radius(a, N));
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    out.value = std::exp(best);
    out.best = edge_monomial(n, N, best_a);
    out.used = TchebStrategy::Monomial;
    return out;
  }
  if (n != 1) throw Error(ErrorCode::ConfigError, "tcheb_constant", "non-circled sets need n = 1");
  const SectionCloud X = SectionCloud::from_atlas(cloud_atlas);
  const SectionCloud Kc = X.restrict_to(K);
  if (Kc.points.empty()) throw Error(ErrorCode::EmptyRegion, "tcheb_constant", "set contains no sample point");
  const std::vector<HomPoly> basis = monomial_basis(1, N);
  const Eigen::MatrixXcd VK = monomial_matrix(Kc.points, basis);
  const Eigen::MatrixXcd VX = monomial_matrix(X.points, basis);
  // Warm start from the best single monomial on the clouds.
  Eigen::VectorXcd warm = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
  double wbest = kInf;
  for (Eigen::Index b = 0; b < warm.size(); ++b) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(warm.size());
    e(b) = 1.0;
    const double v = evaluate_ratio(VK, VX, e).value;
    if (v < wbest) {
      wbest = v;
      warm = e;
    }
  }
  if (strategy == TchebStrategy::Monomial) {
    out.value = wbest;
    out.best = combine(basis, warm);
    out.used = TchebStrategy::Monomial;
    return out;
  }
  double value = wbest;
  const Eigen::VectorXcd c = minimize_ratio(VK, VX, warm, value);
  // Report the section with sup_X |s| = 1 on the cloud.
  const double sx = (VX * c).cwiseAbs().maxCoeff();
  out.value = value;
  out.best = combine(basis, c / sx);
  out.used = TchebStrategy::Subgradient;
  return out;
}

SectionsAlexander alexander_from_sections(const SetSpec& K, int n_max, const Atlas& cloud_atlas, int n) {
  SectionsAlexander out;
  for (int N = 1; N <= n_max; N *= 2) {
    const TchebResult t = tcheb_constant(K, N, cloud_atlas, TchebStrategy::Auto, n);
    out.degrees.push_back(N);
    out.m.push_back(t.value);
    out.roots.push_back(std::pow(t.value, 1.0 / N));
    out.value = std::min(out.value, out.roots.back());
  }
  return out;
}

HullRadius hull_radius(const SetSpec& K, int n_max, const Atlas& cloud_atlas) {
  HullRadius out;
  constexpr int kPhases = 4;
  constexpr int kSphereAngles = 1024;
  // Unit sphere of C^2: (cos t e^{ia}, sin t e^{ib}).
  std::vector<std::vector<cplx>> sphere_base;
  for (int k = 0; k < kSphereAngles; ++k) {
    const double t = 0.5 * kPi * k / (kSphereAngles - 1);
    sphere_base.push_back({std::cos(t), std::sin(t)});
  }
  const auto sphere = phased(sphere_base, kPhases);
  // The coefficient search on non-circled sets runs on a coarser sphere.
  std::vector<std::vector<cplx>> sphere_coarse_base;
  for (int k = 0; k < kSphereAngles; k += 8) sphere_coarse_base.push_back(sphere_base[static_cast<std::size_t>(k)]);
  sphere_coarse_base.push_back(sphere_base.back());
  const auto sphere_coarse = phased(sphere_coarse_base, kPhases);

  // K0: unit representatives of K (chart 0 point z is (z, 1) / |(z, 1)|).
  std::vector<std::vector<cplx>> k0_base;
  const auto rs = K.radial();
  if (rs) {
    constexpr int kRadial = 2048;
    for (const auto& iv : rs->intervals) {
      // Uniform in the polar angle t = atan(1/r) of the representative.
      const double t_hi = iv[0] == 0.0 ? 0.5 * kPi : std::atan(1.0 / iv[0]);
      const double t_lo = std::isinf(iv[1]) ? 0.0 : std::atan(1.0 / iv[1]);
      for (int k = 0; k < kRadial; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / (kRadial - 1);
        k0_base.push_back({std::cos(t), std::sin(t)});
      }
    }
  } else {
    k0_base = SectionCloud::from_atlas(cloud_atlas).restrict_to(K).points;
  }
  if (k0_base.empty()) throw Error(ErrorCode::EmptyRegion, "hull_radius", "set contains no sample point");
  const auto k0 = phased(k0_base, kPhases);
  out.k0_points = k0.size();
  out.sphere_points = sphere.size();

  for (int d = 1; d <= n_max; d *= 2) {
    const std::vector<HomPoly> basis = monomial_basis(1, d);
    double best = kInf;
    if (rs) {
      // Monomials |x0|^a |x1|^{d-a}, maximized over both clouds in logs.
      for (int a = 0; a <= d; ++a) {
        auto log_sup = [&](const std::vector<std::vector<cplx>>& pts) {
          double m = -kInf;
          for (const auto& p : pts) {
            const double l0 = a == 0 ? 0.0 : a * std::log(std::abs(p[0]));
            const double l1 = a == d ? 0.0 : (d - a) * std::log(std::abs(p[1]));
            m = std::max(m, l0 + l1);
          }
          return m;
        };
        best = std::min(best, log_sup(k0) - log_sup(sphere));
      }
      best = std::exp(best);
    } else {
      const Eigen::MatrixXcd VK = monomial_matrix(k0, basis);
      const Eigen::MatrixXcd VX = monomial_matrix(sphere_coarse, basis);
      Eigen::VectorXcd warm = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis.size()));
      double wbest = kInf;
      for (Eigen::Index b = 0; b < warm.size(); ++b) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(warm.size());
        e(b) = 1.0;
        const double v = evaluate_ratio(VK, VX, e).value;
        if (v < wbest) {
          wbest = v;
          warm = e;
        }
      }
      minimize_ratio(VK, VX, warm, best);
    }
    out.degrees.push_back(d);
    out.roots.push_back(std::pow(best, 1.0 / d));
    out.value = std::min(out.value, out.roots.back());
  }
  return out;
}

// ---------------------------------------------------------------------------

double mu_log_mean(const HomPoly& s, const DiscreteMeasure& mu) {
  const Atlas& a = mu.atlas;
  double sum = 0.0, mass = 0.0;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        const double w = mu.weights[c][g.index(i, j)];
        if (w == 0.0) continue;
        const double v = s.fs_norm(unit_rep(from_chart(g.node(i, j), c)));
        if (v == 0.0) return -kInf;
        sum += w * std::log(v);
        mass += w;
      }
    }
  }
  if (mass <= 0.0) throw Error(ErrorCode::NotProbability, "mu_log_mean", "measure has no mass");
  return sum / mass;
}

HomPoly mu_normalize(const HomPoly& s, const DiscreteMeasure& mu, double A) {
  const double m = mu_log_mean(s, mu);
  if (!std::isfinite(m)) throw Error(ErrorCode::NormalizationInfeasible, "mu_normalize", "log mean is -inf");
  return s.scaled(std::exp(s.degree() * A - m));
}

MuAResult mu_A_tcheb(const SetSpec& K, int N, const DiscreteMeasure& mu, double A) {
  if (N < 1) throw Error(ErrorCode::ConfigError, "mu_A_tcheb", "degree must be >= 1");
  const auto rs = K.radial();
  SectionCloud Kc;
  if (!rs) {
    Kc = SectionCloud::from_atlas(mu.atlas).restrict_to(K);
    if (Kc.points.empty()) throw Error(ErrorCode::EmptyRegion, "mu_A_tcheb", "set contains no sample point");
  } else if (rs->empty()) {
    throw Error(ErrorCode::EmptyRegion, "mu_A_tcheb", "empty set");
  }
  MuAResult out;
  double best = kInf;
  for (int a = 0; a <= N; ++a) {
    const HomPoly m = edge_monomial(1, N, a);
    const double mean = mu_log_mean(m, mu);
    if (!std::isfinite(mean)) continue;
    const double ls = rs ? log_sup_radial(a, N, *rs) : std::log(section_supnorm(m, Kc));
    const double v = N * A - mean + ls;
    if (v < best) {
      best = v;
      out.best = m.scaled(std::exp(N * A - mean));
    }
  }
  if (!std::isfinite(best)) {
    throw Error(ErrorCode::NormalizationInfeasible, "mu_A_tcheb", "every candidate has log mean -inf");
  }
  out.value = std::exp(best);
  out.root = std::exp(best / N);
  return out;
}

// ---------------------------------------------------------------------------

BergmanResult bergman_regularize(const QpshField& phi, int j, int j0) {
  if (!(j > j0 && j0 >= 0)) throw Error(ErrorCode::ConfigError, "bergman_regularize", "need j > j0 >= 0");
  const Atlas& a = phi.atlas();
  const int d = j + 1;
  auto clipped = [](double v) { return std::max(v, -30.0); };
  double m = kInf;
  for (int c = 0; c < 2; ++c) {
    for (double v : phi.chart(c)) m = std::min(m, clipped(v));
  }
  // Orthonormal basis for phi = 0: sqrt((j+1) C(j,k)) x0^k x1^{j-k}.
  std::vector<double> scale(static_cast<std::size_t>(d));
  for (int k = 0; k <= j; ++k) {
    scale[static_cast<std::size_t>(k)] =
        std::sqrt(std::exp(std::log(static_cast<double>(d)) + std::lgamma(j + 1.0) - std::lgamma(k + 1.0) -
                           std::lgamma(j - k + 1.0)));
  }
  auto basis_at = [&](const std::vector<cplx>& x, Eigen::VectorXcd& v) {
    for (int k = 0; k <= j; ++k) v(k) = scale[static_cast<std::size_t>(k)] * ipow(x[0], k) * ipow(x[1], j - k);
  };

  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(d, d);
  Eigen::VectorXcd v(d);
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    for (int jj = 0; jj < g.resolution; ++jj) {
      for (int i = 0; i < g.resolution; ++i) {
        const double vol = a.volume_weight(c, i, jj);
        if (vol == 0.0) continue;
        const double f = clipped(phi.at(c, i, jj));
        const double w = vol * std::exp(-2.0 * (j - j0) * (f - m));
        basis_at(unit_rep(from_chart(g.node(i, jj), c)), v);
        G.selfadjointView<Eigen::Lower>().rankUpdate(v, w);
      }
    }
  }
  G = G.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double lmax = lam.maxCoeff();
  if (!(lmax > 0.0)) throw Error(ErrorCode::GramSingular, "bergman_regularize", "Gram matrix vanishes");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index q = 0; q < lam.size(); ++q) {
    if (lam(q) > 1e-12 * lmax) keep.push_back(q);
  }
  BergmanResult out;
  out.rank = keep.size();
  out.min_eigen = lam(keep.front()) / lmax;
  Eigen::MatrixXcd U(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t q = 0; q < keep.size(); ++q) {
    U.col(static_cast<Eigen::Index>(q)) = es.eigenvectors().col(keep[q]) / std::sqrt(lam(keep[q]));
  }
  ChartArrays vals;
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    vals[c].resize(g.node_count());
    for (int jj = 0; jj < g.resolution; ++jj) {
      for (int i = 0; i < g.resolution; ++i) {
        basis_at(unit_rep(from_chart(g.node(i, jj), c)), v);
        const double B = (U.adjoint() * v).squaredNorm();
        vals[c][g.index(i, jj)] = std::log(B / d) / (2.0 * j) + static_cast<double>(j - j0) * m / j;
      }
    }
  }
  out.field = QpshField(a, vals, true);
  return out;
}

SandwichReport bergman_sandwich(const QpshField& phi, const std::vector<int>& degrees, int j0, double radius) {
  const Atlas& a = phi.atlas();
  SandwichReport rep;
  rep.radius = radius;
  rep.degrees = degrees;
  // Local sup of phi over chart discs of the given radius.
  ChartArrays local;
  const int reach = static_cast<int>(std::floor(radius / a.spacing()));
  for (int c = 0; c < 2; ++c) {
    const ChartGrid& g = a.charts[c];
    local[c].assign(g.node_count(), -kInf);
    for (int j = 0; j < g.resolution; ++j) {
      for (int i = 0; i < g.resolution; ++i) {
        double s = -kInf;
        for (int dj = -reach; dj <= reach; ++dj) {
          for (int di = -reach; di <= reach; ++di) {
            if (di * di + dj * dj > reach * reach) continue;
            const int ii = i + di, jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= g.resolution || jj >= g.resolution) continue;
            s = std::max(s, phi.at(c, ii, jj));
          }
        }
        local[c][g.index(i, j)] = s;
      }
    }
  }
  for (int j : degrees) {
    const BergmanResult b = bergman_regularize(phi, j, j0);
    const double q = 1.0 - static_cast<double>(j0) / j;
    double l1 = 0.0, lower = -kInf, upper = -kInf;
    for (int c = 0; c < 2; ++c) {
      const ChartGrid& g = a.charts[c];
      for (int jj = 0; jj < g.resolution; ++jj) {
        for (int i = 0; i < g.resolution; ++i) {
          if (!a.supported(c, i, jj)) continue;
          const std::size_t k = g.index(i, jj);
          const double f = phi.chart(c)[k];
          const double out = b.field.chart(c)[k];
          if (std::isfinite(f)) {
            l1 += a.volume_weight(c, i, jj) * std::abs(out - f);
            lower = std::max(lower, 2.0 * j * (q * f - out));
          }
          if (std::isfinite(local[c][k])) {
            upper = std::max(upper, j * (out - q * local[c][k]) + std::log(radius));
          }
        }
      }
    }
    rep.l1.push_back(l1);
    rep.lower_const.push_back(lower);
    rep.upper_const.push_back(upper);
  }
  rep.l1_monotone = true;
  for (std::size_t k = 1; k < rep.l1.size(); ++k) rep.l1_monotone = rep.l1_monotone && rep.l1[k] < rep.l1[k - 1];
  // The fitted constants must not blow up with j: compare every degree to
  // the first two.
  auto bounded = [](const std::vector<double>& v) {
    if (v.empty()) return true;
    double ref = std::abs(v[0]);
    if (v.size() > 1) ref = std::max(ref, std::abs(v[1]));
    for (double x : v) {
      if (!std::isfinite(x) || x > 2.0 * ref + 1.0) return false;
    }
    return true;
  };
  rep.lower_bounded = bounded(rep.lower_const);
  rep.upper_bounded = bounded(rep.upper_const);
  return rep;
}

}  // namespace kahlercap
