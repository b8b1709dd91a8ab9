#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nonlocal/vec.hpp"

namespace nonlocal {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // absolute error estimate / bound
};

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1, 1], computed by Newton iteration and cached.
// ---------------------------------------------------------------------------

struct GLRule {
  std::vector<double> x, w;
};

inline const GLRule& gauss_legendre(int m) {
  static std::map<int, GLRule> cache;
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(m);
  r.w.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double dp = 0;
    for (int it2 = 0; it2 < 100; ++it2) {
      // Legendre P_m(x) and derivative by recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= m; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.x[i] = -x;
    r.x[m - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.w[i] = w;
    r.w[m - 1 - i] = w;
  }
  return cache.emplace(m, std::move(r)).first->second;
}

// ---------------------------------------------------------------------------
// Adaptive 1-D quadrature, Gauss-Kronrod 15(7) with bisection.
// ---------------------------------------------------------------------------

namespace detail {

// Standard GK 15-7 constants (positive half).
constexpr double kGK15X[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
constexpr double kGK15W[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
constexpr double kG7W[4] = {0.129484966168870, 0.279705391489277,
                            0.381830050505119, 0.417959183673469};

template <class F>
inline void gk15(const F& f, double a, double b, double& kron, double& err) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fk[15];
  for (int i = 0; i < 7; ++i) {
    fk[i] = f(c - h * kGK15X[i]);
    fk[14 - i] = f(c + h * kGK15X[i]);
  }
  fk[7] = f(c);
  double sk = kGK15W[7] * fk[7];
  for (int i = 0; i < 7; ++i) sk += kGK15W[i] * (fk[i] + fk[14 - i]);
  double sg = kG7W[3] * fk[7];
  for (int i = 0; i < 3; ++i) sg += kG7W[i] * (fk[2 * i + 1] + fk[13 - 2 * i]);
  kron = sk * h;
  err = std::abs((sk - sg) * h);
  err = std::min(err, std::pow(200.0 * err, 1.5));
}

template <class F>
inline void adapt_rec(const F& f, double a, double b, double tol, int depth,
                      QuadResult& out) {
  double v, e;
  gk15(f, a, b, v, e);
  if (e <= tol || depth <= 0 || (b - a) < 1e-15 * (std::abs(a) + 1.0)) {
    out.value += v;
    out.error += e;
    return;
  }
  double m = 0.5 * (a + b);
  adapt_rec(f, a, m, 0.5 * tol, depth - 1, out);
  adapt_rec(f, m, b, 0.5 * tol, depth - 1, out);
}

}  // namespace detail

// Absolute-tolerance adaptive integral of f over [a, b] (a > b allowed:
// value is signed accordingly).
template <class F>
inline QuadResult integrate_1d(const F& f, double a, double b,
                               double abs_tol = 1e-12, int max_depth = 48) {
  QuadResult out;
  if (a == b) return out;
  double sgn = 1.0;
  if (a > b) {
    std::swap(a, b);
    sgn = -1.0;
  }
  detail::adapt_rec(f, a, b, abs_tol, max_depth, out);
  out.value *= sgn;
  return out;
}

// ---------------------------------------------------------------------------
// Sphere rules with explicit antipodal pairing.
// ---------------------------------------------------------------------------

inline double sphere_measure(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: throw std::invalid_argument("sphere_measure: dim must be 1..3");
  }
}

struct SphereNode {
  Vec u;
  double w;
};

// Nodes covering half of S^{d-1}; evaluating f(u) + f(-u) with these weights
// approximates the full sphere integral.  Offset grids keep nodes away from
// coordinate hyperplanes (no node ever lies on a typical set boundary).
inline std::vector<SphereNode> half_sphere_rule(int d, int order) {
  std::vector<SphereNode> out;
  if (d == 1) {
    out.push_back({Vec::scalar(1.0), 1.0});
    return out;
  }
  if (d == 2) {
    int n = std::max(4, order + (order % 2));
    for (int j = 0; j < n / 2; ++j) {
      double th = (j + 0.5) * 2.0 * M_PI / n;
      out.push_back({Vec(std::cos(th), std::sin(th)), 2.0 * M_PI / n});
    }
    return out;
  }
  if (d == 3) {
    int nz = std::max(4, order + (order % 2));
    int nphi = 2 * nz;
    const GLRule& gl = gauss_legendre(nz);
    for (int i = 0; i < nz; ++i) {
      double z = gl.x[i], rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (int k = 0; k < nphi / 2; ++k) {
        double phi = (k + 0.5) * 2.0 * M_PI / nphi;
        out.push_back({Vec(rho * std::cos(phi), rho * std::sin(phi), z),
                       gl.w[i] * 2.0 * M_PI / nphi});
      }
    }
    return out;
  }
  throw std::invalid_argument("half_sphere_rule: dim must be 1..3");
}

// ---------------------------------------------------------------------------
// Annulus quadrature: log-spaced adaptive radial panels x angular rule.
// ---------------------------------------------------------------------------

struct AnnulusConfig {
  int dim = 2;
  int angular_order = 16;
  int radial_order = 6;
  double panels_per_decade = 3.0;
  double tol = 1e-9;
  int max_refine = 4000;
};

namespace detail {

// paired(r, u) must return f(r u) + f(-r u).
template <class G>
inline double shell_value(const AnnulusConfig& cfg,
                          const std::vector<SphereNode>& sph, double r,
                          const G& paired) {
  double s = 0;
  for (const auto& n : sph) s += n.w * paired(r, n.u);
  return s * std::pow(r, cfg.dim - 1);
}

template <class G>
inline double panel_value(const AnnulusConfig& cfg,
                          const std::vector<SphereNode>& sph, double a,
                          double b, const G& paired) {
  const GLRule& gl = gauss_legendre(cfg.radial_order);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0;
  for (size_t i = 0; i < gl.x.size(); ++i)
    s += gl.w[i] * shell_value(cfg, sph, c + h * gl.x[i], paired);
  return s * h;
}

struct Panel {
  double a, b, value, err;
};

template <class G>
inline Panel make_panel(const AnnulusConfig& cfg,
                        const std::vector<SphereNode>& sph, double a, double b,
                        const G& paired) {
  double whole = panel_value(cfg, sph, a, b, paired);
  double m = 0.5 * (a + b);
  double split = panel_value(cfg, sph, a, m, paired) +
                 panel_value(cfg, sph, m, b, paired);
  return {a, b, split, std::abs(split - whole)};
}

}  // namespace detail

// Integral over the annulus r_lo <= |w| <= r_hi of the paired integrand:
// paired(r, u) == f(r u) + f(-r u).  Exact antipodal cancellation in `paired`
// carries through to the result (a pair summing to zero contributes nothing).
template <class G>
inline QuadResult integrate_annulus_paired(const AnnulusConfig& cfg,
                                           double r_lo, double r_hi,
                                           const G& paired) {
  if (!(r_lo > 0) || !(r_hi > r_lo))
    throw std::invalid_argument("integrate_annulus_paired: need 0 < r_lo < r_hi");
  auto sph = half_sphere_rule(cfg.dim, cfg.angular_order);
  int np = std::max(1, (int)std::ceil(cfg.panels_per_decade *
                                      std::log10(r_hi / r_lo)));
  std::vector<detail::Panel> panels;
  panels.reserve(np + cfg.max_refine);
  double lg0 = std::log(r_lo), dlg = (std::log(r_hi) - lg0) / np;
  for (int i = 0; i < np; ++i)
    panels.push_back(detail::make_panel(cfg, sph, std::exp(lg0 + i * dlg),
                                        std::exp(lg0 + (i + 1) * dlg), paired));
  for (int it = 0; it < cfg.max_refine; ++it) {
    double tot_err = 0;
    size_t worst = 0;
    for (size_t i = 0; i < panels.size(); ++i) {
      tot_err += panels[i].err;
      if (panels[i].err > panels[worst].err) worst = i;
    }
    if (tot_err <= cfg.tol) break;
    detail::Panel p = panels[worst];
    if ((p.b - p.a) < 1e-14 * p.b) break;
    double m = 0.5 * (p.a + p.b);
    panels[worst] = detail::make_panel(cfg, sph, p.a, m, paired);
    panels.push_back(detail::make_panel(cfg, sph, m, p.b, paired));
  }
  QuadResult out;
  std::sort(panels.begin(), panels.end(),
            [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    out.value += p.value;
    out.error += p.err;
  }
  return out;
}

// Convenience wrapper for a plain (unpaired) integrand.
template <class F>
inline QuadResult integrate_annulus(const AnnulusConfig& cfg, double r_lo,
                                    double r_hi, const F& f) {
  return integrate_annulus_paired(
      cfg, r_lo, r_hi,
      [&f](double r, const Vec& u) { return f(r * u) + f(-1.0 * (r * u)); });
}

// ---------------------------------------------------------------------------
// Tensor-product Gauss rule on the cube [-h, h]^d (mollifier convolutions).
// ---------------------------------------------------------------------------

struct CubeNode {
  Vec x;
  double w;
};

inline std::vector<CubeNode> cube_rule(int d, int order, double h) {
  const GLRule& gl = gauss_legendre(order);
  std::vector<CubeNode> out;
  std::vector<int> idx(d, 0);
  for (;;) {
    CubeNode n;
    n.x = Vec(d);
    n.w = 1.0;
    for (int i = 0; i < d; ++i) {
      n.x[i] = h * gl.x[idx[i]];
      n.w *= h * gl.w[idx[i]];
    }
    out.push_back(n);
    int i = 0;
    while (i < d && ++idx[i] == order) idx[i++] = 0;
    if (i == d) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Halton low-discrepancy sequence (deterministic sampling for estimators).
// ---------------------------------------------------------------------------

inline double radical_inverse(unsigned i, unsigned base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * (i % base);
    i /= base;
  }
  return r;
}

// i-th Halton point in the cube [-1, 1]^d.
inline Vec halton_cube(unsigned i, int d) {
  static const unsigned bases[4] = {2, 3, 5, 7};
  Vec v(d);
  for (int k = 0; k < d; ++k)
    v[k] = 2.0 * radical_inverse(i + 1, bases[k]) - 1.0;
  return v;
}

}  // namespace nonlocal
