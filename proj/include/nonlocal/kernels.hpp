#pragma once

#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonlocal/quadrature.hpp"
#include "nonlocal/vec.hpp"
#include "nonlocal/window.hpp"

namespace nonlocal {

// Two conventions for the strength of the model kernel A / |w|^{n+sigma}:
// kPaper uses A = 2 - sigma (bounded, nonzero as sigma -> 2 after rescaling);
// kClassical uses the fractional-Laplacian constant c_{n,sigma}.  The factor
// is always explicit in the descriptor; nothing applies one silently.
enum class Normalization { kPaper, kClassical };

inline double classical_constant(int n, double sigma) {
  return sigma * std::pow(2.0, sigma - 1.0) * std::tgamma(0.5 * (n + sigma)) /
         (std::pow(M_PI, 0.5 * n) * std::tgamma(1.0 - 0.5 * sigma));
}

inline double normalization_factor(Normalization nz, int n, double sigma) {
  return nz == Normalization::kPaper ? (2.0 - sigma) : classical_constant(n, sigma);
}

// Kernel descriptor: pointwise values plus the structural constants that the
// certification checks are measured against.  The bounds encoded here are:
//   closeness   | |w|^{n+sigma} K(x,w)/(2-sigma) - a0(w) | <= eta   (|w| < r0)
//   a0 bounds     a0(w) >= c0,   |grad a0(w)| <= C0 / |w|
//   smoothness  | d^mu_x d^theta_w K | <= ck(|mu|+|theta|) |w|^{-n-sigma-|theta|}
//   pinching      lambda (2-sigma) <= |w|^{n+sigma} K <= Lambda (2-sigma)
struct KernelSpec {
  int n = 2;
  double sigma = 1.5;  // order, in (1, 2) for ambient kernels
  std::function<double(const Vec& x, const Vec& w)> eval;
  std::function<double(const Vec& w)> a0;
  double c0 = 1.0;
  double C0 = 1.0;
  double r0 = 1.0;
  double eta = 0.125;                    // must lie in (0, c0/4)
  std::function<double(int)> ck;         // smoothness constant per total order
  double lambda = 0.0, Lambda = 0.0;     // pinching constants
  Normalization normalization = Normalization::kPaper;
  bool x_dependent = false;
  bool radial_in_w = true;

  double operator()(const Vec& x, const Vec& w) const { return eval(x, w); }

  void validate() const {
    if (!(sigma > 0.0 && sigma < 2.0))
      throw std::invalid_argument("KernelSpec: sigma outside (0,2)");
    if (!(eta > 0.0 && eta < 0.25 * c0))
      throw std::invalid_argument("KernelSpec: eta outside (0, c0/4)");
    if (!(lambda > 0.0 && Lambda >= lambda))
      throw std::invalid_argument("KernelSpec: bad pinching constants");
  }
};

namespace detail {

// Entrywise bound constant for derivatives of A|w|^{-p} of total order m,
// with 1.5x headroom so that certification of the model kernels has margin.
inline std::function<double(int)> power_kernel_ck(double A, double p) {
  return [A, p](int m) {
    double c = A;
    for (int j = 0; j < m; ++j) c *= (p + 2.0 * j);
    return 1.5 * c;
  };
}

}  // namespace detail

inline KernelSpec make_fractional_kernel(int n, double sigma,
                                         Normalization nz = Normalization::kPaper) {
  KernelSpec K;
  K.n = n;
  K.sigma = sigma;
  K.normalization = nz;
  const double A = normalization_factor(nz, n, sigma);
  const double p = n + sigma;
  K.eval = [A, p](const Vec&, const Vec& w) { return A * std::pow(w.norm(), -p); };
  const double a0v = A / (2.0 - sigma);
  K.a0 = [a0v](const Vec&) { return a0v; };
  K.c0 = a0v;
  K.C0 = 1.0;
  K.r0 = 1.0;
  K.eta = 0.125 * a0v;
  K.ck = detail::power_kernel_ck(A, p);
  K.lambda = K.c0 - K.eta;
  K.Lambda = a0v + K.eta;
  K.x_dependent = false;
  K.radial_in_w = true;
  K.validate();
  return K;
}

// (2-sigma)(1 + amp sin x_1)/|w|^{n+sigma}: x-dependent but still within the
// closeness band of a0 = 1 as long as amp < 1/4.
inline KernelSpec make_sin_perturbed_kernel(int n, double sigma, double amp) {
  if (!(amp > 0.0 && amp < 0.25))
    throw std::invalid_argument("make_sin_perturbed_kernel: need 0 < amp < 1/4");
  KernelSpec K;
  K.n = n;
  K.sigma = sigma;
  const double A = 2.0 - sigma;
  const double p = n + sigma;
  K.eval = [A, p, amp](const Vec& x, const Vec& w) {
    return A * (1.0 + amp * std::sin(x[0])) * std::pow(w.norm(), -p);
  };
  K.a0 = [](const Vec&) { return 1.0; };
  K.c0 = 1.0;
  K.C0 = 1.0;
  K.r0 = 1.0;
  K.eta = amp;
  K.ck = detail::power_kernel_ck(A * (1.0 + amp), p);
  K.lambda = K.c0 - K.eta;
  K.Lambda = 1.0 + K.eta;
  K.x_dependent = true;
  K.radial_in_w = true;
  K.validate();
  return K;
}

// Kernel more singular than its declared order (exponent n + sigma + excess):
// a certification fixture that must fail the smoothness and closeness checks.
inline KernelSpec make_oversingular_kernel(int n, double sigma, double excess) {
  KernelSpec K = make_fractional_kernel(n, sigma);
  const double A = 2.0 - sigma;
  const double p = n + sigma + excess;
  K.eval = [A, p](const Vec&, const Vec& w) { return A * std::pow(w.norm(), -p); };
  return K;
}

// ---------------------------------------------------------------------------
// Mollification.
// ---------------------------------------------------------------------------

// Radial cutoff used as mollifier profile: 1 on B_{1/2}, 0 outside B_{3/4}.
inline double mollifier_profile(double r) { return plateau(r, 0.5, 0.75); }

// \int_{R^n} mollifier_profile(|y|) dy, cached per dimension.
inline double mollifier_mass(int n) {
  static std::map<int, double> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto rad = [n](double r) {
    return mollifier_profile(r) * std::pow(r, n - 1);
  };
  double m = sphere_measure(n) * integrate_1d(rad, 0.0, 0.75, 1e-14).value;
  cache[n] = m;
  return m;
}

struct MollifierConfig {
  double eps = 0.1;
  int conv_order = 10;  // Gauss order per axis in the hat convolutions
  // Optional far switch: beyond this |w| the convolved kernel is replaced by
  // the base kernel.  The relative difference is O((eps^2/|w|)^2); callers that
  // enable it must keep that below their own accuracy target.
  double exact_beyond = std::numeric_limits<double>::infinity();
};

namespace detail {

struct MollifyState {
  KernelSpec base;
  double eps, delta;  // delta = eps^2

  // Hat rule with weights folded in and normalized to sum exactly to one:
  // the discrete mollifying measure (even, supported in B_{3 delta/4}).
  struct HatNode {
    double w;
    Vec y;
  };
  std::vector<HatNode> nodes;
  std::map<double, double> radial_memo;
  std::map<std::vector<double>, double> point_memo;

  void build(int n, int conv_order) {
    double mass = 0.0;
    for (const auto& a : cube_rule(n, conv_order, 0.75 * delta)) {
      double hv = mollifier_profile(a.x.norm() / delta);
      if (hv <= 0.0) continue;
      nodes.push_back({a.w * hv, a.x});
      mass += a.w * hv;
    }
    for (auto& nd : nodes) nd.w /= mass;
  }

  // K * (hat x hat) at (x, w): smooth in both variables at scale delta.
  double hat_convolution(const Vec& x, const Vec& w) {
    if (!base.x_dependent) {
      if (base.radial_in_w) {
        double r = w.norm();
        auto it = radial_memo.find(r);
        if (it != radial_memo.end()) return it->second;
        Vec wc = Vec::zero(base.n);
        wc[0] = r;
        double v = convolve_w(x, wc);
        radial_memo.emplace(r, v);
        return v;
      }
      std::vector<double> key(w.c.begin(), w.c.begin() + w.dim);
      auto it = point_memo.find(key);
      if (it != point_memo.end()) return it->second;
      double v = convolve_w(x, w);
      point_memo.emplace(std::move(key), v);
      return v;
    }
    double v = 0;
    for (const auto& a : nodes) v += a.w * convolve_w(x - a.y, w);
    return v;
  }

  double convolve_w(const Vec& x, const Vec& w) const {
    double v = 0;
    for (const auto& b : nodes) v += b.w * base.eval(x, w - b.y);
    return v;
  }
};

}  // namespace detail

// Two-scale regularization: the kernel is replaced by the exact model kernel
// (2-sigma)/|w|^{n+sigma} inside |w| <= eps/2, by the (x,w)-convolution of the
// base kernel at scale eps^2 outside |w| >= 3 eps/4, and blended in between.
// The hat mollifier is normalized to unit mass, so the convolution preserves
// constants and the pointwise convolution error at fixed w is O(eps^4).
inline KernelSpec mollify_kernel(const KernelSpec& base, const MollifierConfig& cfg) {
  auto st = std::make_shared<detail::MollifyState>();
  st->base = base;
  st->eps = cfg.eps;
  st->delta = cfg.eps * cfg.eps;
  st->build(base.n, cfg.conv_order);

  KernelSpec K = base;
  const double A = 2.0 - base.sigma;
  const double p = base.n + base.sigma;
  const double eps = cfg.eps;
  const double far = cfg.exact_beyond;
  K.eval = [st, A, p, eps, far](const Vec& x, const Vec& w) {
    double r = w.norm();
    double g = mollifier_profile(r / eps);
    if (g == 1.0) return A * std::pow(r, -p);
    if (r >= far) return st->base.eval(x, w);
    double hatpart = (1.0 - g) * st->hat_convolution(x, w);
    if (g == 0.0) return hatpart;
    return g * A * std::pow(r, -p) + hatpart;
  };
  // Pinching survives mollification up to the averaging spread; constants are
  // declared at the worst tested scale (eps <= 0.25) so they do not depend on
  // the particular eps.
  const double spread = std::pow(1.0 - 0.75 * std::sqrt((double)base.n) * 0.25, -p);
  K.lambda = base.lambda / spread;
  K.Lambda = base.Lambda * spread;
  K.eta = std::min(0.24 * base.c0, base.eta * 1.5);
  K.validate();
  return K;
}

// ---------------------------------------------------------------------------
// Certification.
// ---------------------------------------------------------------------------

struct BoundCheck {
  std::string name;
  double worst_ratio = 0.0;  // measured / declared bound; pass iff <= 1
  bool pass = true;
};

struct CertificationReport {
  std::vector<BoundCheck> checks;
  bool pass = true;

  const BoundCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct CertConfig {
  int w_radii = 12;          // log-spaced radii in (r_min_factor * r0, r0)
  double r_min_factor = 1e-3;
  int directions = 8;        // directions per radius
  int x_samples = 5;         // sample points in B_1 (x grid)
  double ratio_tolerance = 1.0;
};

namespace detail {

inline std::vector<Vec> cert_x_points(int n, int count) {
  std::vector<Vec> pts;
  pts.push_back(Vec::zero(n));
  for (int i = 1; i < count; ++i) {
    Vec v = 0.9 * unit(halton_cube(i + 3, n));
    double r = 0.3 + 0.6 * radical_inverse(i + 1, 2);
    pts.push_back(r * v);
  }
  return pts;
}

inline std::vector<Vec> cert_directions(int n, int count) {
  std::vector<Vec> dirs;
  if (n == 1) {
    dirs.push_back(Vec::scalar(1.0));
    dirs.push_back(Vec::scalar(-1.0));
    return dirs;
  }
  if (n == 3) {
    dirs.push_back(Vec(1.0, 0.0, 0.0));
    dirs.push_back(Vec(0.0, 1.0, 0.0));
    dirs.push_back(Vec(0.0, 0.0, 1.0));
  }
  for (int j = 0; (int)dirs.size() < count; ++j) {
    if (n == 2) {
      double th = j * 2.0 * M_PI / count;  // axis-aligned first: extremal for radial kernels
      dirs.push_back(Vec(std::cos(th), std::sin(th)));
    } else {
      dirs.push_back(unit(halton_cube(j + 5, n)));
    }
  }
  return dirs;
}

// Nested centered 4th-order mixed partial; vars[i] selects the variable
// (0..n-1: x-coordinate, n..2n-1: w-coordinate).
inline double mixed_partial(const KernelSpec& K, const Vec& x, const Vec& w,
                            const std::vector<int>& vars, size_t level,
                            double hx, double hw) {
  if (level == vars.size()) return K(x, w);
  int v = vars[level];
  bool in_x = v < K.n;
  int axis = in_x ? v : v - K.n;
  double h = in_x ? hx : hw;
  auto at = [&](double shift) {
    Vec x2 = x, w2 = w;
    if (in_x)
      x2[axis] += shift;
    else
      w2[axis] += shift;
    return mixed_partial(K, x2, w2, vars, level + 1, hx, hw);
  };
  return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
}

// All distinct multisets of m variables out of 2n.
inline void enumerate_multisets(int nvars, int m, std::vector<std::vector<int>>& out) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if ((int)cur.size() == m) {
      out.push_back(cur);
      return;
    }
    for (int v = start; v < nvars; ++v) {
      cur.push_back(v);
      rec(v);
      cur.pop_back();
    }
  };
  rec(0);
}

}  // namespace detail

// Measures every declared bound of the descriptor on a deterministic grid and
// reports worst ratios; failures are reported, never thrown.
inline CertificationReport verify_structural_bounds(const KernelSpec& K, int k,
                                                    const CertConfig& cfg = {}) {
  CertificationReport rep;
  const double A = 2.0 - K.sigma;
  const double p = K.n + K.sigma;
  auto xs = detail::cert_x_points(K.n, cfg.x_samples);
  auto dirs = detail::cert_directions(K.n, cfg.directions);
  std::vector<double> radii;
  for (int j = 0; j < cfg.w_radii; ++j)
    radii.push_back(K.r0 * std::pow(cfg.r_min_factor, (j + 0.5) / cfg.w_radii));

  BoundCheck close{"closeness", 0.0, true};
  BoundCheck a0lo{"a0-lower-bound", 0.0, true};
  BoundCheck a0gr{"a0-gradient", 0.0, true};
  BoundCheck pinch{"pinching", 0.0, true};
  for (double r : radii) {
    for (const auto& d : dirs) {
      Vec w = r * d;
      double a0v = K.a0(w);
      a0lo.worst_ratio = std::max(a0lo.worst_ratio, K.c0 / a0v);
      // |grad a0| via 4th-order FD
      Vec g(w.dim);
      for (int i = 0; i < w.dim; ++i) {
        double h = 1e-4 * r;
        Vec e = Vec::zero(w.dim);
        e[i] = h;
        g[i] = (-K.a0(w + 2.0 * e) + 8.0 * K.a0(w + e) - 8.0 * K.a0(w - e) +
                K.a0(w - 2.0 * e)) /
               (12.0 * h);
      }
      a0gr.worst_ratio = std::max(a0gr.worst_ratio, g.norm() * r / K.C0);
      for (const auto& x : xs) {
        double quot = std::pow(r, p) * K(x, w) / A;
        close.worst_ratio =
            std::max(close.worst_ratio, std::abs(quot - a0v) / K.eta);
        pinch.worst_ratio = std::max(
            pinch.worst_ratio, std::max(K.lambda / quot, quot / K.Lambda));
      }
    }
  }

  rep.checks.push_back(close);
  rep.checks.push_back(a0lo);
  rep.checks.push_back(a0gr);
  rep.checks.push_back(pinch);

  // Smoothness: mixed x/w derivatives of total order m <= k+1.
  for (int m = 1; m <= k + 1; ++m) {
    BoundCheck der{"derivative-bound-order-" + std::to_string(m), 0.0, true};
    std::vector<std::vector<int>> multisets;
    detail::enumerate_multisets(2 * K.n, m, multisets);
    double step = (m == 1 ? 1e-3 : m == 2 ? 4e-3 : 1e-2);
    for (double r : radii) {
      if (r < 1e-2 * K.r0 && m >= 3) continue;  // roundoff floor for deep nests
      for (const auto& d : dirs) {
        Vec w = r * d;
        for (const auto& x : xs) {
          for (const auto& vars : multisets) {
            int order_w = 0;
            for (int v : vars)
              if (v >= K.n) ++order_w;
            double val = detail::mixed_partial(K, x, w, vars, 0, step, step * r);
            double bound = K.ck(m) * std::pow(r, -(p + order_w));
            der.worst_ratio = std::max(der.worst_ratio, std::abs(val) / bound);
          }
        }
      }
    }
    rep.checks.push_back(der);
  }

  for (auto& c : rep.checks) {
    c.pass = c.worst_ratio <= cfg.ratio_tolerance;
    rep.pass = rep.pass && c.pass;
  }
  return rep;
}

}  // namespace nonlocal
