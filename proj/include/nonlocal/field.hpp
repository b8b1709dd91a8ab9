#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "nonlocal/vec.hpp"
#include "nonlocal/window.hpp"

namespace nonlocal {

// Scalar function on R^dim with optional analytic derivatives and metadata.
// grad/hess may be empty; consumers that need them fall back to finite
// differences (fd_gradient / fd_hessian) or raise if exactness is required.
struct ScalarField {
  int dim = 1;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad;                    // optional
  std::function<void(const Vec&, double*)> hess;          // optional, row-major dim*dim
  double support_radius = std::numeric_limits<double>::infinity();
  double holder_beta = 1.0;   // C^{1,beta} regularity of the field
  double sup_bound = std::numeric_limits<double>::infinity();
  double c2_bound = std::numeric_limits<double>::infinity();  // |D^2 u| bound

  double operator()(const Vec& x) const { return eval(x); }
  bool has_grad() const { return (bool)grad; }
  bool has_hess() const { return (bool)hess; }
};

// Second difference u(x+w) + u(x-w) - 2 u(x); even in w, vanishes on affine
// functions.
inline double second_difference(const ScalarField& u, const Vec& x, const Vec& w) {
  return u(x + w) + u(x - w) - 2.0 * u(x);
}

struct SecondDifference {
  ScalarField base;
  double operator()(const Vec& x, const Vec& w) const {
    return second_difference(base, x, w);
  }
};

// First-order Taylor remainder at a shifted point:
// U(x', w') = u(x' - w') - u(x') + grad u(x') . w'.
// Size O(|w'|^{1+beta}) for u in C^{1,beta}.
inline double u_remainder(const ScalarField& u, const Vec& xp, const Vec& wp) {
  if (!u.has_grad())
    throw std::invalid_argument("u_remainder: field lacks a gradient");
  return u(xp - wp) - u(xp) + u.grad(xp).dot(wp);
}

// ---------------------------------------------------------------------------
// Finite-difference fallbacks (4th-order centered stencils).
// ---------------------------------------------------------------------------

inline Vec fd_gradient(const ScalarField& u, const Vec& x, double h = 1e-3) {
  Vec g(x.dim);
  for (int i = 0; i < x.dim; ++i) {
    Vec e = Vec::zero(x.dim);
    e[i] = h;
    g[i] = (-u(x + 2.0 * e) + 8.0 * u(x + e) - 8.0 * u(x - e) + u(x - 2.0 * e)) /
           (12.0 * h);
  }
  return g;
}

inline void fd_hessian(const ScalarField& u, const Vec& x, double* H,
                       double h = 1e-3) {
  const int d = x.dim;
  for (int i = 0; i < d; ++i) {
    Vec ei = Vec::zero(d);
    ei[i] = h;
    H[i * d + i] = (-u(x + 2.0 * ei) + 16.0 * u(x + ei) - 30.0 * u(x) +
                    16.0 * u(x - ei) - u(x - 2.0 * ei)) /
                   (12.0 * h * h);
    for (int j = i + 1; j < d; ++j) {
      Vec ej = Vec::zero(d);
      ej[j] = h;
      double v = (u(x + ei + ej) - u(x + ei - ej) - u(x - ei + ej) +
                  u(x - ei - ej)) /
                 (4.0 * h * h);
      H[i * d + j] = H[j * d + i] = v;
    }
  }
}

inline Vec field_gradient(const ScalarField& u, const Vec& x) {
  return u.has_grad() ? u.grad(x) : fd_gradient(u, x);
}

inline void field_hessian(const ScalarField& u, const Vec& x, double* H) {
  if (u.has_hess())
    u.hess(x, H);
  else
    fd_hessian(u, x, H);
}

// ---------------------------------------------------------------------------
// Field library.
// ---------------------------------------------------------------------------

inline ScalarField constant_field(int dim, double c) {
  ScalarField f;
  f.dim = dim;
  f.eval = [c](const Vec&) { return c; };
  f.grad = [dim](const Vec&) { return Vec::zero(dim); };
  f.hess = [dim](const Vec&, double* H) {
    for (int i = 0; i < dim * dim; ++i) H[i] = 0;
  };
  f.sup_bound = std::abs(c);
  f.c2_bound = 0;
  return f;
}

// a . x + b
inline ScalarField affine_field(Vec a, double b) {
  ScalarField f;
  int dim = a.dim;
  f.dim = dim;
  f.eval = [a, b](const Vec& x) { return a.dot(x) + b; };
  f.grad = [a](const Vec&) { return a; };
  f.hess = [dim](const Vec&, double* H) {
    for (int i = 0; i < dim * dim; ++i) H[i] = 0;
  };
  f.c2_bound = 0;
  return f;
}

// A exp(-|x - x0|^2 / (2 lambda^2))
inline ScalarField gaussian_field(int dim, double A, double lambda,
                                  Vec x0 = Vec()) {
  if (x0.dim == 0) x0 = Vec::zero(dim);
  ScalarField f;
  f.dim = dim;
  double l2 = lambda * lambda;
  f.eval = [A, l2, x0](const Vec& x) {
    return A * std::exp(-0.5 * (x - x0).norm2() / l2);
  };
  f.grad = [A, l2, x0](const Vec& x) {
    Vec d = x - x0;
    return (-A * std::exp(-0.5 * d.norm2() / l2) / l2) * d;
  };
  f.hess = [A, l2, x0, dim](const Vec& x, double* H) {
    Vec d = x - x0;
    double e = A * std::exp(-0.5 * d.norm2() / l2);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j)
        H[i * dim + j] = e * (d[i] * d[j] / (l2 * l2) - (i == j ? 1.0 / l2 : 0.0));
  };
  f.sup_bound = std::abs(A);
  f.c2_bound = std::abs(A) / l2;  // |D^2| <= A/l^2 at the center, dominant
  return f;
}

// |x|^2 (exact second difference 2|w|^2).
inline ScalarField quadratic_field(int dim) {
  ScalarField f;
  f.dim = dim;
  f.eval = [](const Vec& x) { return x.norm2(); };
  f.grad = [](const Vec& x) { return 2.0 * x; };
  f.hess = [dim](const Vec&, double* H) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) H[i * dim + j] = (i == j) ? 2.0 : 0.0;
  };
  f.c2_bound = 2.0;
  return f;
}

inline ScalarField cosine_field(int dim) {
  ScalarField f;
  f.dim = dim;
  f.eval = [](const Vec& x) { return std::cos(x[0]); };
  f.grad = [dim](const Vec& x) {
    Vec g = Vec::zero(dim);
    g[0] = -std::sin(x[0]);
    return g;
  };
  f.sup_bound = 1.0;
  f.c2_bound = 1.0;
  return f;
}

// plateau(|x|) * |x|^{1+beta}: C^{1,beta} at the origin, smooth elsewhere,
// supported in |x| <= r_support.
inline ScalarField power_bump_field(int dim, double beta, double r_plateau,
                                    double r_support) {
  ScalarField f;
  f.dim = dim;
  f.holder_beta = beta;
  f.support_radius = r_support;
  double e = 1.0 + beta;
  f.eval = [e, r_plateau, r_support](const Vec& x) {
    double r = x.norm();
    return plateau(r, r_plateau, r_support) * std::pow(r, e);
  };
  f.grad = [e, r_plateau, r_support, dim](const Vec& x) {
    double r = x.norm();
    if (r == 0.0) return Vec::zero(dim);
    double cut = plateau(r, r_plateau, r_support);
    double h = 1e-7 * std::max(r, 1e-3);
    double dcut = (plateau(r + h, r_plateau, r_support) -
                   plateau(r - h, r_plateau, r_support)) /
                  (2 * h);
    double d = cut * e * std::pow(r, e - 1.0) + dcut * std::pow(r, e);
    return (d / r) * x;
  };
  f.sup_bound = std::pow(r_support, e);
  return f;
}

}  // namespace nonlocal
