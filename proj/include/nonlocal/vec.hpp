#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

namespace nonlocal {

// Small fixed-capacity point in R^d.  All computations in this library live in
// dimension <= 3 (ambient sets) or <= 2 (graph variables), so a capped value
// type avoids any allocation in quadrature inner loops.
struct Vec {
  static constexpr int kMaxDim = 4;

  std::array<double, kMaxDim> c{};
  int dim = 0;

  Vec() = default;
  explicit Vec(int d) : dim(d) { assert(d >= 0 && d <= kMaxDim); }
  Vec(double x, double y) : dim(2) { c[0] = x; c[1] = y; }
  Vec(double x, double y, double z) : dim(3) { c[0] = x; c[1] = y; c[2] = z; }

  static Vec scalar(double x) {
    Vec v(1);
    v.c[0] = x;
    return v;
  }
  static Vec zero(int d) { return Vec(d); }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double t) {
    for (int i = 0; i < dim; ++i) c[i] *= t;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double t, Vec a) { return a *= t; }
  friend Vec operator-(Vec a) {
    for (int i = 0; i < a.dim; ++i) a.c[i] = -a.c[i];
    return a;
  }

  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += c[i] * o.c[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }

  // First d-1 coordinates (the "horizontal" part of an ambient point).
  Vec prefix() const {
    Vec v(dim - 1);
    for (int i = 0; i < dim - 1; ++i) v.c[i] = c[i];
    return v;
  }
  double last() const { return c[dim - 1]; }

  // (x', t) in R^{d+1}.
  Vec appended(double t) const {
    Vec v(dim + 1);
    for (int i = 0; i < dim; ++i) v.c[i] = c[i];
    v.c[dim] = t;
    return v;
  }
};

inline Vec unit(const Vec& v) {
  Vec u = v;
  double n = v.norm();
  if (n > 0) u *= 1.0 / n;
  return u;
}

}  // namespace nonlocal
