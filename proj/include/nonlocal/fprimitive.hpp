#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "nonlocal/quadrature.hpp"

namespace nonlocal {

// Angular weight p(t) = (1 + t^2)^{-(n+s)/2}.
inline double p_weight(double t, int n, double s) {
  return std::pow(1.0 + t * t, -0.5 * (n + s));
}

// Primitive F(t) = \int_0^t (1 + tau^2)^{-(n+s)/2} dtau.  Odd, increasing,
// bounded by F(inf).  Evaluations are table-backed (cubic Hermite with exact
// endpoint slopes p(t)); the tail uses the asymptotic expansion of
// \int_t^inf tau^{-(n+s)} (1 + tau^-2)^{-(n+s)/2} dtau.
class FPrimitive {
 public:
  FPrimitive(int n, double s) : n_(n), s_(s), h_(n + s) {
    if (!(h_ > 1.0))
      throw std::invalid_argument("FPrimitive: need n + s > 1");
    build();
  }

  int n() const { return n_; }
  double s() const { return s_; }

  // F(inf), evaluated through the tan substitution:
  // \int_0^{pi/2} cos^{n+s-2}(theta) dtheta.
  double infinity() const { return f_inf_; }

  double operator()(double t) const {
    double a = std::abs(t);
    double v;
    if (a >= t_max_) {
      v = f_inf_ - tail(a);
    } else {
      double u = a / dt_;
      size_t i = std::min((size_t)u, table_.size() - 2);
      double x = u - i;
      double f0 = table_[i], f1 = table_[i + 1];
      double d0 = dt_ * p_weight(i * dt_, n_, s_);
      double d1 = dt_ * p_weight((i + 1) * dt_, n_, s_);
      double x2 = x * x, x3 = x2 * x;
      v = (2 * x3 - 3 * x2 + 1) * f0 + (x3 - 2 * x2 + x) * d0 +
          (-2 * x3 + 3 * x2) * f1 + (x3 - x2) * d1;
    }
    return t < 0 ? -v : v;
  }

  // Shared cache keyed by (n, s).
  static const FPrimitive& get(int n, double s) {
    static std::map<std::pair<int, double>, FPrimitive> cache;
    auto key = std::make_pair(n, s);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, FPrimitive(n, s)).first;
    return it->second;
  }

 private:
  void build() {
    auto integrand = [this](double th) {
      return std::pow(std::cos(th), h_ - 2.0);
    };
    f_inf_ = integrate_1d(integrand, 0.0, 0.5 * M_PI, 1e-14).value;

    size_t m = (size_t)(t_max_ / dt_);
    table_.resize(m + 1);
    table_[0] = 0.0;
    auto p = [this](double t) { return p_weight(t, n_, s_); };
    for (size_t i = 1; i <= m; ++i)
      table_[i] = table_[i - 1] +
                  integrate_1d(p, (i - 1) * dt_, i * dt_, 1e-15).value;
  }

  // \int_t^inf p for t >= t_max_ via the binomial series in tau^-2.
  double tail(double t) const {
    double sum = 0.0, coef = 1.0;
    for (int k = 0; k < 10; ++k) {
      if (k > 0) coef *= (-0.5 * h_ - (k - 1)) / k;
      sum += coef * std::pow(t, -(h_ - 1.0) - 2.0 * k) / (h_ - 1.0 + 2.0 * k);
    }
    return sum;
  }

  int n_;
  double s_, h_;
  double f_inf_ = 0.0;
  double t_max_ = 8.0;
  double dt_ = 1.0 / 256.0;
  std::vector<double> table_;
};

}  // namespace nonlocal
