#pragma once

#include <cmath>
#include <stdexcept>

#include "nonlocal/vec.hpp"

namespace nonlocal {

// C-infinity transition: 0 for t <= 0, 1 for t >= 1, strictly monotone
// between.  Built from the standard exp(-1/t) gluing; every cutoff in the
// library derives from this one profile.
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

// Even profile: 1 for |t| <= 1/4, 0 for |t| >= 1/2.
inline double phi_profile(double t) { return smooth_step(2.0 - 4.0 * std::abs(t)); }

// Radial plateau: 1 for r <= r_plateau, 0 for r >= r_support.
inline double plateau(double r, double r_plateau, double r_support) {
  return smooth_step((r_support - r) / (r_support - r_plateau));
}

// Window pair for the graph reformulation: zeta_R acts on the horizontal
// variable, eta_R on the full ambient variable.  eta(w) = zeta(w') *
// phi(|w_n| / R) with the same profile phi.
struct GraphWindow {
  double R = 1.0;

  explicit GraphWindow(double R_) : R(R_) {
    if (!(R > 0)) throw std::invalid_argument("GraphWindow: R must be positive");
  }

  // zeta_R: 1 on |w'| <= R/4, 0 outside |w'| >= R/2.
  double zeta(double r_horizontal) const { return phi_profile(r_horizontal / R); }
  double zeta(const Vec& wp) const { return zeta(wp.norm()); }

  // eta_R: 1 on the box K_{R/4}, 0 outside K_{R/2}.
  double eta(const Vec& w) const {
    return zeta(w.prefix().norm()) * phi_profile(w.last() / R);
  }
};

}  // namespace nonlocal
