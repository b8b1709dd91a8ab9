#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "nonlocal/field.hpp"
#include "nonlocal/kernels.hpp"
#include "nonlocal/operator.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

// Dirichlet problem for the integral operator on the ball B_{domain_radius}:
//   int ( u(x+w) + u(x-w) - 2 u(x) ) K_eps(x, w) dw = f_eps(x)  inside,
//   u = exterior                                                outside.
// Discretized by nodal collocation on a uniform lattice over the bounding box
// [-box_half, box_half]^n; lattice nodes with |x| >= domain_radius carry the
// exterior data, points beyond the box evaluate it directly.
struct DirichletProblem {
  KernelSpec K_eps;       // mollified kernel; must be radial in w, x-free
  ScalarField f_eps;      // right side on the ball
  ScalarField exterior;   // data on the complement of the ball
  double domain_radius = 0.75;
  double box_half = 1.0;
  double h = 1.0 / 16.0;  // lattice spacing; must divide the box side
  QuadratureConfig quad;  // rho_in / rho_out overrides and rule orders
  double far_radius = 0.0;  // 0: derived so the dropped tail is below 1e-8

  void validate() const {
    K_eps.validate();
    if (K_eps.x_dependent || !K_eps.radial_in_w)
      throw std::invalid_argument(
          "DirichletProblem: assembly needs a kernel radial in w and "
          "independent of x");
    if (K_eps.n < 1 || K_eps.n > 3)
      throw std::invalid_argument("DirichletProblem: dim must be 1..3");
    if (!f_eps.eval || !exterior.eval)
      throw std::invalid_argument(
          "DirichletProblem: right side and exterior data must be set");
    if (f_eps.dim != K_eps.n || exterior.dim != K_eps.n)
      throw std::invalid_argument("DirichletProblem: dimension mismatch");
    if (!(domain_radius > 0.0))
      throw std::invalid_argument("DirichletProblem: radius must be positive");
    if (!(h > 0.0) || !(h < 0.5 * domain_radius))
      throw std::invalid_argument(
          "DirichletProblem: spacing must resolve the ball");
    if (!(box_half >= domain_radius + h))
      throw std::invalid_argument(
          "DirichletProblem: the box must hold a layer of data nodes around "
          "the ball");
    double m = 2.0 * box_half / h;
    if (std::abs(m - std::round(m)) > 1e-9)
      throw std::invalid_argument(
          "DirichletProblem: spacing must divide the box side");
  }
};

// Nodal values on the lattice together with the rule that extends them: the
// multilinear interpolant inside the box, the exterior data beyond it.
struct LatticeSolution {
  int n = 0;
  double box_half = 0.0, h = 0.0, domain_radius = 0.0;
  int axis_nodes = 0;
  std::vector<double> values;         // axis_nodes^n, row-major
  std::vector<std::uint8_t> solved;   // 1 where the node was an unknown
  std::function<double(const Vec&)> outside;

  int total_nodes() const {
    int t = 1;
    for (int a = 0; a < n; ++a) t *= axis_nodes;
    return t;
  }
  Vec node(int idx) const {
    Vec x = Vec::zero(n);
    for (int a = 0; a < n; ++a) {
      x[a] = -box_half + (idx % axis_nodes) * h;
      idx /= axis_nodes;
    }
    return x;
  }
  bool in_box(const Vec& x) const {
    for (int a = 0; a < n; ++a)
      if (std::abs(x[a]) > box_half) return false;
    return true;
  }

  // Multilinear hat weights of the cell around x; returns the corner count.
  int cell(const Vec& x, int* idx, double* wt) const {
    int base[3] = {0, 0, 0};
    double th[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
      double t = (x[a] + box_half) / h;
      int i = std::clamp((int)std::floor(t), 0, axis_nodes - 2);
      base[a] = i;
      th[a] = std::clamp(t - i, 0.0, 1.0);
    }
    int corners = 1 << n, stride[3] = {1, axis_nodes, axis_nodes * axis_nodes};
    for (int c = 0; c < corners; ++c) {
      int flat = 0;
      double w = 1.0;
      for (int a = 0; a < n; ++a) {
        int bit = (c >> a) & 1;
        flat += (base[a] + bit) * stride[a];
        w *= bit ? th[a] : 1.0 - th[a];
      }
      idx[c] = flat;
      wt[c] = w;
    }
    return corners;
  }

  double operator()(const Vec& x) const {
    if (!in_box(x)) return outside(x);
    int idx[8];
    double wt[8];
    int c = cell(x, idx, wt);
    double v = 0.0;
    for (int i = 0; i < c; ++i) v += wt[i] * values[idx[i]];
    return v;
  }

  ScalarField as_field() const {
    auto self = std::make_shared<LatticeSolution>(*this);
    ScalarField f;
    f.dim = n;
    f.eval = [self](const Vec& x) { return (*self)(x); };
    return f;
  }
};

struct SolveDiagnostics {
  int unknowns = 0;
  double residual_inf = 0.0;        // |A z - b|_inf after the solve
  double row_sum_worst = 0.0;       // worst row on all-ones data; ~ dropped tail
  double offdiag_min = 0.0;         // most negative coupling weight
  double diag_margin = 0.0;         // min_i (-a_ii - sum_{j!=i} |a_ij|)
  double condition_estimate = 0.0;  // 1-norm, from the LU factors
  double tail_truncation = 0.0;     // operator mass beyond the far radius
  bool monotone = false;            // positive couplings, dominant diagonal
};

struct DirichletSolution {
  LatticeSolution lattice;
  SolveDiagnostics diagnostics;
  ScalarField field;
};

namespace detail {

// Radial profile k(r) = K(0, r e1) of an x-free kernel, memoized so the fixed
// rule radii are priced once across all rows.
struct RadialProfile {
  const KernelSpec* K;
  mutable std::map<double, double> memo;

  double operator()(double r) const {
    auto it = memo.find(r);
    if (it != memo.end()) return it->second;
    Vec w = Vec::zero(K->n);
    w[0] = r;
    double v = K->eval(Vec::zero(K->n), w);
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::runtime_error("solve_dirichlet: kernel not positive at r=" +
                               std::to_string(r));
    memo.emplace(r, v);
    return v;
  }
};

// Fixed product rule on the shell a <= |w| <= b: log-spaced Gauss panels in r
// against a half-sphere rule; every node stands for the antipodal pair.
struct ShellRule {
  std::vector<double> r, wr;  // radial nodes, weights (radial measure excluded)
  std::vector<SphereNode> sph;
};

inline ShellRule make_shell_rule(int n, double a, double b, double per_decade,
                                 int radial_order, int angular_order) {
  ShellRule S;
  S.sph = half_sphere_rule(n, angular_order);
  const GLRule& gl = gauss_legendre(radial_order);
  int np = std::max(1, (int)std::ceil(per_decade * std::log10(b / a)));
  double lg0 = std::log(a), dlg = (std::log(b) - lg0) / np;
  for (int i = 0; i < np; ++i) {
    double pa = std::exp(lg0 + i * dlg), pb = std::exp(lg0 + (i + 1) * dlg);
    double c = 0.5 * (pa + pb), hw = 0.5 * (pb - pa);
    for (size_t j = 0; j < gl.x.size(); ++j) {
      S.r.push_back(c + hw * gl.x[j]);
      S.wr.push_back(hw * gl.w[j]);
    }
  }
  return S;
}

// int_0^rho k(r) r^{n+1} dr.  The head below rho * 1e-6 is closed under a local
// power fit, exact on the pure-power plateau of a mollified kernel.
inline double second_moment(const RadialProfile& k, int n, double rho) {
  double rc = rho * 1e-6;
  double k1 = k(rc);
  double qhat = std::log(k(rc / 10.0) / k1) / std::log(10.0);
  double expo = n + 2.0 - qhat;
  if (!(expo > 0.05))
    throw std::runtime_error(
        "solve_dirichlet: kernel too singular for the near moment");
  double head = k1 * std::pow(rc, n + 2.0) / expo;
  double scale = std::max(head, k(rho) * std::pow(rho, n + 2.0));
  double total = head, lo = rc;
  int nseg = std::max(1, (int)std::ceil(std::log(rho / rc) / std::log(100.0)));
  for (int i = 0; i < nseg; ++i) {
    double hi = (i + 1 == nseg) ? rho : std::min(rho, lo * 100.0);
    total += integrate_1d([&](double r) { return k(r) * std::pow(r, n + 1); },
                          lo, hi, 1e-10 * scale / nseg)
                 .value;
    lo = hi;
  }
  return total;
}

// int_R^inf k(r) r^{n-1} dr by the power fit at R; the convolved kernel drifts
// from the pure power by a relative O((eps^2/R)^2) there.
inline double radial_tail(const RadialProfile& k, int n, double R) {
  double k1 = k(R);
  double qhat = std::log(k1 / k(2.0 * R)) / std::log(2.0);
  double expo = qhat - n;
  if (!(expo > 0.05))
    throw std::runtime_error("solve_dirichlet: kernel tail not integrable");
  return k1 * std::pow(R, n) / expo;
}

// Hager-style 1-norm estimate of |A^{-1}| from the LU factors.
inline double inverse_norm1(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                            int N) {
  using Eigen::VectorXd;
  VectorXd x = VectorXd::Constant(N, 1.0 / N);
  double est = 0.0;
  int last = -1;
  for (int it = 0; it < 6; ++it) {
    VectorXd y = lu.solve(x);
    est = std::max(est, y.lpNorm<1>());
    VectorXd xi(N);
    for (int i = 0; i < N; ++i) xi(i) = y(i) >= 0.0 ? 1.0 : -1.0;
    VectorXd z = lu.transpose().solve(xi);
    int j = 0;
    double zmax = z.cwiseAbs().maxCoeff(&j);
    if (zmax <= z.dot(x) * (1.0 + 1e-12) || j == last) break;
    x.setZero();
    x(j) = 1.0;
    last = j;
  }
  VectorXd p(N);
  for (int i = 0; i < N; ++i)
    p(i) = (i % 2 ? -1.0 : 1.0) * (1.0 + (N > 1 ? (double)i / (N - 1) : 0.0));
  est = std::max(est, 2.0 * lu.solve(p).lpNorm<1>() / (3.0 * N));
  return est;
}

inline double probe_far_sup(const ScalarField& g, double R) {
  if (std::isfinite(g.support_radius) && g.support_radius < R) return 0.0;
  double m = 0.0;
  for (int i = 0; i < 32; ++i) {
    Vec d = unit(halton_cube(i + 5, g.dim));
    m = std::max({m, std::abs(g(R * d)), std::abs(g(3.0 * R * d))});
  }
  return 1.5 * m;
}

}  // namespace detail

// Collocation solve.  Each row integrates the kernel against the multilinear
// nodal interpolant: an exact finite-difference trace stencil below rho_in, the
// fixed shell rule on [rho_in, rho_out], and beyond rho_out (where x +- w is
// always exterior) a shared far rule that feeds the data into the right side
// and its own mass into the diagonal, so constants are annihilated exactly.
inline DirichletSolution solve_dirichlet(const DirichletProblem& P) {
  P.validate();
  CertificationReport cert = verify_structural_bounds(P.K_eps, 1);
  if (!cert.pass)
    throw std::invalid_argument(
        "solve_dirichlet: kernel failed structural certification");

  const int n = P.K_eps.n;
  const double sigma = P.K_eps.sigma;
  const double h = P.h, h2 = h * h;
  const double omega = sphere_measure(n);

  LatticeSolution L;
  L.n = n;
  L.box_half = P.box_half;
  L.h = h;
  L.domain_radius = P.domain_radius;
  L.axis_nodes = (int)std::llround(2.0 * P.box_half / h) + 1;
  const int axis = L.axis_nodes;
  const int total = L.total_nodes();
  L.values.assign(total, 0.0);
  L.solved.assign(total, 0);

  std::vector<int> row_of(total, -1);
  std::vector<int> node_of;
  double data_sup = 0.0;
  for (int idx = 0; idx < total; ++idx) {
    if (L.node(idx).norm() < P.domain_radius - 1e-12) {
      row_of[idx] = (int)node_of.size();
      node_of.push_back(idx);
      L.solved[idx] = 1;
    } else {
      L.values[idx] = P.exterior(L.node(idx));
      data_sup = std::max(data_sup, std::abs(L.values[idx]));
    }
  }
  const int N = (int)node_of.size();
  if (N == 0)
    throw std::invalid_argument("solve_dirichlet: no interior nodes at this h");
  if (N > 12000)
    throw std::invalid_argument(
        "solve_dirichlet: problem exceeds the direct-solver cap");

  // Region radii.  rho_in ~ sqrt(h) balances the quartic remainder of the
  // trace stencil against the interpolation error under the kernel; the floor
  // keeps the mid rule clear of the stencil nodes.
  double rho_in = P.quad.rho_in;
  if (rho_in <= 0.0)
    rho_in = 0.8 * std::sqrt(h * std::min(P.K_eps.r0, 1.0));
  double rho_lo = (std::sqrt((double)n) + 0.5) * h;
  rho_in = std::max(rho_in, rho_lo);
  rho_in = std::min(rho_in, std::max(rho_lo, 0.45 * std::min(1.0, P.domain_radius / 0.75)));
  double rho_out = std::max({P.quad.rho_out, 2.0 * P.domain_radius + 0.5,
                             2.0 * rho_in});
  double far_R = P.far_radius;
  if (far_R <= 0.0) {
    double lam_a = P.K_eps.Lambda * (2.0 - sigma);
    far_R = std::pow(omega * lam_a / (sigma * 1e-8), 1.0 / sigma);
    far_R = std::clamp(far_R, 4.0 * rho_out, 1e8);
  }

  detail::RadialProfile k{&P.K_eps, {}};
  double per_dec = std::max(4.0, P.quad.panels_per_decade);
  detail::ShellRule mid = detail::make_shell_rule(
      n, rho_in, rho_out, per_dec, P.quad.radial_order, P.quad.angular_order);
  detail::ShellRule far = detail::make_shell_rule(
      n, rho_out, far_R, std::max(3.0, P.quad.panels_per_decade),
      P.quad.radial_order, P.quad.angular_order);
  std::vector<double> mid_k(mid.r.size()), far_k(far.r.size());
  for (size_t i = 0; i < mid.r.size(); ++i) mid_k[i] = k(mid.r[i]);
  for (size_t i = 0; i < far.r.size(); ++i) far_k[i] = k(far.r[i]);

  const double c_near = omega / n * detail::second_moment(k, n, rho_in);
  double half_shell = 0.0;
  for (const auto& s : far.sph) half_shell += s.w;
  double far_mass = 0.0;  // discrete int_{rho_out < |w| < far_R} K dw
  for (size_t i = 0; i < far.r.size(); ++i)
    far_mass +=
        2.0 * far_k[i] * far.wr[i] * std::pow(far.r[i], n - 1) * half_shell;
  const double tail_inf = omega * detail::radial_tail(k, n, far_R);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd b(N);
  std::vector<double> ones_gap(N, 0.0);  // row on all-ones data, fold included

  int stride[3] = {1, axis, axis * axis};
  int cidx[8];
  double cwt[8];
  for (int row = 0; row < N; ++row) {
    const int idx = node_of[row];
    const Vec x = L.node(idx);
    double load = 0.0, ones = 0.0;

    A(row, row) -= (2.0 * n * c_near / h2 + 2.0 * (far_mass + tail_inf));
    for (int a = 0; a < n; ++a) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        int nb = idx + sgn * stride[a];
        if (row_of[nb] >= 0) {
          A(row, row_of[nb]) += c_near / h2;
        } else {
          load += c_near / h2 * L.values[nb];
          ones += c_near / h2;
        }
      }
    }

    for (size_t i = 0; i < mid.r.size(); ++i) {
      double r = mid.r[i];
      double base = 2.0 * mid_k[i] * mid.wr[i] * std::pow(r, n - 1);
      for (const auto& s : mid.sph) {
        double c2 = base * s.w;
        A(row, row) -= 2.0 * c2;
        for (int sgn = -1; sgn <= 1; sgn += 2) {
          Vec y = x + (sgn * r) * s.u;
          if (L.in_box(y)) {
            int cc = L.cell(y, cidx, cwt);
            for (int c = 0; c < cc; ++c) {
              if (row_of[cidx[c]] >= 0) {
                A(row, row_of[cidx[c]]) += c2 * cwt[c];
              } else {
                load += c2 * cwt[c] * L.values[cidx[c]];
                ones += c2 * cwt[c];
              }
            }
          } else {
            load += c2 * P.exterior(y);
            ones += c2;
          }
        }
      }
    }

    for (size_t i = 0; i < far.r.size(); ++i) {
      double r = far.r[i];
      double base = 2.0 * far_k[i] * far.wr[i] * std::pow(r, n - 1);
      for (const auto& s : far.sph) {
        double c2 = base * s.w;
        load += c2 * (P.exterior(x + r * s.u) + P.exterior(x - r * s.u));
        ones += 2.0 * c2;
      }
    }

    b(row) = P.f_eps(x) - load;
    ones_gap[row] = ones;
  }

  SolveDiagnostics D;
  D.unknowns = N;
  double amax = A.cwiseAbs().maxCoeff();
  D.offdiag_min = 0.0;
  D.diag_margin = std::numeric_limits<double>::infinity();
  bool diag_neg = true;
  for (int i = 0; i < N; ++i) {
    double off = 0.0;
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      D.offdiag_min = std::min(D.offdiag_min, A(i, j));
      off += std::abs(A(i, j));
    }
    if (!(A(i, i) < 0.0)) diag_neg = false;
    D.diag_margin = std::min(D.diag_margin, -A(i, i) - off);
    // Row on all-ones data: every coupling cancels against the diagonal except
    // the analytic tail beyond the far radius, which has no data fold.
    double rs = A.row(i).sum() + ones_gap[i];
    D.row_sum_worst = std::max(D.row_sum_worst, std::abs(rs));
  }
  D.monotone = diag_neg && D.offdiag_min >= -1e-12 * amax &&
               D.diag_margin >= -1e-9 * amax;
  double gsup = detail::probe_far_sup(P.exterior, far_R);
  D.tail_truncation = 2.0 * (gsup + data_sup) * tail_inf;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd z = lu.solve(b);
  D.residual_inf = (A * z - b).lpNorm<Eigen::Infinity>();
  double anorm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  D.condition_estimate = anorm1 * detail::inverse_norm1(lu, N);
  double bscale = b.lpNorm<Eigen::Infinity>() + anorm1 * z.lpNorm<Eigen::Infinity>();
  if (!z.allFinite() || D.condition_estimate > 1e13 ||
      D.residual_inf > 1e-6 * (bscale + 1.0)) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "solve_dirichlet: ill-conditioned system (1-norm condition "
                  "estimate %.3e)",
                  D.condition_estimate);
    throw std::runtime_error(msg);
  }

  for (int row = 0; row < N; ++row) L.values[node_of[row]] = z(row);
  const ScalarField& gref = P.exterior;
  L.outside = [gref](const Vec& y) { return gref(y); };

  DirichletSolution out;
  out.lattice = L;
  out.diagnostics = D;
  out.field = L.as_field();
  if (std::isfinite(P.exterior.sup_bound)) {
    double vmax = 0.0;
    for (double v : L.values) vmax = std::max(vmax, std::abs(v));
    out.field.sup_bound = std::max(vmax, P.exterior.sup_bound);
  }
  return out;
}

// f_eps(x) = (f(., u(.)) * hat_eps)(x): the composed right side convolved with
// the unit-mass mollifier at scale eps.  The rule is even, so odd moments drop
// and affine right sides pass through exactly.
inline ScalarField mollify_rhs(const std::function<double(const Vec&, double)>& f,
                               const ScalarField& u, double eps,
                               int conv_order = 10) {
  if (!(eps > 0.0))
    throw std::invalid_argument("mollify_rhs: eps must be positive");
  if (!u.eval) throw std::invalid_argument("mollify_rhs: u must be set");
  const int n = u.dim;
  auto rule = std::make_shared<std::vector<CubeNode>>();
  double mass = 0.0;
  for (const auto& a : cube_rule(n, conv_order, 0.75 * eps)) {
    double hv = mollifier_profile(a.x.norm() / eps);
    if (hv <= 0.0) continue;
    rule->push_back({a.x, a.w * hv});
    mass += a.w * hv;
  }
  for (auto& nd : *rule) nd.w /= mass;
  ScalarField out;
  out.dim = n;
  out.eval = [rule, f, u](const Vec& x) {
    double v = 0.0;
    for (const auto& nd : *rule) {
      Vec y = x - nd.x;
      v += nd.w * f(y, u(y));
    }
    if (!std::isfinite(v))
      throw std::runtime_error("mollify_rhs: non-finite integrand sample");
    return v;
  };
  return out;
}

// Sweep of the full eps-pipeline against a fixed reference field: mollify the
// kernel and the right side at each eps, solve, and measure the sup distance
// over the interior nodes.  Only the final-below-first decrease is asserted.
struct ApproximationBase {
  KernelSpec kernel;                            // ambient, unmollified
  std::function<double(const Vec&, double)> f;  // right side f(x, u)
  ScalarField u;                                // reference and exterior data
  double domain_radius = 0.75;
  double box_half = 1.0;
  double h = 1.0 / 16.0;
  QuadratureConfig quad;
  int conv_order = 8;
};

struct ApproximationRow {
  double eps = 0.0;
  double distance = 0.0;      // sup over interior nodes of |u_eps - u|
  double sup_solution = 0.0;  // sup over all lattice nodes of |u_eps|
};

struct ApproximationReport {
  std::vector<ApproximationRow> rows;
  double sup_u = 0.0;
  double bound_constant = 0.0;  // max sup_solution / (1 + sup_u)
  bool pass = false;            // final distance below the first
};

inline ApproximationReport approximation_study(const ApproximationBase& base,
                                               const std::vector<double>& eps_list) {
  if (eps_list.empty())
    throw std::invalid_argument("approximation_study: empty eps list");
  if (!base.u.eval || !base.f)
    throw std::invalid_argument("approximation_study: base fields must be set");
  ApproximationReport rep;
  for (double eps : eps_list) {
    MollifierConfig mc;
    mc.eps = eps;
    DirichletProblem P;
    P.K_eps = mollify_kernel(base.kernel, mc);
    P.f_eps = mollify_rhs(base.f, base.u, eps, base.conv_order);
    P.exterior = base.u;
    P.domain_radius = base.domain_radius;
    P.box_half = base.box_half;
    P.h = base.h;
    P.quad = base.quad;
    DirichletSolution sol = solve_dirichlet(P);
    ApproximationRow row;
    row.eps = eps;
    for (int idx = 0; idx < sol.lattice.total_nodes(); ++idx) {
      double v = std::abs(sol.lattice.values[idx]);
      row.sup_solution = std::max(row.sup_solution, v);
      if (sol.lattice.solved[idx])
        row.distance = std::max(
            row.distance,
            std::abs(sol.lattice.values[idx] - base.u(sol.lattice.node(idx))));
    }
    rep.rows.push_back(row);
  }
  {
    LatticeSolution grid;  // lattice geometry only, for the reference sup
    grid.n = base.u.dim;
    grid.box_half = base.box_half;
    grid.h = base.h;
    grid.axis_nodes = (int)std::llround(2.0 * base.box_half / base.h) + 1;
    for (int idx = 0; idx < grid.total_nodes(); ++idx)
      rep.sup_u = std::max(rep.sup_u, std::abs(base.u(grid.node(idx))));
  }
  for (const auto& r : rep.rows)
    rep.bound_constant =
        std::max(rep.bound_constant, r.sup_solution / (1.0 + rep.sup_u));
  rep.pass = rep.rows.back().distance < rep.rows.front().distance;
  return rep;
}

}  // namespace nonlocal
