#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "nonlocal/geometry.hpp"
#include "oracles.hpp"

using namespace nonlocal;
using oracles::interval_interaction_exact;
using Catch::Matchers::ContainsSubstring;

namespace {

// Occupy the listed cells of a fresh 1-D lattice.
LatticeSet cells_1d(double lo, double hi, double h, std::initializer_list<int> idx) {
  LatticeSet S = make_lattice(1, Vec::scalar(lo), Vec::scalar(hi), h);
  for (int i : idx) S.cell[S.index(i, 0, 0)] = 1;
  return S;
}

// Dense tensor Gauss-Legendre oracle for a 2-D rectangle pair.
double rect_pair_gauss_oracle(double s, const double* alo, const double* ahi,
                              const double* blo, const double* bhi, int m) {
  GLRule g = gauss_legendre(m);
  auto map = [&](double t, double lo, double hi) { return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t; };
  double sum = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) {
          double x0 = map(g.x[i], alo[0], ahi[0]), x1 = map(g.x[j], alo[1], ahi[1]);
          double y0 = map(g.x[k], blo[0], bhi[0]), y1 = map(g.x[l], blo[1], bhi[1]);
          double d2 = (x0 - y0) * (x0 - y0) + (x1 - y1) * (x1 - y1);
          sum += g.w[i] * g.w[j] * g.w[k] * g.w[l] * std::pow(d2, -0.5 * (2.0 + s));
        }
  double jac = 0.0625 * (ahi[0] - alo[0]) * (ahi[1] - alo[1]) * (bhi[0] - blo[0]) * (bhi[1] - blo[1]);
  return sum * jac;
}

// Curvature of a disc of radius rho0 at a boundary point, via the exact
// in-disc arc length on each shell: a circle of radius r about a boundary
// point meets the disc in an arc of length 2 acos(r / (2 rho0)), so the
// shell integrand is 2 pi - 4 acos(.) and only a 1-D integral remains.
double disc_curvature_reference(double rho0, double s) {
  auto f = [&](double v) { return (2.0 * M_PI - 4.0 * std::acos(v)) * std::pow(v, -1.0 - s); };
  QuadResult q = integrate_1d(f, 0.0, 1.0, 1e-12);
  return std::pow(2.0 * rho0, -s) * (q.value + 2.0 * M_PI / s);
}

ScalarField plateau_bump(double A, double r1, double r2) {
  ScalarField f;
  f.dim = 1;
  f.eval = [A, r1, r2](const Vec& z) { return A * plateau(std::abs(z[0]), r1, r2); };
  f.support_radius = r2;
  f.sup_bound = A;
  return f;
}

}  // namespace

TEST_CASE("interval interactions match the closed form") {
  for (double s : {0.2, 0.5, 0.8}) {
    LatticeSet A = cells_1d(0.0, 3.0, 0.5, {0, 1});
    LatticeSet B = cells_1d(0.0, 3.0, 0.5, {4, 5});
    double exact = interval_interaction_exact(0.0, 1.0, 2.0, 3.0, s);
    CHECK(std::abs(interaction_energy(A, B, s) - exact) < 1e-10 * exact);
  }

  // Touching intervals: the subdivision tier still reduces every pair to the
  // closed form, so the result stays exact.
  for (double s : {0.3, 0.5, 0.7}) {
    LatticeSet A = cells_1d(0.0, 3.0, 0.5, {0, 1});
    LatticeSet B = cells_1d(0.0, 3.0, 0.5, {2, 3});
    double exact = interval_interaction_exact(0.0, 1.0, 1.0, 2.0, s);
    CHECK(std::abs(interaction_energy(A, B, s) - exact) < 1e-10 * exact);
  }

  // Distant intervals cross the Gauss tier; forcing the exact tier must agree
  // with the closed form to roundoff.
  {
    double s = 0.5;
    LatticeSet A = cells_1d(0.0, 8.0, 0.5, {0, 1});
    LatticeSet B = cells_1d(0.0, 8.0, 0.5, {12, 13, 14, 15});
    double exact = interval_interaction_exact(0.0, 1.0, 6.0, 8.0, s);
    CHECK(std::abs(interaction_energy(A, B, s) - exact) < 5e-6 * exact);
    InteractionConfig all_exact;
    all_exact.far_threshold = 1000;
    CHECK(std::abs(interaction_energy(A, B, s, all_exact) - exact) < 1e-11 * exact);
  }
}

TEST_CASE("interaction energy is symmetric and monotone") {
  LatticeSet base = make_lattice(2, Vec(0.0, 0.0), Vec(1.0, 1.0), 0.125);
  std::vector<int> order(64);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(2026);
  std::shuffle(order.begin(), order.end(), rng);

  LatticeSet A = base, B = base, A2 = base;
  for (int t = 0; t < 10; ++t) A.cell[order[t]] = A2.cell[order[t]] = 1;
  for (int t = 10; t < 22; ++t) B.cell[order[t]] = 1;
  for (int t = 22; t < 25; ++t) A2.cell[order[t]] = 1;

  double ab = interaction_energy(A, B, 0.5);
  double ba = interaction_energy(B, A, 0.5);
  double a2b = interaction_energy(A2, B, 0.5);
  CHECK(std::abs(ab - ba) <= 1e-13 * std::abs(ab));
  CHECK(a2b > ab);
}

TEST_CASE("cell pair tiers agree across integration routes") {
  double s = 0.5, h = 1.0 / 16.0;
  LatticeSet base = make_lattice(2, Vec(0.0, 0.0), Vec(1.0, 1.0), h);

  auto pair_value = [&](int ai, int aj, int bi, int bj) {
    LatticeSet A = base, B = base;
    A.cell[A.index(ai, aj, 0)] = 1;
    B.cell[B.index(bi, bj, 0)] = 1;
    return interaction_energy(A, B, s);
  };
  auto direct = [&](int ai, int aj, int bi, int bj) {
    detail::Rect ra = detail::cell_rect(base, ai, aj, 0);
    detail::Rect rb = detail::cell_rect(base, bi, bj, 0);
    return detail::rect_energy(2, s, ra, rb, 1e-14);
  };

  // Touching tiers (edge and corner) against the direct density reduction of
  // the whole cells: the subdivision must converge to the same integral.
  double edge = pair_value(2, 2, 3, 2);
  CHECK(std::abs(edge - direct(2, 2, 3, 2)) < 1e-6 * edge);
  double corner = pair_value(2, 2, 3, 3);
  CHECK(std::abs(corner - direct(2, 2, 3, 3)) < 1e-6 * corner);

  // Mid-range exact tier against a dense tensor Gauss oracle.
  {
    detail::Rect ra = detail::cell_rect(base, 2, 2, 0);
    detail::Rect rb = detail::cell_rect(base, 5, 4, 0);
    double oracle = rect_pair_gauss_oracle(s, ra.lo, ra.hi, rb.lo, rb.hi, 20);
    double mid = pair_value(2, 2, 5, 4);
    CHECK(std::abs(mid - oracle) < 1e-9 * oracle);
  }

  // Far Gauss tier against the same oracle.
  {
    detail::Rect ra = detail::cell_rect(base, 2, 2, 0);
    detail::Rect rb = detail::cell_rect(base, 13, 6, 0);
    double oracle = rect_pair_gauss_oracle(s, ra.lo, ra.hi, rb.lo, rb.hi, 20);
    double far = pair_value(2, 2, 13, 6);
    CHECK(std::abs(far - oracle) < 1e-7 * oracle);
  }
}

TEST_CASE("interaction rejects ill-posed inputs") {
  LatticeSet A = cells_1d(0.0, 1.0, 0.25, {0, 1});
  LatticeSet B = cells_1d(0.0, 1.0, 0.25, {1, 2});
  CHECK_THROWS_WITH(interaction_energy(A, B, 0.5), ContainsSubstring("overlapping"));

  LatticeSet C = cells_1d(0.0, 1.0, 0.125, {6, 7});
  CHECK_THROWS_WITH(interaction_energy(A, C, 0.5), ContainsSubstring("different lattices"));

  LatticeSet D = cells_1d(0.0, 1.0, 0.25, {2, 3});
  CHECK_THROWS_WITH(interaction_energy(A, D, 1.5), ContainsSubstring("s must be in"));

  Vec lo(-1.0, -1.0), hi(1.0, 1.0);
  LatticeSet H1 = make_halfspace_set(2, lo, hi, 0.5, Vec(0.0, 1.0), 0.0);
  LatticeSet H2 = make_halfspace_set(2, lo, hi, 0.5, Vec(0.0, -1.0), -0.5);
  CHECK_THROWS_WITH(interaction_energy(H1, H2, 0.5), ContainsSubstring("both sets unbounded"));

  LatticeSet T = make_halfspace_set(2, lo, hi, 0.5, Vec(0.6, 0.8), 0.0);
  LatticeSet small = make_lattice(2, lo, hi, 0.5);
  small.cell[small.index(3, 3, 0)] = 1;
  CHECK_THROWS_WITH(interaction_energy(small, T, 0.5), ContainsSubstring("tilted"));

  LatticeSet G = make_subgraph_set(2, lo, hi, 0.5, constant_field(1, 0.0));
  CHECK_THROWS_WITH(interaction_energy(small, G, 0.5), ContainsSubstring("subgraph"));
  CHECK_THROWS_AS(complement(G), std::invalid_argument);
  CHECK_THROWS_WITH(fractional_perimeter(G, lo, hi, 0.5), ContainsSubstring("subgraph"));

  CHECK_THROWS_WITH(make_lattice(1, Vec::scalar(0.0), Vec::scalar(1.0), 0.3),
                    ContainsSubstring("commensurate"));
}

TEST_CASE("fractional perimeter basics") {
  Vec lo(-0.5, -0.5), hi(0.5, 0.5);
  double h = 1.0 / 12.0;

  LatticeSet empty = make_lattice(2, lo, hi, h);
  CHECK(fractional_perimeter(empty, lo, hi, 0.5) == 0.0);

  LatticeSet disc = make_disc_set(lo, hi, h, Vec(0.0, 0.0), 0.3);
  double per = fractional_perimeter(disc, lo, hi, 0.5);
  CHECK(per > 0.0);

  // Complementation swaps the three terms pairwise, so the value is the same
  // computation in a different order.
  double per_c = fractional_perimeter(complement(disc), lo, hi, 0.5);
  CHECK(std::abs(per - per_c) <= 1e-13 * per);
}

TEST_CASE("half-space perimeter is stable under refinement") {
  Vec lo(-0.5, -0.5), hi(0.5, 0.5);
  LatticeSet coarse = make_halfspace_set(2, lo, hi, 0.1, Vec(0.0, 1.0), 0.0);
  LatticeSet fine = make_halfspace_set(2, lo, hi, 0.01, Vec(0.0, 1.0), 0.0);
  double pc = fractional_perimeter(coarse, lo, hi, 0.5);
  double pf = fractional_perimeter(fine, lo, hi, 0.5);
  INFO("coarse " << pc << " fine " << pf);
  // Both grids rasterize the half-space exactly, so only engine error differs.
  CHECK(std::abs(pc - pf) < 1e-6 * pc);
}

TEST_CASE("perimeter is consistent under box enlargement") {
  Vec wlo(-0.5, -0.5), whi(0.5, 0.5);
  double h = 0.1;
  LatticeSet tight = make_halfspace_set(2, wlo, whi, h, Vec(0.0, 1.0), 0.0);
  LatticeSet wide = make_halfspace_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), h, Vec(0.0, 1.0), 0.0);
  double pt = fractional_perimeter(tight, wlo, whi, 0.5);
  double pw = fractional_perimeter(wide, wlo, whi, 0.5);
  INFO("tight box " << pt << " wide box " << pw);
  CHECK(std::abs(pt - pw) < 1e-7 * pt);
}

TEST_CASE("perimeter is invariant under lattice translations") {
  double h = 1.0 / 24.0;
  LatticeSet a = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), h, Vec(0.0, 0.0), 0.3);
  Vec shift(2.0 * h, -3.0 * h);
  LatticeSet b = make_disc_set(Vec(-0.5, -0.5) + shift, Vec(0.5, 0.5) + shift, h, shift, 0.3);
  double pa = fractional_perimeter(a, Vec(-0.5, -0.5), Vec(0.5, 0.5), 0.5);
  double pb = fractional_perimeter(b, Vec(-0.5, -0.5) + shift, Vec(0.5, 0.5) + shift, 0.5);
  CHECK(std::abs(pa - pb) <= 1e-12 * pa);
}

TEST_CASE("perimeter scales as the kernel homogeneity dictates") {
  double s = 0.5;
  double expect = std::pow(2.0, 2.0 - s);

  // Joint refinement: doubling the set, the window and the spacing keeps the
  // cell geometry identical, so the ratio is exact up to quadrature budgets.
  {
    LatticeSet e1 = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), 1.0 / 24.0, Vec(0.0, 0.0), 0.3);
    LatticeSet e2 = make_disc_set(Vec(-1.0, -1.0), Vec(1.0, 1.0), 1.0 / 12.0, Vec(0.0, 0.0), 0.6);
    double p1 = fractional_perimeter(e1, Vec(-0.5, -0.5), Vec(0.5, 0.5), s);
    double p2 = fractional_perimeter(e2, Vec(-1.0, -1.0), Vec(1.0, 1.0), s);
    CHECK(std::abs(p2 / p1 - expect) < 1e-9 * expect);
  }

  // Fixed spacing: the two radii now rasterize differently, so the ratio
  // carries the discretization error of both.
  {
    double h = 1.0 / 48.0;
    LatticeSet e1 = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), h, Vec(0.0, 0.0), 0.3);
    LatticeSet e2 = make_disc_set(Vec(-1.0, -1.0), Vec(1.0, 1.0), h, Vec(0.0, 0.0), 0.6);
    double p1 = fractional_perimeter(e1, Vec(-0.5, -0.5), Vec(0.5, 0.5), s);
    double p2 = fractional_perimeter(e2, Vec(-1.0, -1.0), Vec(1.0, 1.0), s);
    double ratio = p2 / p1;
    INFO("ratio " << ratio << " target " << expect << " rel "
                  << std::abs(ratio - expect) / expect);
    CHECK(std::abs(ratio - expect) < 0.02 * expect);
  }
}

TEST_CASE("flat and affine boundaries have zero curvature") {
  // Graph route: u = 0.
  LatticeSet flat = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125,
                                      constant_field(1, 0.0));
  for (double t : {0.0, 0.3, -0.3, 0.7, -0.7}) {
    auto r = nonlocal_mean_curvature(flat, Vec(t, 0.0), 0.5);
    CHECK(std::abs(r.value) < 1e-9);
    CHECK(r.error < 1e-6);
  }

  // Scan route: an axis-aligned half-plane boundary point.
  LatticeSet axis = make_halfspace_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.25,
                                       Vec(0.0, 1.0), 0.0);
  auto ra = nonlocal_mean_curvature(axis, Vec(0.2, 0.0), 0.5);
  CHECK(std::abs(ra.value) < 1e-7);

  // Scan route: tilted half-plane, paired shells cancel exactly.
  Vec n(0.6, 0.8);
  double off = 0.1;
  LatticeSet tilt = make_halfspace_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.25, n, off);
  Vec x0 = off * n;  // |n| = 1
  Vec tang(-0.8, 0.6);
  auto rt = nonlocal_mean_curvature(tilt, x0 + 0.15 * tang, 0.5);
  CHECK(std::abs(rt.value) < 1e-7);
  CHECK(rt.error < 1e-5);
}

TEST_CASE("disc curvature matches the analytic reference") {
  double rho0 = 0.3, s = 0.5;
  double ref = disc_curvature_reference(rho0, s);
  LatticeSet disc = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), 1.0 / 24.0, Vec(0.0, 0.0), rho0);

  double vmin = 1e300, vmax = -1e300;
  for (int j = 0; j < 8; ++j) {
    double th = 2.0 * M_PI * j / 8.0 + 0.37;
    Vec x(rho0 * std::cos(th), rho0 * std::sin(th));
    auto r = nonlocal_mean_curvature(disc, x, s);
    vmin = std::min(vmin, r.value);
    vmax = std::max(vmax, r.value);
    INFO("theta " << th << " value " << r.value << " ref " << ref << " err " << r.error);
    CHECK(std::abs(r.value - ref) < 5e-6 * ref);
    CHECK(r.value > 0.0);
  }
  CHECK(vmax - vmin < 1e-5 * ref);

  // Complementation flips the sign.
  auto rc = nonlocal_mean_curvature(complement(disc), Vec(rho0, 0.0), s);
  auto rd = nonlocal_mean_curvature(disc, Vec(rho0, 0.0), s);
  CHECK(std::abs(rc.value + rd.value) < 1e-9);
}

TEST_CASE("curvature flags unresolvable boundary points") {
  LatticeSet cells = make_lattice(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.5);
  cells.cell[cells.index(1, 1, 0)] = 1;
  CHECK_THROWS_WITH(nonlocal_mean_curvature(cells, Vec(0.0, 0.0), 0.5),
                    ContainsSubstring("not resolvable"));

  LatticeSet disc = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), 0.125, Vec(0.0, 0.0), 0.3);
  CHECK_THROWS_WITH(nonlocal_mean_curvature(disc, Vec(0.0, 0.0), 0.5),
                    ContainsSubstring("resolved boundary"));

  LatticeSet flat = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125,
                                      constant_field(1, 0.0));
  CHECK_THROWS_WITH(nonlocal_mean_curvature(flat, Vec(0.0, 0.3), 0.5),
                    ContainsSubstring("graph boundary"));
}

TEST_CASE("scan and graph engines agree on a bump boundary") {
  double s = 0.5;
  ScalarField u = plateau_bump(0.1, 0.3, 0.8);
  Vec lo(-1.0, -1.0), hi(1.0, 1.0);
  LatticeSet sub = make_subgraph_set(2, lo, hi, 1.0 / 16.0, u);

  // Same continuum set, described through the generic membership engine; the
  // bump is compactly supported so beyond the box it is exactly {y2 < 0}.
  LatticeSet scan = make_lattice(2, lo, hi, 1.0 / 16.0);
  auto inside = [u](const Vec& y) { return y.last() < u(y.prefix()); };
  detail::fill_cells(scan, inside);
  scan.exterior.rule = ExteriorRule::halfspace;
  scan.exterior.normal = Vec(0.0, 1.0);
  scan.exterior.offset = 0.0;
  scan.exact_membership = inside;

  for (double t : {0.5, -0.45, 0.2}) {
    Vec x(t, u(Vec::scalar(t)));
    auto a = nonlocal_mean_curvature(sub, x, s);
    auto b = nonlocal_mean_curvature(scan, x, s);
    INFO("t " << t << " graph " << a.value << " +- " << a.error << " scan " << b.value
              << " +- " << b.error);
    CHECK(std::abs(a.value - b.value) < 1e-4);
    CHECK(std::abs(a.value - b.value) <= a.error + b.error + 1e-5);
    CHECK(a.error < 1e-4);
    CHECK(b.error < 1e-4);
  }
}

TEST_CASE("windowed and far-field parts recompose the curvature") {
  double s = 0.5;
  GraphWindow W{1.0};

  // Flat graph: every piece vanishes.
  LatticeSet flat = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125,
                                      constant_field(1, 0.0));
  CHECK(std::abs(windowed_curvature(flat, Vec(0.0, 0.0), W, s).value) < 1e-12);
  CHECK(std::abs(far_field_remainder(flat, Vec(0.0, 0.0), W, s).value) < 1e-12);

  // Gaussian bump, two core points.
  ScalarField u = gaussian_field(1, 0.09, 0.25);
  LatticeSet E = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125, u);
  for (double t : {0.0, 0.2}) {
    Vec x(t, u(Vec::scalar(t)));
    auto w = windowed_curvature(E, x, W, s);
    auto p = far_field_remainder(E, x, W, s);
    auto f = nonlocal_mean_curvature(E, x, s);
    INFO("t " << t << " windowed " << w.value << " psi " << p.value << " full " << f.value);
    CHECK(std::abs(w.value + p.value - f.value) < 1e-5);
  }

  // Reflection z -> -z maps the paired columns onto each other pointwise, so
  // the quadrature path and the value are reproduced exactly.
  {
    ScalarField ur;
    ur.dim = 1;
    ScalarField ubase = u;
    ur.eval = [ubase](const Vec& z) { return ubase(Vec::scalar(-z[0])); };
    LatticeSet Er = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125, ur);
    double t = 0.2;
    auto w = windowed_curvature(E, Vec(t, u(Vec::scalar(t))), W, s);
    auto wr = windowed_curvature(Er, Vec(-t, u(Vec::scalar(t))), W, s);
    CHECK(std::abs(w.value - wr.value) <= 1e-13 * std::abs(w.value));
  }

  // Ambient dimension three.
  {
    ScalarField u3 = gaussian_field(2, 0.09, 0.25);
    LatticeSet E3 = make_subgraph_set(3, Vec(-1.0, -1.0, -1.0), Vec(1.0, 1.0, 1.0), 0.25, u3);
    Vec xp(0.15, -0.1);
    Vec x(xp[0], xp[1], u3(xp));
    CurvatureConfig cfg;
    cfg.tol = 1e-7;
    auto w = windowed_curvature(E3, x, W, s, cfg);
    auto p = far_field_remainder(E3, x, W, s, cfg);
    auto f = nonlocal_mean_curvature(E3, x, s, cfg);
    INFO("windowed " << w.value << " psi " << p.value << " full " << f.value);
    CHECK(std::abs(w.value + p.value - f.value) < 1e-4);
  }
}

TEST_CASE("window preconditions are enforced") {
  double s = 0.5;
  GraphWindow W{1.0};

  LatticeSet disc = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), 0.125, Vec(0.0, 0.0), 0.3);
  CHECK_THROWS_WITH(windowed_curvature(disc, Vec(0.3, 0.0), W, s),
                    ContainsSubstring("subgraph rule"));

  ScalarField u = gaussian_field(1, 0.09, 0.25);
  LatticeSet E = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125, u);
  CHECK_THROWS_WITH(windowed_curvature(E, Vec(0.6, u(Vec::scalar(0.6))), W, s),
                    ContainsSubstring("window core"));
  CHECK_THROWS_WITH(far_field_remainder(E, Vec(0.1, 0.02), W, s),
                    ContainsSubstring("graph boundary"));

  // The graph stays near zero at the evaluation point but exits the slab
  // |y_n| <= R/8 inside the window, which the sampled check must catch.
  ScalarField tall = gaussian_field(1, 0.3, 0.2, Vec::scalar(0.6));
  LatticeSet Et = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.125, tall);
  CHECK_THROWS_WITH(windowed_curvature(Et, Vec(0.0, tall(Vec::scalar(0.0))), W, s),
                    ContainsSubstring("window slab"));
}

TEST_CASE("lattice io round trips") {
  LatticeSet disc = make_disc_set(Vec(-0.5, -0.5), Vec(0.5, 0.5), 0.125, Vec(0.0, 0.0), 0.3);
  save_lattice(disc, "geomio_disc");
  LatticeSet disc2 = load_lattice("geomio_disc");
  CHECK(disc2.dim == disc.dim);
  CHECK(disc2.h == disc.h);
  CHECK(disc2.ncell == disc.ncell);
  CHECK(disc2.cell == disc.cell);
  CHECK(disc2.exterior.rule == ExteriorRule::empty);

  LatticeSet half = make_halfspace_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.25,
                                       Vec(0.0, 1.0), 0.0);
  save_lattice(half, "geomio_half", true);
  LatticeSet half2 = load_lattice("geomio_half");
  CHECK(half2.cell == half.cell);
  CHECK(half2.exterior.rule == ExteriorRule::halfspace);
  CHECK(half2.exterior.normal[1] == 1.0);
  // The membership closure comes back with the rule.
  REQUIRE((bool)half2.exact_membership);
  CHECK(half2.exact_membership(Vec(5.0, -9.0)));
  CHECK(!half2.exact_membership(Vec(5.0, 9.0)));

  LatticeSet sub = make_subgraph_set(2, Vec(-1.0, -1.0), Vec(1.0, 1.0), 0.25,
                                     constant_field(1, 0.0));
  CHECK_THROWS_WITH(save_lattice(sub, "geomio_sub"), ContainsSubstring("subgraph"));
  CHECK_THROWS_AS(load_lattice("geomio_missing"), std::runtime_error);

  std::remove("geomio_disc.json");
  std::remove("geomio_disc.csv");
  std::remove("geomio_half.json");
  std::remove("geomio_half.bin");
}
