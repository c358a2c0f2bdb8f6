#include <doctest.h>

#include <cmath>

#include "ndfem/basis.hpp"
#include "ndfem/mesh.hpp"
#include "ndfem/quadrature.hpp"
#include "poly_oracle.hpp"

using namespace ndfem;

namespace {
// a! b! / (a+b+2)!: exact monomial integral over the reference triangle.
double ref_integral(int a, int b) {
  double v = 1.0;
  for (int i = 1; i <= a; ++i) v *= i;
  for (int i = 1; i <= b; ++i) v *= i;
  for (int i = 1; i <= a + b + 2; ++i) v /= i;
  return v;
}
}  // namespace

TEST_CASE("triangle rules: positive weights, exact monomials") {
  for (int degree : {2, 4, 8, 12, 16}) {
    const TriangleQuadrature rule = triangle_quadrature(degree);
    double wsum = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double acc = 0.0;
        for (int q = 0; q < rule.size(); ++q)
          acc += rule.weights[q] * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
        CHECK(acc == doctest::Approx(ref_integral(a, b)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("segment rules: positive weights, exact monomials") {
  for (int degree : {1, 4, 9, 16}) {
    const SegmentQuadrature rule = segment_quadrature(degree);
    for (double w : rule.weights) CHECK(w > 0.0);
    for (int k = 0; k <= degree; ++k) {
      double acc = 0.0;
      for (int q = 0; q < rule.size(); ++q) acc += rule.weights[q] * std::pow(rule.points[q], k);
      CHECK(acc == doctest::Approx(1.0 / (k + 1)).epsilon(1e-14));
    }
  }
}

TEST_CASE("Lagrange basis: nodal property and partition of unity") {
  for (int r : {2, 3, 4}) {
    const LagrangeBasis basis(r);
    const int n = basis.size();
    CHECK(n == (r + 1) * (r + 2) / 2);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd v = basis.values(basis.nodes()[i]);
      for (int j = 0; j < n; ++j) CHECK(v(j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-11));
    }
    const TriangleQuadrature rule = triangle_quadrature(2 * r);
    for (int q = 0; q < rule.size(); ++q) {
      CHECK(basis.values(rule.points[q]).sum() == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(basis.gradients(rule.points[q]).colwise().sum().norm() <= 1e-11);
    }
  }
}

TEST_CASE("quadrature mass matrix matches the exact-integral oracle") {
  // P_r x P_r products have degree 2r; the rule must reproduce the exact
  // reference-triangle mass matrix entry by entry.
  for (int r : {2, 3}) {
    const LagrangeBasis basis(r);
    const TriangleQuadrature rule = triangle_quadrature(2 * r);
    const Vec2 p0(0, 0), p1(1, 0), p2(0, 1);
    const auto exact_basis = oracle::physical_lagrange_basis(p0, p1, p2, r);
    // The oracle's node ordering matches the basis lattice ordering.
    for (int a = 0; a < basis.size(); ++a) {
      for (int b = 0; b < basis.size(); ++b) {
        double acc = 0.0;
        for (int q = 0; q < rule.size(); ++q)
          acc += rule.weights[q] * basis.values(rule.points[q])(a) * basis.values(rule.points[q])(b);
        const double exact = (exact_basis[a] * exact_basis[b]).integrate_triangle(p0, p1, p2);
        CHECK(acc == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("basis derivatives match the polynomial oracle") {
  const int r = 3;
  const LagrangeBasis basis(r);
  const Vec2 p0(0, 0), p1(1, 0), p2(0, 1);
  const auto exact_basis = oracle::physical_lagrange_basis(p0, p1, p2, r);
  const Vec2 pts[] = {{0.2, 0.3}, {0.1, 0.6}, {0.5, 0.25}};
  for (const Vec2& p : pts) {
    const Eigen::MatrixXd g = basis.gradients(p);
    const Eigen::MatrixXd h = basis.hessians(p);
    for (int j = 0; j < basis.size(); ++j) {
      CHECK(g(j, 0) == doctest::Approx(exact_basis[j].derivative(0).eval(p.x(), p.y())).epsilon(1e-10));
      CHECK(g(j, 1) == doctest::Approx(exact_basis[j].derivative(1).eval(p.x(), p.y())).epsilon(1e-10));
      CHECK(h(j, 0) ==
            doctest::Approx(exact_basis[j].derivative(0).derivative(0).eval(p.x(), p.y())).epsilon(1e-9));
      CHECK(h(j, 1) ==
            doctest::Approx(exact_basis[j].derivative(0).derivative(1).eval(p.x(), p.y())).epsilon(1e-9));
      CHECK(h(j, 2) ==
            doctest::Approx(exact_basis[j].derivative(1).derivative(1).eval(p.x(), p.y())).epsilon(1e-9));
    }
  }
}
