#include <doctest.h>

#include <cmath>

#include "ndfem/expression.hpp"

using namespace ndfem;

TEST_CASE("parsing and evaluation") {
  CHECK(Expression::parse("1+2*3").eval(0, 0) == doctest::Approx(7.0));
  CHECK(Expression::parse("(1+2)*3").eval(0, 0) == doctest::Approx(9.0));
  CHECK(Expression::parse("2^3^2").eval(0, 0) == doctest::Approx(512.0));  // right-assoc
  CHECK(Expression::parse("-x^2").eval(3, 0) == doctest::Approx(-9.0));
  CHECK(Expression::parse("sin(pi/2)").eval(0, 0) == doctest::Approx(1.0));
  CHECK(Expression::parse("exp(1)").eval(0, 0) == doctest::Approx(M_E));
  CHECK(Expression::parse("min(x, y) + max(x, y)").eval(2, 5) == doctest::Approx(7.0));
  CHECK(Expression::parse("step(x - 0.5)").eval(0.25, 0) == doctest::Approx(0.0));
  CHECK(Expression::parse("step(x - 0.5)").eval(0.75, 0) == doctest::Approx(1.0));
  CHECK(Expression::parse("step(0)").eval(0, 0) == doctest::Approx(1.0));
  CHECK(Expression::parse("abs(-3) + sqrt(16)").eval(0, 0) == doctest::Approx(7.0));
  CHECK(Expression::parse("2 - 3 - 4").eval(0, 0) == doctest::Approx(-5.0));  // left-assoc
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    Expression::parse("1 + foo(2)");
    FAIL("expected ExprError");
  } catch (const ExprError& e) {
    CHECK(e.offset == 4);
  }
  try {
    Expression::parse("sin(x");
    FAIL("expected ExprError");
  } catch (const ExprError& e) {
    CHECK(e.offset == 5);
  }
  CHECK_THROWS_AS(Expression::parse("x + * y"), ExprError);
  CHECK_THROWS_AS(Expression::parse("min(x)"), ExprError);
  CHECK_THROWS_AS(Expression::parse("1 2"), ExprError);
}

TEST_CASE("symbolic derivatives agree with central differences") {
  const char* sources[] = {
      "sin(pi*x)*sin(pi*y)",
      "exp(x*y) + x^3*y - 2/(1+x)",
      "sqrt(1 + x^2 + y^2)",
      "x*(1-x)*y*(1-y)",
      "sin(pi*x)*sin(pi*y)*exp(x*y)",
  };
  const double pts[][2] = {{0.3, 0.7}, {0.51, 0.12}, {0.9, 0.4}};
  for (const char* src : sources) {
    const Expression f = Expression::parse(src);
    for (int axis : {0, 1}) {
      const Expression df = f.derivative(axis);
      for (const auto& p : pts) {
        const double h = 1e-6;
        const double xp = p[0] + (axis == 0 ? h : 0), xm = p[0] - (axis == 0 ? h : 0);
        const double yp = p[1] + (axis == 1 ? h : 0), ym = p[1] - (axis == 1 ? h : 0);
        const double fd = (f.eval(xp, yp) - f.eval(xm, ym)) / (2 * h);
        CHECK(df.eval(p[0], p[1]) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("piecewise derivatives through step/min/max/abs") {
  const Expression f = Expression::parse("max(x, 2*x - 1) + abs(y - 0.5)");
  const Expression fx = f.derivative(0);
  const Expression fy = f.derivative(1);
  CHECK(fx.eval(0.2, 0.0) == doctest::Approx(1.0));  // x < 1: max picks x
  CHECK(fx.eval(1.5, 0.0) == doctest::Approx(2.0));
  CHECK(fy.eval(0.0, 0.2) == doctest::Approx(-1.0));
  CHECK(fy.eval(0.0, 0.8) == doctest::Approx(1.0));
}

TEST_CASE("variable exponents cannot be differentiated") {
  const Expression f = Expression::parse("x^y");
  CHECK(f.eval(2, 3) == doctest::Approx(8.0));
  CHECK_THROWS_AS(f.derivative(0), ExprError);
}

TEST_CASE("second derivatives of the usual manufactured solution") {
  const Expression u = Expression::parse("sin(pi*x)*sin(pi*y)");
  const Expression uxx = u.derivative(0).derivative(0);
  const Expression uyy = u.derivative(1).derivative(1);
  const double x = 0.37, y = 0.81;
  const double lap = uxx.eval(x, y) + uyy.eval(x, y);
  CHECK(lap == doctest::Approx(-2 * M_PI * M_PI * std::sin(M_PI * x) * std::sin(M_PI * y)).epsilon(1e-12));
}
