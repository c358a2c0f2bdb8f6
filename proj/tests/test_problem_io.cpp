#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ndfem/problem_io.hpp"

using namespace ndfem;

namespace {
const char* kSample = R"(# sample problem
[domain]
tag = unit-square
n = 4

[discretization]
r = 3
refinements = 2
p = 2

[manufactured]
u = sin(pi*x)*sin(pi*y)

[controls]
control = base
A = 1 + 0.5*sin(pi*x)*sin(pi*y) ; 0 ; 0 ; 1
b = const 0 0
c = -1
f = from-exact
slack = 0.25*(x - y)^2

control = other
A = const 2 0 0 1
b = 0.1*x ; 0.2
c = 0
f = sin(pi*x)

[cordes]
condition = fem-general
lambda_range = 0.5 20
)";
}

TEST_CASE("problem files parse into coefficient data") {
  const ProblemFile pf = parse_problem(kSample);
  CHECK(pf.domain_tag == "unit-square");
  CHECK(pf.n == 4);
  CHECK(pf.degree == 3);
  CHECK(pf.refinements == 2);
  CHECK(pf.p == doctest::Approx(2.0));
  REQUIRE(pf.manufactured_u.has_value());
  REQUIRE(pf.controls.size() == 2);
  CHECK(pf.controls[0].label == "base");
  CHECK(pf.controls[1].label == "other");
  CHECK(pf.controls[1].A.eval(Vec2(0.3, 0.4))(0, 0) == doctest::Approx(2.0));
  CHECK(pf.controls[1].b.eval(Vec2(0.3, 0.4)).x() == doctest::Approx(0.03));
  REQUIRE(pf.cordes_condition.has_value());
  CHECK(*pf.cordes_condition == CordesCondition::FemGeneral);
  REQUIRE(pf.lambda_range.has_value());
  CHECK(pf.lambda_range->first == doctest::Approx(0.5));
  CHECK(pf.lambda_range->second == doctest::Approx(20.0));

  // from-exact: f = A : D^2 u + b . grad u + c u + slack at a sample point.
  const Vec2 x(0.3, 0.7);
  const ExactSolution exact = exact_from_expression("sin(pi*x)*sin(pi*y)");
  const Mat2 A = pf.controls[0].A.eval(x);
  const double expected =
      A.cwiseProduct(exact.hess(x)).sum() - exact.value(x) + 0.25 * std::pow(x.x() - x.y(), 2);
  CHECK(pf.controls[0].f.eval(x) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("parse errors carry the line and byte position") {
  CHECK_THROWS_WITH_AS(parse_problem("[domain]\nbogus-line\n"), doctest::Contains("line 2"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_problem("[nope]\n"), doctest::Contains("unknown section"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_problem("[domain]\ntag = unit-square\n"),
                       doctest::Contains("at least one control"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_problem("[controls]\ncontrol = a\nA = const 1 0 0\n"),
                       doctest::Contains("a11 a12 a21 a22"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_problem("[controls]\ncontrol = a\nf = from-exact\n"),
                       doctest::Contains("[manufactured]"), std::runtime_error);
  // Expression errors surface with their byte offset.
  CHECK_THROWS_WITH_AS(parse_problem("[controls]\ncontrol = a\nc = 1 + bogus(2)\n"),
                       doctest::Contains("byte"), std::runtime_error);
}

TEST_CASE("exact solutions from expressions carry consistent derivatives") {
  const ExactSolution exact = exact_from_expression("exp(x*y)*sin(pi*x)");
  const Vec2 x(0.4, 0.6);
  const double h = 1e-6;
  const double fdx = (exact.value(Vec2(x.x() + h, x.y())) - exact.value(Vec2(x.x() - h, x.y()))) / (2 * h);
  CHECK(exact.grad(x).x() == doctest::Approx(fdx).epsilon(1e-7));
  const double fdyy =
      (exact.grad(Vec2(x.x(), x.y() + h)).y() - exact.grad(Vec2(x.x(), x.y() - h)).y()) / (2 * h);
  CHECK(exact.hess(x)(1, 1) == doctest::Approx(fdyy).epsilon(1e-7));
  CHECK(exact.hess(x)(0, 1) == doctest::Approx(exact.hess(x)(1, 0)).epsilon(1e-13));
}

#ifdef NDFEM_PROBLEMS_DIR
TEST_CASE("every bundled problem parses and passes ellipticity validation") {
  namespace fs = std::filesystem;
  const fs::path dir = NDFEM_PROBLEMS_DIR;
  REQUIRE(fs::exists(dir));
  int count = 0;
  const auto grid = uniform_grid_samples(0, 1, 0, 1, 17);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".prob") continue;
    ++count;
    CAPTURE(entry.path().string());
    const ProblemFile pf = load_problem(entry.path().string());
    REQUIRE(pf.controls.size() >= 1);
    const ValidationReport rep = validate_controls(pf.controls, grid);
    CHECK(rep.ok());
  }
  CHECK(count >= 5);
}
#endif
