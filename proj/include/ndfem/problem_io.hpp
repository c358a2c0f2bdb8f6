#pragma once

#include <optional>
#include <string>

#include "ndfem/coefficients.hpp"
#include "ndfem/norms.hpp"

namespace ndfem {

/// Parsed problem description (structured key-value text format).
///
/// Sections:
///   [domain]          tag = unit-square | l-shape | file, n = <int>,
///                     mesh = <path> (tag = file only)
///   [discretization]  r, refinements, p, q_coeff (optional quadrature hint)
///   [manufactured]    u = <expression>            (optional)
///   [controls]        repeated blocks started by control = <label> with
///                     A = const a11 a12 a21 a22  |  A = e11 ; e12 ; e21 ; e22
///                     b = const b1 b2            |  b = e1 ; e2
///                     c = <expression>, f = <expression> | from-exact,
///                     slack = <expression> (only with from-exact; adds to f
///                     so the control's residual at the exact solution is
///                     -slack <= 0)
///   [cordes]          condition = pde-general | fem-general | pde-special |
///                     fem-special, lambda = <x> or lambda_range = <lo> <hi>
struct ProblemFile {
  std::string domain_tag = "unit-square";
  int n = 8;
  std::string mesh_path;

  int degree = 2;
  int refinements = 3;
  double p = 2.0;
  int q_coeff = -1;

  std::optional<std::string> manufactured_u;
  ControlSet controls;

  std::optional<CordesCondition> cordes_condition;
  std::optional<double> lambda;
  std::optional<std::pair<double, double>> lambda_range;
};

/// Parses the text of a problem file. Errors carry the byte offset into the
/// text and the line number.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

/// Analytic solution bundle built from an expression by symbolic
/// differentiation of the parse tree.
ExactSolution exact_from_expression(const std::string& source);

}  // namespace ndfem
