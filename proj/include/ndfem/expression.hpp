#pragma once

#include <memory>
#include <stdexcept>
#include <string>

namespace ndfem {

/// Error in the coefficient expression language; `offset` is the byte offset
/// into the source string.
struct ExprError : std::runtime_error {
  std::size_t offset;
  ExprError(std::size_t off, const std::string& msg)
      : std::runtime_error("expression error at byte " + std::to_string(off) + ": " + msg),
        offset(off) {}
};

/// Immutable parsed expression in the variables x, y.
///
/// Grammar: numbers, x, y, pi, e, operators + - * / ^ (usual precedence,
/// ^ right-associative), parentheses, and the functions
/// sin cos exp sqrt abs step (one argument) and min max (two arguments).
/// step(t) is 0 for t < 0 and 1 otherwise.
class Expression {
 public:
  static Expression parse(const std::string& source);

  double eval(double x, double y) const;

  /// Symbolic partial derivative (axis 0 = x, 1 = y). abs/min/max
  /// differentiate through step() almost everywhere; a variable exponent in
  /// ^ is rejected.
  Expression derivative(int axis) const;

  std::string to_string() const;
  bool is_constant(double* value = nullptr) const;

  struct Node;

 private:
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace ndfem
