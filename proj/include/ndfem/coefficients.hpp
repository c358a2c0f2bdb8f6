#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ndfem/expression.hpp"
#include "ndfem/mesh.hpp"

namespace ndfem {

/// Scalar problem-data field: a constant, a parsed expression in x and y, a
/// per-cell table, or a programmatic callback. The smoothness degree hints
/// how accurately quadrature should resolve it (negative = unknown).
class CoefficientField {
 public:
  static CoefficientField constant(double v);
  static CoefficientField expression(const std::string& source, int smoothness = -1);
  static CoefficientField per_cell(std::vector<double> values);
  static CoefficientField analytic(std::function<double(const Vec2&)> fn, int smoothness = -1);

  double eval(const Vec2& x, int cell = -1) const;
  bool is_constant(double* value = nullptr) const;
  int smoothness() const { return smoothness_; }

  /// Symbolic derivative; available for constants and expressions only.
  bool differentiable() const;
  CoefficientField derivative(int axis) const;

  std::string describe() const;

 private:
  enum class Kind { Constant, Expr, PerCell, Analytic } kind_ = Kind::Constant;
  double const_ = 0.0;
  std::optional<Expression> expr_;
  std::string expr_src_;
  std::vector<double> table_;
  std::function<double(const Vec2&)> fn_;
  int smoothness_ = 0;
};

struct MatrixCoefficient {
  std::array<CoefficientField, 4> entry;  // row-major (a11 a12 a21 a22)
  Mat2 eval(const Vec2& x, int cell = -1) const;
  int smoothness() const;
};

struct VectorCoefficient {
  std::array<CoefficientField, 2> entry;
  Vec2 eval(const Vec2& x, int cell = -1) const;
};

/// One control: the coefficient tuple (A, b, c, f) of a linear operator.
struct Control {
  std::string label;
  MatrixCoefficient A;
  VectorCoefficient b;
  CoefficientField c = CoefficientField::constant(0.0);
  CoefficientField f = CoefficientField::constant(0.0);
};

/// Finite, non-empty control set.
struct ControlSet {
  std::vector<Control> controls;

  int size() const { return static_cast<int>(controls.size()); }
  const Control& operator[](int i) const { return controls[i]; }
  int max_smoothness() const;
};

// ---------------------------------------------------------------------------
// Weight functions
// ---------------------------------------------------------------------------

/// Tr(A) / |A|^2 with the Frobenius norm; rescales A toward the identity.
/// Throws std::domain_error when |A| = 0.
double gamma_weight(const Mat2& A);

/// (Tr A + |c|/lambda) / (|A|^2 + |b|^2/(2 lambda) + (c/lambda)^2);
/// requires lambda > 0 and c <= 0.
double gamma_lambda_weight(const Mat2& A, const Vec2& b, double c, double lambda);

// ---------------------------------------------------------------------------
// Cordes-type feasibility conditions
// ---------------------------------------------------------------------------

enum class CordesCondition { PdeGeneral, FemGeneral, PdeSpecial, FemSpecial };

CordesCondition cordes_condition_from_string(const std::string& id);
std::string to_string(CordesCondition c);

/// Result of a pointwise feasibility sweep. `eps_sup` is the raw supremum of
/// admissible epsilon implied by the worst sampled point; `eps_max` is the
/// same value saturated strictly below 1 (the admissible range is [., 1)).
/// When the fem-general denominator is non-positive somewhere, the points are
/// counted and eps is -infinity.
struct CordesReport {
  CordesCondition condition = CordesCondition::FemGeneral;
  int dimension = 2;
  double lambda = 0.0;
  double worst_lhs = 0.0;
  double eps_sup = 0.0;
  double eps_max = 0.0;
  Vec2 worst_point = Vec2::Zero();
  int worst_control = 0;
  long infeasible_points = 0;
  Vec2 first_infeasible_point = Vec2::Zero();
  bool feasible() const { return infeasible_points == 0 && eps_max > 0.0; }
};

/// Evaluates the chosen condition at every sample point and control;
/// dimension enters only through the 1/(d + eps) (general) or 1/(d - 1 + eps)
/// (special) thresholds.
CordesReport check_cordes(CordesCondition condition, const ControlSet& controls, double lambda,
                          const std::vector<Vec2>& sample_points, int dimension = 2);

struct LambdaSearchResult {
  double lambda = 0.0;
  double eps_sup = 0.0;  // min over samples of the per-point eps at lambda
  CordesReport report;
};

/// Maximizes the feasibility margin over lambda in [lo, hi]: 64-point log
/// grid followed by golden-section refinement to relative width 1e-6.
/// Deterministic. If nothing is feasible the best (non-positive) value found
/// is returned.
LambdaSearchResult search_lambda(CordesCondition condition, const ControlSet& controls,
                                 const std::vector<Vec2>& sample_points, double lambda_lo,
                                 double lambda_hi, int dimension = 2);

// ---------------------------------------------------------------------------
// Sampling-based validation of the standing assumptions
// ---------------------------------------------------------------------------

struct ValidationReport {
  double min_eigenvalue = 0.0;  // of A over all samples/controls (ellipticity nu)
  double max_asymmetry = 0.0;   // max |a12 - a21|
  double max_c = 0.0;           // c <= 0 required
  Vec2 worst_point = Vec2::Zero();
  bool ok() const { return min_eigenvalue > 0.0 && max_asymmetry <= 1e-12 && max_c <= 1e-14; }
};

ValidationReport validate_controls(const ControlSet& controls, const std::vector<Vec2>& sample_points);

/// Sample grid helper: an m x m uniform lattice over the bounding box of the
/// mesh vertices restricted to cell interiors is not necessary here; the
/// checker combines mesh quadrature points with this plain lattice.
std::vector<Vec2> uniform_grid_samples(double x0, double x1, double y0, double y1, int m);

}  // namespace ndfem
