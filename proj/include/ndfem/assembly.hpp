#pragma once

#include <functional>
#include <memory>
#include <string>

#include "ndfem/coefficients.hpp"
#include "ndfem/lifting.hpp"

namespace ndfem {

/// Coefficient snapshot at one quadrature point, already carrying the scalar
/// weight that multiplies the whole equation (gamma for the linear scheme,
/// the per-control gamma for frozen-policy systems).
struct WeightedCoeffs {
  Mat2 A;
  Vec2 b = Vec2::Zero();
  double c = 0.0;
  double f = 0.0;
  double weight = 1.0;
};

/// Evaluates problem data at quadrature point q of a cell (x is the physical
/// position of that point). Throwing here aborts assembly with the point
/// coordinates attached.
using CoeffProvider = std::function<WeightedCoeffs(int cell, int q, const Vec2& x)>;

/// Provider for a single control: weight = Tr(A)/|A|^2 evaluated pointwise.
CoeffProvider make_provider(const Control& control);

struct AssembledOperator {
  SparseMat matrix;
  Eigen::VectorXd load;
  std::string tag;  // nondiv | constant-A | shifted-laplacian
};

/// Assembles the weighted non-divergence bilinear form
///   M[a][b] = int weight (A : H(phi_b) + b . grad phi_b + c phi_b) phi_a
/// with H realized through the materialized lifting maps, plus the load
/// F[a] = int weight f phi_a.
AssembledOperator assemble_nondiv(const LiftingOperator& lift, const CoeffProvider& coeff);

/// Shifted Laplacian -(grad w, grad v) - lambda (w, v): assembled exactly
/// symmetric, negative definite for lambda > 0. Provides the resolvent-type
/// solve y = M_lambda(g) defined by -(grad y, grad v) - lambda (y, v) = (g, v).
class ShiftedLaplacianSolver {
 public:
  ShiftedLaplacianSolver(const FeSpace& vh, double lambda);

  double lambda() const { return lambda_; }
  const SparseMat& matrix() const { return S_; }          // the negative-definite form
  const SparseMat& stiffness() const { return K_; }       // (grad phi_b, grad phi_a)

  /// Solves (K + lambda M) x = rhs (the negated system; SPD).
  Eigen::VectorXd solve_spd(const Eigen::VectorXd& rhs) const;

  /// y = M_lambda(g) for the V_h functional rhs g_a = (g, phi_a).
  Eigen::VectorXd apply_resolvent(const Eigen::VectorXd& g) const { return solve_spd(-g); }

 private:
  const FeSpace* vh_;
  double lambda_;
  SparseMat K_, S_, P_;  // stiffness, -(K + lambda M), K + lambda M
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> solver_;
};

/// Riesz representer in V_h of v -> int (A0 : H(w)) v for a constant matrix
/// A0: one V_h mass solve against the lifted-Hessian pairing.
FeFunction apply_constant_operator(const LiftingOperator& lift, const Mat2& A0,
                                   const FeFunction& w);

struct LinearSolveInfo {
  bool singular = false;
  std::string solver;      // sparse-lu | bicgstab
  double residual = 0.0;   // ||M u - F||_inf / ||F||_inf
  std::string message;
};

/// Direct sparse solve (BiCGSTAB beyond kDirectSolveLimit DOFs). The residual
/// is verified against 1e-9 relative with one step of iterative refinement.
inline constexpr int kDirectSolveLimit = 200000;
FeFunction solve_linear_system(const FeSpace& vh, const AssembledOperator& op,
                               LinearSolveInfo& info);

/// Convenience: assemble + solve for a single control.
FeFunction solve_linear_nondiv(const LiftingOperator& lift, const Control& control,
                               LinearSolveInfo& info);

/// ||P_h(weight (A : H(w) + b . grad w + c w))||_L2 computed through the
/// assembled operator; used by the stability-ratio audit.
double projected_operator_l2(const LiftingOperator& lift, const AssembledOperator& op,
                             const FeFunction& w);

}  // namespace ndfem
