#pragma once

#include <vector>

#include "ndfem/assembly.hpp"
#include "ndfem/norms.hpp"

namespace ndfem {

/// Pointwise sup-residual data at every cell quadrature point: the Bellman
/// residual value and the control attaining it (ties go to the smallest
/// control index).
struct SupField {
  std::vector<double> g;     // cell * nq + q
  std::vector<int> argmax;   // same indexing
};

struct IterationRecord {
  int k = 0;
  double inc_h1 = 0.0;        // lambda-weighted H1 norm of the increment
  double inc_w2 = 0.0;        // lambda-weighted broken W^{2,2} norm of it
  double residual = 0.0;      // ||P_h g||_L2 at the new iterate
  std::vector<long> histogram;  // active-control counts over quadrature points
};

struct HjbState {
  FeFunction u;
  int iteration = 0;
  SupField sup;  // residual data at u
  std::vector<IterationRecord> history;
};

struct HjbReport {
  bool converged = false;
  int iterations = 0;
  double final_residual = 0.0;  // ||P_h g||_L2
  double final_increment = 0.0;
  double last_ratio = 0.0;  // contraction estimate from the last two increments
  double lambda = 0.0;
  std::vector<IterationRecord> history;
  std::vector<int> cell_majority_control;  // per-cell majority of the argmax field
};

/// Fixed-point solver for the discrete Bellman equation
///   (sup_a gamma^a [A^a : H(u) + b^a . grad u + c^a u - f^a], v) = 0,
/// iterating u -> solve of (grad u', grad v) + lambda (u', v) =
/// (g(u) - I:H(u) + lambda u, v), plus a Howard-type policy-iteration
/// accelerator that freezes the argmax field and solves the resulting linear
/// non-divergence system.
class HjbSolver {
 public:
  HjbSolver(const LiftingOperator& lift, const ControlSet& controls, double lambda);

  const FeSpace& vh() const { return lift_->vh(); }
  double lambda() const { return lambda_; }

  SupField eval_sup_residual(const FeFunction& u) const;
  double residual_l2(const SupField& sup) const;  // ||P_h g||_L2

  HjbState initial_state() const;
  HjbState fixed_point_step(const HjbState& state) const;
  HjbState policy_iteration_step(const HjbState& state) const;

  /// Contraction iteration from u0 = 0 until the lambda-weighted H1 increment
  /// drops below tol. Non-convergence is reported, not thrown.
  HjbReport solve(double tol = 1e-8, int max_iter = 500, FeFunction* out = nullptr) const;

  /// Policy iteration with the contraction step as fallback; stops when the
  /// argmax field repeats and the increment is below tol.
  HjbReport solve_policy(double tol = 1e-8, int max_iter = 100, FeFunction* out = nullptr) const;

 private:
  void append_record(HjbState& next, const FeFunction& prev) const;
  std::vector<int> majority_control(const SupField& sup) const;

  const LiftingOperator* lift_;
  const ControlSet* controls_;
  double lambda_;
  ShiftedLaplacianSolver shifted_;

  // Cached control data at every quadrature point: [control][cell*nq + q].
  struct PointData {
    Mat2 A;
    Vec2 b;
    double c, f, gamma;
  };
  std::vector<std::vector<PointData>> cache_;
};

}  // namespace ndfem
