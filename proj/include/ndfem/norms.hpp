#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ndfem/fe_space.hpp"

namespace ndfem {

/// A piecewise-H^2 field addressed by (cell, reference point): everything the
/// broken second-order norm needs. Gradients are one-sided traces.
struct BrokenH2Field {
  std::function<double(int cell, const Vec2& xref)> value;
  std::function<Vec2(int cell, const Vec2& xref)> grad;
  std::function<Mat2(int cell, const Vec2& xref)> hess;
};

BrokenH2Field as_broken_field(const FeFunction& u);

/// Exact reference solution with analytic derivatives.
struct ExactSolution {
  ScalarFn value;
  std::function<Vec2(const Vec2&)> grad;
  MatrixFn hess;
};

/// Broken second-order (semi-)norm: L^p norm of the elementwise Hessian plus
/// the h_F^(1-p)-weighted L^p norm of gradient jumps over interior faces.
/// Valid for p in (1, inf).
double w2ph_norm(const FeSpace& space, const BrokenH2Field& v, double p);
double w2ph_norm(const FeFunction& u, double p);

/// Volume and jump contributions separately (volume, jump); the norm is the
/// sum of the two.
std::pair<double, double> w2ph_norm_parts(const FeSpace& space, const BrokenH2Field& v, double p);

/// Mesh-dependent dual norm at p = 2: equals the L^2 norm of the V_h
/// projection of w. Other exponents are rejected (see the p = 2 restriction
/// of the stability audit).
double lph_dual_norm(const FeSpace& vh, const ScalarFn& w, double p = 2.0);

/// Experimental orders of convergence: EOC_k = log(e_k/e_{k+1}) /
/// log(h_k/h_{k+1}); entries are empty where an error is non-positive.
std::vector<std::optional<double>> estimate_order(const std::vector<double>& errors,
                                                  const std::vector<double>& h);

/// Error measures of a discrete solution against a manufactured solution.
struct ErrorReport {
  double p = 2.0;
  int level = 0;
  double h = 0.0;
  int n_dofs = 0;
  double lp = 0.0;          // ||u - u_h||_Lp
  double w1p_semi = 0.0;    // |u - u_h|_W1p
  double w2ph = 0.0;        // broken second-order norm of the error
  double w2ph_volume = 0.0;
  double w2ph_jump = 0.0;
  double best_approx_w2ph = 0.0;    // ||u - I_h u|| in the same norm
  double hess_proj_error = 0.0;     // ||Pbar(D^2 u) - D^2 u||_Lp
};

ErrorReport error_report(const FeSpace& vh, const FeSpace& vbar, const FeFunction& u_h,
                         const ExactSolution& exact, double p, int level = 0);

}  // namespace ndfem
