#include "ndfem/assembly.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace ndfem {

CoeffProvider make_provider(const Control& control) {
  return [&control](int cell, int, const Vec2& x) {
    WeightedCoeffs out;
    out.A = control.A.eval(x, cell);
    out.b = control.b.eval(x, cell);
    out.c = control.c.eval(x, cell);
    out.f = control.f.eval(x, cell);
    out.weight = gamma_weight(out.A);
    return out;
  };
}

AssembledOperator assemble_nondiv(const LiftingOperator& lift, const CoeffProvider& coeff) {
  const FeSpace& vh = lift.vh();
  const FeSpace& vbar = lift.vbar();
  const Mesh& mesh = vh.mesh();
  const auto& rule = vh.cell_rule();
  const int nloc = vh.n_local();
  const int n = vh.n_dofs();
  const int nbar = vbar.n_dofs();

  std::array<std::vector<Eigen::Triplet<double>>, 4> wtrips;
  std::vector<Eigen::Triplet<double>> ltrips;
  Eigen::VectorXd F = Eigen::VectorXd::Zero(n);

  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    const Mat2 Jinv = mesh.jacobian_inverse(k);
    const auto& dofs = vh.cell_dofs(k);
    const auto& bar_dofs = vbar.cell_dofs(k);

    Eigen::MatrixXd low = Eigen::MatrixXd::Zero(nloc, nloc);
    std::array<Eigen::MatrixXd, 4> wac;
    for (auto& W : wac) W = Eigen::MatrixXd::Zero(nloc, nloc);

    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 x = mesh.map_to_physical(k, rule.points[q]);
      WeightedCoeffs cv;
      try {
        cv = coeff(k, q, x);
      } catch (const std::exception& e) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "assemble_nondiv: coefficient evaluation failed at (%.17g, %.17g): %s",
                      x.x(), x.y(), e.what());
        throw std::runtime_error(buf);
      }
      const double w = rule.weights[q] * detJ * cv.weight;
      const auto phi = vh.values_at_q().row(q);
      const Eigen::MatrixXd gphys = vh.ref_gradients_at_q(q) * Jinv;

      // A : H part, accumulated against the broken basis.
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          wac[2 * i + j].noalias() += (w * cv.A(i, j)) * phi.transpose() * phi;
      // Drift and reaction.
      low.noalias() += w * phi.transpose() * (gphys * cv.b).transpose();
      low.noalias() += (w * cv.c) * phi.transpose() * phi;
      // Load.
      for (int a = 0; a < nloc; ++a)
        if (dofs[a] >= 0) F[dofs[a]] += w * cv.f * phi(a);
    }

    for (int a = 0; a < nloc; ++a) {
      if (dofs[a] < 0) continue;
      for (int m = 0; m < nloc; ++m) {
        for (int comp = 0; comp < 4; ++comp) {
          const double v = wac[comp](a, m);
          if (v != 0.0) wtrips[comp].emplace_back(dofs[a], bar_dofs[m], v);
        }
        if (dofs[m] >= 0 && low(a, m) != 0.0) ltrips.emplace_back(dofs[a], dofs[m], low(a, m));
      }
    }
  }

  AssembledOperator op;
  op.tag = "nondiv";
  op.load = std::move(F);
  SparseMat M(n, n);
  M.setFromTriplets(ltrips.begin(), ltrips.end());
  for (int comp = 0; comp < 4; ++comp) {
    SparseMat W(n, nbar);
    W.setFromTriplets(wtrips[comp].begin(), wtrips[comp].end());
    M += SparseMat(W * lift.hessian_map(comp / 2, comp % 2));
  }
  op.matrix = std::move(M);
  return op;
}

ShiftedLaplacianSolver::ShiftedLaplacianSolver(const FeSpace& vh, double lambda)
    : vh_(&vh), lambda_(lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ShiftedLaplacianSolver: lambda must be > 0");
  const Mesh& mesh = vh.mesh();
  const auto& rule = vh.cell_rule();
  const int nloc = vh.n_local();

  // Upper-triangle assembly mirrored afterwards keeps the matrix exactly
  // symmetric.
  std::vector<Eigen::Triplet<double>> ktrips;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    const Mat2 Jinv = mesh.jacobian_inverse(k);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::MatrixXd gphys = vh.ref_gradients_at_q(q) * Jinv;
      local.noalias() += rule.weights[q] * detJ * gphys * gphys.transpose();
    }
    const auto& dofs = vh.cell_dofs(k);
    for (int a = 0; a < nloc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nloc; ++b)
        if (dofs[b] >= 0 && dofs[a] <= dofs[b]) ktrips.emplace_back(dofs[a], dofs[b], local(a, b));
    }
  }
  SparseMat upper(vh.n_dofs(), vh.n_dofs());
  upper.setFromTriplets(ktrips.begin(), ktrips.end());
  K_ = upper.selfadjointView<Eigen::Upper>();

  P_ = K_ + SparseMat(lambda * vh.mass_matrix());
  S_ = SparseMat(-P_);
  solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>();
  solver_->compute(P_);
  if (solver_->info() != Eigen::Success)
    throw std::runtime_error("ShiftedLaplacianSolver: factorization failed");
}

Eigen::VectorXd ShiftedLaplacianSolver::solve_spd(const Eigen::VectorXd& rhs) const {
  return solver_->solve(rhs);
}

FeFunction apply_constant_operator(const LiftingOperator& lift, const Mat2& A0,
                                   const FeFunction& w) {
  const FeSpace& vh = lift.vh();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(vh.n_dofs());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (A0(i, j) == 0.0) continue;
      rhs.noalias() += A0(i, j) * (lift.pairing_matrix() * (lift.hessian_map(i, j) * w.coeffs));
    }
  FeFunction out(vh);
  out.coeffs = vh.solve_mass(rhs);
  return out;
}

FeFunction solve_linear_system(const FeSpace& vh, const AssembledOperator& op,
                               LinearSolveInfo& info) {
  FeFunction u(vh);
  const double fscale = std::max(op.load.lpNorm<Eigen::Infinity>(), 1e-300);

  if (vh.n_dofs() <= kDirectSolveLimit) {
    info.solver = "sparse-lu";
    Eigen::SparseLU<SparseMat> lu;
    lu.compute(op.matrix);
    if (lu.info() != Eigen::Success) {
      info.singular = true;
      info.message =
          "factorization failed: system singular (discrete ellipticity/Cordes violation?)";
      return u;
    }
    u.coeffs = lu.solve(op.load);
    // One step of iterative refinement tightens the residual cheaply.
    Eigen::VectorXd r = op.load - op.matrix * u.coeffs;
    if (r.lpNorm<Eigen::Infinity>() > 1e-12 * fscale) u.coeffs += lu.solve(r);
    r = op.load - op.matrix * u.coeffs;
    info.residual = r.lpNorm<Eigen::Infinity>() / fscale;
  } else {
    info.solver = "bicgstab";
    Eigen::BiCGSTAB<SparseMat> krylov;
    krylov.setTolerance(1e-12);
    krylov.setMaxIterations(20000);
    krylov.compute(op.matrix);
    u.coeffs = krylov.solve(op.load);
    if (krylov.info() != Eigen::Success) {
      info.singular = true;
      info.message = "BiCGSTAB stagnated";
      return u;
    }
    info.residual = (op.load - op.matrix * u.coeffs).lpNorm<Eigen::Infinity>() / fscale;
  }
  if (info.residual > 1e-9) {
    info.message = "solver residual above 1e-9 relative";
  }
  return u;
}

FeFunction solve_linear_nondiv(const LiftingOperator& lift, const Control& control,
                               LinearSolveInfo& info) {
  const AssembledOperator op = assemble_nondiv(lift, make_provider(control));
  return solve_linear_system(lift.vh(), op, info);
}

double projected_operator_l2(const LiftingOperator& lift, const AssembledOperator& op,
                             const FeFunction& w) {
  const Eigen::VectorXd rhs = op.matrix * w.coeffs;  // (weight L w, phi_a)
  const Eigen::VectorXd c = lift.vh().solve_mass(rhs);
  return std::sqrt(std::max(0.0, c.dot(rhs)));
}

}  // namespace ndfem
