#include "ndfem/hjb.hpp"

#include <cmath>
#include <stdexcept>

#include "ndfem/parallel.hpp"

namespace ndfem {

HjbSolver::HjbSolver(const LiftingOperator& lift, const ControlSet& controls, double lambda)
    : lift_(&lift), controls_(&controls), lambda_(lambda), shifted_(lift.vh(), lambda) {
  if (controls.size() == 0) throw std::invalid_argument("HjbSolver: empty control set");

  const FeSpace& vh = lift.vh();
  const Mesh& mesh = vh.mesh();
  const int nq = vh.cell_rule().size();
  cache_.resize(controls.size());
  for (int a = 0; a < controls.size(); ++a) {
    cache_[a].resize(std::size_t(mesh.n_cells()) * nq);
    for (int k = 0; k < mesh.n_cells(); ++k) {
      for (int q = 0; q < nq; ++q) {
        const Vec2 x = mesh.map_to_physical(k, vh.cell_rule().points[q]);
        PointData& pd = cache_[a][std::size_t(k) * nq + q];
        const Control& ctl = controls[a];
        pd.A = ctl.A.eval(x, k);
        pd.b = ctl.b.eval(x, k);
        pd.c = ctl.c.eval(x, k);
        pd.f = ctl.f.eval(x, k);
        pd.gamma = gamma_weight(pd.A);
      }
    }
  }
}

SupField HjbSolver::eval_sup_residual(const FeFunction& u) const {
  const FeSpace& vh = lift_->vh();
  const FeSpace& vbar = lift_->vbar();
  const Mesh& mesh = vh.mesh();
  const int nq = vh.cell_rule().size();
  const int nloc = vh.n_local();

  std::array<Eigen::VectorXd, 4> hbar;
  for (int comp = 0; comp < 4; ++comp)
    hbar[comp] = lift_->hessian_map(comp / 2, comp % 2) * u.coeffs;

  SupField out;
  out.g.assign(std::size_t(mesh.n_cells()) * nq, 0.0);
  out.argmax.assign(std::size_t(mesh.n_cells()) * nq, 0);

  parallel_for(mesh.n_cells(), [&](std::size_t kc) {
    const int k = static_cast<int>(kc);
    const Mat2 Jinv = mesh.jacobian_inverse(k);
    const auto& dofs = vh.cell_dofs(k);
    const auto& bar_dofs = vbar.cell_dofs(k);
    for (int q = 0; q < nq; ++q) {
      const auto phi = vh.values_at_q().row(q);
      const Eigen::MatrixXd gphys = vh.ref_gradients_at_q(q) * Jinv;
      double uval = 0.0;
      Vec2 ugrad = Vec2::Zero();
      for (int l = 0; l < nloc; ++l) {
        if (dofs[l] < 0) continue;
        uval += u.coeffs[dofs[l]] * phi(l);
        ugrad += u.coeffs[dofs[l]] * gphys.row(l).transpose();
      }
      Mat2 H = Mat2::Zero();
      for (int l = 0; l < nloc; ++l) {
        const double v = phi(l);
        const int bd = bar_dofs[l];
        H(0, 0) += hbar[0][bd] * v;
        H(0, 1) += hbar[1][bd] * v;
        H(1, 0) += hbar[2][bd] * v;
        H(1, 1) += hbar[3][bd] * v;
      }
      const std::size_t idx = std::size_t(k) * nq + q;
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (int a = 0; a < controls_->size(); ++a) {
        const PointData& pd = cache_[a][idx];
        const double val =
            pd.gamma * (pd.A.cwiseProduct(H).sum() + pd.b.dot(ugrad) + pd.c * uval - pd.f);
        if (val > best) {  // strict: ties keep the smallest control index
          best = val;
          best_a = a;
        }
      }
      out.g[idx] = best;
      out.argmax[idx] = best_a;
    }
  });
  return out;
}

namespace {

Eigen::VectorXd pointwise_load(const FeSpace& vh, const std::vector<double>& values) {
  const Mesh& mesh = vh.mesh();
  const auto& rule = vh.cell_rule();
  const int nq = rule.size();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(vh.n_dofs());
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    const auto& dofs = vh.cell_dofs(k);
    for (int q = 0; q < nq; ++q) {
      const double w = rule.weights[q] * detJ * values[std::size_t(k) * nq + q];
      for (int l = 0; l < vh.n_local(); ++l)
        if (dofs[l] >= 0) rhs[dofs[l]] += w * vh.values_at_q()(q, l);
    }
  }
  return rhs;
}

}  // namespace

double HjbSolver::residual_l2(const SupField& sup) const {
  const FeSpace& vh = lift_->vh();
  const Eigen::VectorXd rhs = pointwise_load(vh, sup.g);
  const Eigen::VectorXd c = vh.solve_mass(rhs);
  return std::sqrt(std::max(0.0, c.dot(rhs)));
}

HjbState HjbSolver::initial_state() const {
  HjbState st;
  st.u = FeFunction(lift_->vh());
  st.iteration = 0;
  st.sup = eval_sup_residual(st.u);
  return st;
}

void HjbSolver::append_record(HjbState& next, const FeFunction& prev) const {
  const FeSpace& vh = lift_->vh();
  const Eigen::VectorXd d = next.u.coeffs - prev.coeffs;
  const double grad2 = d.dot(shifted_.stiffness() * d);
  const double l22 = d.dot(vh.mass_matrix() * d);
  IterationRecord rec;
  rec.k = next.iteration;
  rec.inc_h1 = std::sqrt(std::max(0.0, 2.0 * lambda_ * grad2 + lambda_ * lambda_ * l22));
  FeFunction diff(vh, d);
  const double w2 = w2ph_norm(diff, 2.0);
  rec.inc_w2 = std::sqrt(std::max(0.0, w2 * w2 + 2.0 * lambda_ * grad2 + lambda_ * lambda_ * l22));
  rec.residual = residual_l2(next.sup);
  rec.histogram.assign(controls_->size(), 0);
  for (int a : next.sup.argmax) ++rec.histogram[a];
  next.history.push_back(std::move(rec));
}

HjbState HjbSolver::fixed_point_step(const HjbState& state) const {
  const FeSpace& vh = lift_->vh();
  const Mesh& mesh = vh.mesh();
  const int nq = vh.cell_rule().size();
  const int nloc = vh.n_local();

  // r = g(u) - I : H(u) + lambda u at quadrature points.
  std::array<Eigen::VectorXd, 2> hdiag = {lift_->hessian_map(0, 0) * state.u.coeffs,
                                          lift_->hessian_map(1, 1) * state.u.coeffs};
  std::vector<double> rvals(state.sup.g.size());
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const auto& dofs = vh.cell_dofs(k);
    const auto& bar_dofs = lift_->vbar().cell_dofs(k);
    for (int q = 0; q < nq; ++q) {
      const auto phi = vh.values_at_q().row(q);
      double uval = 0.0, trace = 0.0;
      for (int l = 0; l < nloc; ++l) {
        if (dofs[l] >= 0) uval += state.u.coeffs[dofs[l]] * phi(l);
        trace += (hdiag[0][bar_dofs[l]] + hdiag[1][bar_dofs[l]]) * phi(l);
      }
      const std::size_t idx = std::size_t(k) * nq + q;
      rvals[idx] = state.sup.g[idx] - trace + lambda_ * uval;
    }
  }

  HjbState next;
  next.u = FeFunction(vh, shifted_.solve_spd(pointwise_load(vh, rvals)));
  next.iteration = state.iteration + 1;
  next.sup = eval_sup_residual(next.u);
  next.history = state.history;
  append_record(next, state.u);
  return next;
}

HjbState HjbSolver::policy_iteration_step(const HjbState& state) const {
  const FeSpace& vh = lift_->vh();
  const int nq = vh.cell_rule().size();
  const SupField& sup = state.sup;

  CoeffProvider frozen = [this, &sup, nq](int cell, int q, const Vec2&) {
    const std::size_t idx = std::size_t(cell) * nq + q;
    const PointData& pd = cache_[sup.argmax[idx]][idx];
    return WeightedCoeffs{pd.A, pd.b, pd.c, pd.f, pd.gamma};
  };

  const AssembledOperator op = assemble_nondiv(*lift_, frozen);
  LinearSolveInfo info;
  FeFunction u = solve_linear_system(vh, op, info);
  if (info.singular) return fixed_point_step(state);  // certified fallback

  HjbState next;
  next.u = std::move(u);
  next.iteration = state.iteration + 1;
  next.sup = eval_sup_residual(next.u);
  next.history = state.history;
  append_record(next, state.u);
  return next;
}

std::vector<int> HjbSolver::majority_control(const SupField& sup) const {
  const FeSpace& vh = lift_->vh();
  const int nq = vh.cell_rule().size();
  const int nc = vh.mesh().n_cells();
  std::vector<int> out(nc, 0);
  std::vector<long> counts(controls_->size());
  for (int k = 0; k < nc; ++k) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int q = 0; q < nq; ++q) ++counts[sup.argmax[std::size_t(k) * nq + q]];
    out[k] = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  return out;
}

HjbReport HjbSolver::solve(double tol, int max_iter, FeFunction* out) const {
  if (!(tol > 0.0)) throw std::invalid_argument("HjbSolver::solve: tol must be > 0");
  HjbState state = initial_state();
  HjbReport rep;
  rep.lambda = lambda_;
  while (state.iteration < max_iter) {
    state = fixed_point_step(state);
    if (state.history.back().inc_h1 <= tol) break;
  }
  rep.iterations = state.iteration;
  rep.history = state.history;
  rep.final_increment = state.history.empty() ? 0.0 : state.history.back().inc_h1;
  rep.final_residual = residual_l2(state.sup);
  rep.converged = rep.final_increment <= tol;
  if (state.history.size() >= 2) {
    const auto& h = state.history;
    const double prev = h[h.size() - 2].inc_h1;
    rep.last_ratio = prev > 0.0 ? h.back().inc_h1 / prev : 0.0;
  }
  rep.cell_majority_control = majority_control(state.sup);
  if (out) *out = state.u;
  return rep;
}

HjbReport HjbSolver::solve_policy(double tol, int max_iter, FeFunction* out) const {
  if (!(tol > 0.0)) throw std::invalid_argument("HjbSolver::solve_policy: tol must be > 0");
  HjbState state = initial_state();
  HjbReport rep;
  rep.lambda = lambda_;
  std::vector<int> prev_argmax;
  while (state.iteration < max_iter) {
    prev_argmax = state.sup.argmax;
    state = policy_iteration_step(state);
    if (state.sup.argmax == prev_argmax && state.history.back().inc_h1 <= tol) break;
  }
  rep.iterations = state.iteration;
  rep.history = state.history;
  rep.final_increment = state.history.empty() ? 0.0 : state.history.back().inc_h1;
  rep.final_residual = residual_l2(state.sup);
  rep.converged = state.sup.argmax == prev_argmax && rep.final_increment <= tol;
  if (state.history.size() >= 2) {
    const auto& h = state.history;
    const double prev = h[h.size() - 2].inc_h1;
    rep.last_ratio = prev > 0.0 ? h.back().inc_h1 / prev : 0.0;
  }
  rep.cell_majority_control = majority_control(state.sup);
  if (out) *out = state.u;
  return rep;
}

}  // namespace ndfem
