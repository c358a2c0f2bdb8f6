#include "ndfem/norms.hpp"

#include <cmath>
#include <stdexcept>

namespace ndfem {

BrokenH2Field as_broken_field(const FeFunction& u) {
  BrokenH2Field f;
  f.value = [&u](int k, const Vec2& x) { return u.value(k, x); };
  f.grad = [&u](int k, const Vec2& x) { return u.gradient(k, x); };
  f.hess = [&u](int k, const Vec2& x) { return u.hessian(k, x); };
  return f;
}

std::pair<double, double> w2ph_norm_parts(const FeSpace& space, const BrokenH2Field& v, double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("w2ph_norm: p must lie in (1, inf)");
  const Mesh& mesh = space.mesh();
  const auto& cell_rule = space.cell_rule();
  const auto& face_rule = space.face_rule();

  double vol = 0.0;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    for (int q = 0; q < cell_rule.size(); ++q) {
      const Mat2 H = v.hess(k, cell_rule.points[q]);
      vol += cell_rule.weights[q] * detJ * std::pow(H.norm(), p);
    }
  }

  double jump = 0.0;
  for (const Face& f : mesh.interior_faces) {
    const Vec2 a = mesh.vertices[f.vertices[0]];
    const Vec2 b = mesh.vertices[f.vertices[1]];
    double acc = 0.0;
    for (int q = 0; q < face_rule.size(); ++q) {
      const Vec2 xq = a + face_rule.points[q] * (b - a);
      const Vec2 gp = v.grad(f.cell_plus, mesh.map_to_reference(f.cell_plus, xq));
      const Vec2 gm = v.grad(f.cell_minus, mesh.map_to_reference(f.cell_minus, xq));
      acc += face_rule.weights[q] * f.length * std::pow((gp - gm).norm(), p);
    }
    jump += std::pow(f.length, 1.0 - p) * acc;
  }
  return {std::pow(vol, 1.0 / p), std::pow(jump, 1.0 / p)};
}

double w2ph_norm(const FeSpace& space, const BrokenH2Field& v, double p) {
  const auto [vol, jump] = w2ph_norm_parts(space, v, p);
  return vol + jump;
}

double w2ph_norm(const FeFunction& u, double p) {
  return w2ph_norm(*u.space, as_broken_field(u), p);
}

double lph_dual_norm(const FeSpace& vh, const ScalarFn& w, double p) {
  if (p != 2.0)
    throw std::invalid_argument(
        "lph_dual_norm: unsupported exponent; only p = 2 is realized exactly (as the L2 norm "
        "of the V_h projection, per the p = 2 restriction of the dual-norm machinery)");
  if (vh.kind() != SpaceKind::ContinuousZeroTrace)
    throw std::invalid_argument("lph_dual_norm: expects the continuous space");
  const Eigen::VectorXd rhs = assemble_load(vh, w);
  const Eigen::VectorXd c = vh.solve_mass(rhs);
  return std::sqrt(std::max(0.0, c.dot(rhs)));
}

std::vector<std::optional<double>> estimate_order(const std::vector<double>& errors,
                                                  const std::vector<double>& h) {
  if (errors.size() != h.size() || errors.size() < 2)
    throw std::invalid_argument("estimate_order: need matching error/h lists with >= 2 levels");
  std::vector<std::optional<double>> eoc;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    if (errors[k] <= 0.0 || errors[k + 1] <= 0.0) {
      eoc.push_back(std::nullopt);
      continue;
    }
    eoc.push_back(std::log(errors[k] / errors[k + 1]) / std::log(h[k] / h[k + 1]));
  }
  return eoc;
}

ErrorReport error_report(const FeSpace& vh, const FeSpace& vbar, const FeFunction& u_h,
                         const ExactSolution& exact, double p, int level) {
  const Mesh& mesh = vh.mesh();
  ErrorReport rep;
  rep.p = p;
  rep.level = level;
  rep.h = mesh.h_max;
  rep.n_dofs = vh.n_dofs();

  // Error field e = u - u_h in broken form.
  BrokenH2Field err;
  err.value = [&](int k, const Vec2& xr) {
    return exact.value(mesh.map_to_physical(k, xr)) - u_h.value(k, xr);
  };
  err.grad = [&](int k, const Vec2& xr) {
    return Vec2(exact.grad(mesh.map_to_physical(k, xr)) - u_h.gradient(k, xr));
  };
  err.hess = [&](int k, const Vec2& xr) {
    return Mat2(exact.hess(mesh.map_to_physical(k, xr)) - u_h.hessian(k, xr));
  };

  const auto& rule = vh.cell_rule();
  double lp = 0.0, w1p = 0.0;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * detJ;
      lp += w * std::pow(std::abs(err.value(k, rule.points[q])), p);
      w1p += w * std::pow(err.grad(k, rule.points[q]).norm(), p);
    }
  }
  rep.lp = std::pow(lp, 1.0 / p);
  rep.w1p_semi = std::pow(w1p, 1.0 / p);

  const auto [vol, jump] = w2ph_norm_parts(vh, err, p);
  rep.w2ph_volume = vol;
  rep.w2ph_jump = jump;
  rep.w2ph = vol + jump;

  // Best-approximation proxies.
  const FeFunction ih = interpolate_nodal(vh, exact.value);
  BrokenH2Field ierr;
  ierr.value = [&](int k, const Vec2& xr) {
    return exact.value(mesh.map_to_physical(k, xr)) - ih.value(k, xr);
  };
  ierr.grad = [&](int k, const Vec2& xr) {
    return Vec2(exact.grad(mesh.map_to_physical(k, xr)) - ih.gradient(k, xr));
  };
  ierr.hess = [&](int k, const Vec2& xr) {
    return Mat2(exact.hess(mesh.map_to_physical(k, xr)) - ih.hessian(k, xr));
  };
  const auto [ivol, ijump] = w2ph_norm_parts(vh, ierr, p);
  rep.best_approx_w2ph = ivol + ijump;

  const MatrixFeFunction Pbar = project_l2_matrix(vbar, exact.hess);
  double hp = 0.0;
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const double detJ = 2.0 * mesh.cell_area(k);
    for (int q = 0; q < vbar.cell_rule().size(); ++q) {
      const Vec2 xr = vbar.cell_rule().points[q];
      const Mat2 diff = Pbar.value(k, xr) - exact.hess(mesh.map_to_physical(k, xr));
      hp += vbar.cell_rule().weights[q] * detJ * std::pow(diff.norm(), p);
    }
  }
  rep.hess_proj_error = std::pow(hp, 1.0 / p);
  return rep;
}

}  // namespace ndfem
