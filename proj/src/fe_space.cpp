#include "ndfem/fe_space.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "ndfem/parallel.hpp"

namespace ndfem {

FeSpace::FeSpace(const Mesh& mesh, int degree, SpaceKind kind, int coeff_smoothness)
    : mesh_(&mesh),
      degree_(degree),
      kind_(kind),
      basis_(degree),
      cell_rule_(triangle_quadrature(
          std::max(2 * degree, 2 * degree - 2 + (coeff_smoothness < 0 ? 2 * degree + 2 : coeff_smoothness)))),
      face_rule_(segment_quadrature(
          std::max(2 * degree, 2 * degree - 2 + (coeff_smoothness < 0 ? 2 * degree + 2 : coeff_smoothness)))) {
  if (degree < 2 || degree > 4)
    throw std::invalid_argument("FeSpace: degree must be in [2,4]");

  const int nq = cell_rule_.size();
  const int nloc = basis_.size();
  val_q_.resize(nq, nloc);
  grad_q_.resize(nq);
  hess_q_.resize(nq);
  for (int q = 0; q < nq; ++q) {
    val_q_.row(q) = basis_.values(cell_rule_.points[q]).transpose();
    grad_q_[q] = basis_.gradients(cell_rule_.points[q]);
    hess_q_[q] = basis_.hessians(cell_rule_.points[q]);
  }
  build_dof_map();
}

void FeSpace::build_dof_map() {
  const Mesh& m = *mesh_;
  const int r = degree_;
  const int nloc = basis_.size();
  dof_map_.assign(m.n_cells(), std::vector<int>(nloc, -1));

  if (kind_ == SpaceKind::Discontinuous) {
    n_dofs_ = m.n_cells() * nloc;
    for (int k = 0; k < m.n_cells(); ++k)
      for (int l = 0; l < nloc; ++l) dof_map_[k][l] = k * nloc + l;
    return;
  }

  // Full conforming numbering: vertex nodes, then (r-1) per mesh edge
  // (ordered from the smaller endpoint id to the larger), then interiors.
  const int n_edge_nodes = r - 1;
  const int n_int = (r - 1) * (r - 2) / 2;
  const int edge_offset = m.n_vertices();
  const int int_offset = edge_offset + m.n_faces() * n_edge_nodes;

  // Boundary nodes (zero trace): vertices and edge nodes of boundary faces.
  std::set<int> boundary_vertices;
  std::set<int> boundary_edges;
  for (int i = 0; i < m.n_boundary_faces(); ++i) {
    const Face& f = m.boundary_faces[i];
    boundary_vertices.insert(f.vertices[0]);
    boundary_vertices.insert(f.vertices[1]);
    boundary_edges.insert(m.n_interior_faces() + i);
  }

  std::vector<int> compress(int_offset + m.n_cells() * n_int, -1);
  auto keep = [&](int full_id) -> bool {
    if (full_id < edge_offset) return !boundary_vertices.count(full_id);
    if (full_id < int_offset) {
      const int edge = (full_id - edge_offset) / n_edge_nodes;
      return !boundary_edges.count(edge);
    }
    return true;
  };

  for (int k = 0; k < m.n_cells(); ++k) {
    const auto& cell = m.cells[k];
    for (int l = 0; l < nloc; ++l) {
      const auto& key = basis_.node_keys()[l];
      int full_id = -1;
      if (key.kind == 0) {
        full_id = cell[key.entity];
      } else if (key.kind == 1) {
        const int e = key.entity;
        const int ga = cell[e], gb = cell[(e + 1) % 3];
        const int face_id = m.cell_faces(k)[e];
        // key.index counts from local vertex e; the canonical order runs from
        // the smaller global endpoint id to the larger.
        const int pos = (ga < gb) ? key.index - 1 : (r - key.index) - 1;
        full_id = edge_offset + face_id * n_edge_nodes + pos;
      } else {
        full_id = int_offset + k * n_int + key.index;
      }
      if (!keep(full_id)) continue;
      if (compress[full_id] < 0) compress[full_id] = n_dofs_++;
      dof_map_[k][l] = compress[full_id];
    }
  }
}

Vec2 FeSpace::node_position(int cell, int local) const {
  return mesh_->map_to_physical(cell, basis_.nodes()[local]);
}

const SparseMat& FeSpace::mass_matrix() const {
  ensure_mass(false);
  return *mass_;
}

void FeSpace::ensure_mass(bool with_solver) const {
  const std::lock_guard<std::mutex> lock(cache_mutex_);
  if (mass_ && (!with_solver || mass_solver_)) return;
  if (!mass_) build_mass_locked();
  if (with_solver && !mass_solver_) {
    auto solver = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>();
    solver->compute(*mass_);
    if (solver->info() != Eigen::Success)
      throw std::runtime_error("FeSpace: mass matrix factorization failed (corrupt DOF map?)");
    mass_solver_ = std::move(solver);
  }
}

void FeSpace::build_mass_locked() const {
  const Mesh& m = *mesh_;
  const int nloc = n_local();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(std::size_t(m.n_cells()) * nloc * nloc);
  for (int k = 0; k < m.n_cells(); ++k) {
    const double detJ = 2.0 * m.cell_area(k);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nloc, nloc);
    for (int q = 0; q < cell_rule_.size(); ++q) {
      const double w = cell_rule_.weights[q] * detJ;
      local.noalias() += w * val_q_.row(q).transpose() * val_q_.row(q);
    }
    // Upper triangle only; mirrored below so the matrix is exactly symmetric.
    const auto& dofs = dof_map_[k];
    for (int a = 0; a < nloc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nloc; ++b)
        if (dofs[b] >= 0 && dofs[a] <= dofs[b]) trips.emplace_back(dofs[a], dofs[b], local(a, b));
    }
  }
  SparseMat upper(n_dofs_, n_dofs_);
  upper.setFromTriplets(trips.begin(), trips.end());
  auto mat = std::make_shared<SparseMat>(n_dofs_, n_dofs_);
  *mat = upper.selfadjointView<Eigen::Upper>();
  mass_ = std::move(mat);
}

Eigen::VectorXd FeSpace::solve_mass(const Eigen::VectorXd& rhs) const {
  ensure_mass(true);
  return mass_solver_->solve(rhs);  // solving against a built factorization is reentrant
}

FeFunction::FeFunction(const FeSpace& s, Eigen::VectorXd c) : space(&s), coeffs(std::move(c)) {
  if (coeffs.size() != s.n_dofs())
    throw std::invalid_argument("FeFunction: coefficient length does not match n_dofs");
}

namespace {
void check_in_reference(const Vec2& p) {
  const double tol = 1e-12;
  if (p.x() < -tol || p.y() < -tol || p.x() + p.y() > 1.0 + tol)
    throw std::domain_error("FeFunction: reference point outside the reference triangle");
}
}  // namespace

double FeFunction::value(int cell, const Vec2& xref) const {
  check_in_reference(xref);
  const Eigen::VectorXd phi = space->basis().values(xref);
  const auto& dofs = space->cell_dofs(cell);
  double out = 0.0;
  for (int l = 0; l < space->n_local(); ++l)
    if (dofs[l] >= 0) out += coeffs[dofs[l]] * phi(l);
  return out;
}

Vec2 FeFunction::gradient(int cell, const Vec2& xref) const {
  check_in_reference(xref);
  const Eigen::MatrixXd g = space->basis().gradients(xref);
  const auto& dofs = space->cell_dofs(cell);
  Eigen::Vector2d ref = Eigen::Vector2d::Zero();
  for (int l = 0; l < space->n_local(); ++l)
    if (dofs[l] >= 0) ref += coeffs[dofs[l]] * g.row(l).transpose();
  return space->mesh().jacobian_inverse(cell).transpose() * ref;
}

Mat2 FeFunction::hessian(int cell, const Vec2& xref) const {
  check_in_reference(xref);
  const Eigen::MatrixXd h = space->basis().hessians(xref);
  const auto& dofs = space->cell_dofs(cell);
  Eigen::Vector3d ref = Eigen::Vector3d::Zero();  // (xx, xy, yy) in reference coords
  for (int l = 0; l < space->n_local(); ++l)
    if (dofs[l] >= 0) ref += coeffs[dofs[l]] * h.row(l).transpose();
  Mat2 Href;
  Href << ref(0), ref(1), ref(1), ref(2);
  const Mat2 Jinv = space->mesh().jacobian_inverse(cell);
  return Jinv.transpose() * Href * Jinv;
}

double FeFunction::l2_norm() const {
  const Eigen::VectorXd Mx = space->mass_matrix() * coeffs;
  return std::sqrt(std::max(0.0, coeffs.dot(Mx)));
}

Mat2 MatrixFeFunction::value(int cell, const Vec2& xref) const {
  const Eigen::VectorXd phi = space->basis().values(xref);
  const auto& dofs = space->cell_dofs(cell);
  Mat2 out = Mat2::Zero();
  for (int l = 0; l < space->n_local(); ++l) {
    if (dofs[l] < 0) continue;
    const double v = phi(l);
    out(0, 0) += comp[0][dofs[l]] * v;
    out(0, 1) += comp[1][dofs[l]] * v;
    out(1, 0) += comp[2][dofs[l]] * v;
    out(1, 1) += comp[3][dofs[l]] * v;
  }
  return out;
}

Eigen::VectorXd assemble_load(const FeSpace& space, const ScalarFn& f) {
  const Mesh& m = space.mesh();
  const auto& rule = space.cell_rule();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.n_dofs());
  for (int k = 0; k < m.n_cells(); ++k) {
    const double detJ = 2.0 * m.cell_area(k);
    const auto& dofs = space.cell_dofs(k);
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * detJ;
      const double fv = f(m.map_to_physical(k, rule.points[q]));
      for (int l = 0; l < space.n_local(); ++l)
        if (dofs[l] >= 0) rhs[dofs[l]] += w * fv * space.values_at_q()(q, l);
    }
  }
  return rhs;
}

double l2_norm_of_field(const FeSpace& space, const ScalarFn& f) {
  const Mesh& m = space.mesh();
  const auto& rule = space.cell_rule();
  double acc = 0.0;
  for (int k = 0; k < m.n_cells(); ++k) {
    const double detJ = 2.0 * m.cell_area(k);
    for (int q = 0; q < rule.size(); ++q) {
      const double fv = f(m.map_to_physical(k, rule.points[q]));
      acc += rule.weights[q] * detJ * fv * fv;
    }
  }
  return std::sqrt(acc);
}

FeFunction project_l2(const FeSpace& space, const ScalarFn& f) {
  const Eigen::VectorXd rhs = assemble_load(space, f);
  FeFunction out(space);
  out.coeffs = space.solve_mass(rhs);
  const double res = (space.mass_matrix() * out.coeffs - rhs).norm();
  const double scale = std::max(1.0, rhs.norm());
  if (res > 1e-12 * scale)
    throw std::runtime_error("project_l2: mass solve residual above 1e-12 relative");
  return out;
}

MatrixFeFunction project_l2_matrix(const FeSpace& space, const MatrixFn& field) {
  if (space.kind() != SpaceKind::Discontinuous)
    throw std::invalid_argument("project_l2_matrix: expects a discontinuous space");
  const Mesh& m = space.mesh();
  const auto& rule = space.cell_rule();
  const int nloc = space.n_local();
  MatrixFeFunction out(space);

  parallel_for(m.n_cells(), [&](std::size_t kc) {
    const int k = static_cast<int>(kc);
    const double detJ = 2.0 * m.cell_area(k);
    Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nloc, nloc);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nloc, 4);
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * detJ;
      const auto phi = space.values_at_q().row(q);
      mass.noalias() += w * phi.transpose() * phi;
      const Mat2 A = field(m.map_to_physical(k, rule.points[q]));
      const Eigen::Vector4d a(A(0, 0), A(0, 1), A(1, 0), A(1, 1));
      rhs.noalias() += w * phi.transpose() * a.transpose();
    }
    const Eigen::MatrixXd sol = mass.llt().solve(rhs);
    const auto& dofs = space.cell_dofs(k);
    for (int l = 0; l < nloc; ++l)
      for (int c = 0; c < 4; ++c) out.comp[c][dofs[l]] = sol(l, c);
  });
  return out;
}

FeFunction interpolate_nodal(const FeSpace& space, const ScalarFn& u) {
  if (space.kind() != SpaceKind::ContinuousZeroTrace)
    throw std::invalid_argument("interpolate_nodal: expects the continuous space");
  FeFunction out(space);
  std::vector<char> seen(space.n_dofs(), 0);
  for (int k = 0; k < space.mesh().n_cells(); ++k) {
    const auto& dofs = space.cell_dofs(k);
    for (int l = 0; l < space.n_local(); ++l) {
      const int d = dofs[l];
      if (d < 0 || seen[d]) continue;
      out.coeffs[d] = u(space.node_position(k, l));
      seen[d] = 1;
    }
  }
  return out;
}

FeFunction interpolate_broken(const FeSpace& space, const ScalarFn& u) {
  if (space.kind() != SpaceKind::Discontinuous)
    throw std::invalid_argument("interpolate_broken: expects a discontinuous space");
  FeFunction out(space);
  for (int k = 0; k < space.mesh().n_cells(); ++k) {
    const auto& dofs = space.cell_dofs(k);
    for (int l = 0; l < space.n_local(); ++l) out.coeffs[dofs[l]] = u(space.node_position(k, l));
  }
  return out;
}

}  // namespace ndfem
