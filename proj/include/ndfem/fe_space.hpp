#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "ndfem/basis.hpp"
#include "ndfem/mesh.hpp"
#include "ndfem/quadrature.hpp"

namespace ndfem {

using SparseMat = Eigen::SparseMatrix<double>;

enum class SpaceKind {
  ContinuousZeroTrace,  // H^1_0-conforming Lagrange space, boundary DOFs removed
  Discontinuous         // broken Lagrange space, cell-local DOFs
};

/// Analytic scalar/matrix fields in physical coordinates.
using ScalarFn = std::function<double(const Vec2&)>;
using MatrixFn = std::function<Mat2(const Vec2&)>;

/// Lagrange finite element space of degree r >= 2 on a triangulation.
///
/// The continuous kind shares DOFs across faces and excludes all boundary
/// nodes (zero trace). The discontinuous kind numbers DOFs cell by cell, so
/// its mass matrix is block diagonal.
class FeSpace {
 public:
  /// `coeff_smoothness` declares the polynomial degree to which problem
  /// coefficients should be resolved by quadrature; the default (-1) selects
  /// 2r+2, suitable for generic non-polynomial coefficients.
  FeSpace(const Mesh& mesh, int degree, SpaceKind kind, int coeff_smoothness = -1);

  const Mesh& mesh() const { return *mesh_; }
  int degree() const { return degree_; }
  SpaceKind kind() const { return kind_; }
  int n_dofs() const { return n_dofs_; }
  int n_local() const { return basis_.size(); }

  /// Global DOF ids of a cell's local Lagrange nodes; -1 marks a constrained
  /// boundary node of the continuous space (its coefficient is fixed to 0).
  const std::vector<int>& cell_dofs(int cell) const { return dof_map_[cell]; }

  const LagrangeBasis& basis() const { return basis_; }
  const TriangleQuadrature& cell_rule() const { return cell_rule_; }
  const SegmentQuadrature& face_rule() const { return face_rule_; }

  /// Reference-basis tables at the cell-rule points (shared by all cells).
  const Eigen::MatrixXd& values_at_q() const { return val_q_; }          // nq x nloc
  const Eigen::MatrixXd& ref_gradients_at_q(int q) const { return grad_q_[q]; }  // nloc x 2
  const Eigen::MatrixXd& ref_hessians_at_q(int q) const { return hess_q_[q]; }   // nloc x 3 (xx,xy,yy)

  /// Physical coordinates of the Lagrange node carrying a given local DOF.
  Vec2 node_position(int cell, int local) const;

  /// L^2 mass matrix (n_dofs x n_dofs). For the continuous space it is
  /// globally coupled and SPD; for the discontinuous space block diagonal.
  const SparseMat& mass_matrix() const;

  /// Solves mass_matrix() * x = rhs. Factorization is cached.
  Eigen::VectorXd solve_mass(const Eigen::VectorXd& rhs) const;

 private:
  void build_dof_map();
  void ensure_mass(bool with_solver) const;
  void build_mass_locked() const;

  const Mesh* mesh_;
  int degree_;
  SpaceKind kind_;
  LagrangeBasis basis_;
  TriangleQuadrature cell_rule_;
  SegmentQuadrature face_rule_;
  Eigen::MatrixXd val_q_;
  std::vector<Eigen::MatrixXd> grad_q_;
  std::vector<Eigen::MatrixXd> hess_q_;
  std::vector<std::vector<int>> dof_map_;
  int n_dofs_ = 0;

  // Lazily built, guarded so concurrent readers are safe.
  mutable std::mutex cache_mutex_;
  mutable std::shared_ptr<SparseMat> mass_;
  mutable std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> mass_solver_;
};

/// A function in an FeSpace, stored as its coefficient vector.
struct FeFunction {
  const FeSpace* space = nullptr;
  Eigen::VectorXd coeffs;

  FeFunction() = default;
  explicit FeFunction(const FeSpace& s) : space(&s), coeffs(Eigen::VectorXd::Zero(s.n_dofs())) {}
  FeFunction(const FeSpace& s, Eigen::VectorXd c);

  /// Point evaluation on a cell at reference coordinates (must lie in the
  /// closed reference triangle).
  double value(int cell, const Vec2& xref) const;
  Vec2 gradient(int cell, const Vec2& xref) const;   // physical gradient
  Mat2 hessian(int cell, const Vec2& xref) const;    // physical elementwise Hessian

  double l2_norm() const;
};

/// Matrix-valued function with one coefficient vector per component (i,j),
/// living componentwise in a (typically discontinuous) FeSpace.
struct MatrixFeFunction {
  const FeSpace* space = nullptr;
  std::array<Eigen::VectorXd, 4> comp;  // index 2*i + j

  explicit MatrixFeFunction(const FeSpace& s) : space(&s) {
    for (auto& c : comp) c = Eigen::VectorXd::Zero(s.n_dofs());
  }
  Mat2 value(int cell, const Vec2& xref) const;
};

/// L^2-orthogonal projection onto a continuous space: one global SPD solve.
/// The relative residual of the normal equations is checked to 1e-12.
FeFunction project_l2(const FeSpace& space, const ScalarFn& f);

/// Componentwise L^2 projection of a matrix field onto a discontinuous
/// tensor space: independent local mass solves per cell.
MatrixFeFunction project_l2_matrix(const FeSpace& space, const MatrixFn& field);

/// Nodal interpolant onto a continuous space; boundary DOFs are dropped, so
/// fields that do not vanish on the boundary are truncated there.
FeFunction interpolate_nodal(const FeSpace& space, const ScalarFn& u);

/// Same for a discontinuous space (pointwise nodal interpolation per cell).
FeFunction interpolate_broken(const FeSpace& space, const ScalarFn& u);

/// \int f v_a dx for every basis function of the space, by quadrature.
Eigen::VectorXd assemble_load(const FeSpace& space, const ScalarFn& f);

/// L^2 norm of an analytic field by the space's cell quadrature.
double l2_norm_of_field(const FeSpace& space, const ScalarFn& f);

}  // namespace ndfem
