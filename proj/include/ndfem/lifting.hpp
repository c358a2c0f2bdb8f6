#pragma once

#include <Eigen/Sparse>
#include <array>
#include <memory>

#include "ndfem/fe_space.hpp"

namespace ndfem {

/// Piecewise-polynomial scalar field with one-sided face traces: everything
/// the lifted-derivative assembly needs to know about its input. Evaluation
/// is addressed by (cell, reference point); trace values on a face come from
/// evaluating on the adjacent cell at the matching reference point.
class CellField {
 public:
  virtual ~CellField() = default;
  virtual double value(int cell, const Vec2& xref) const = 0;
  /// Physical partial derivative along `axis` on the cell interior.
  virtual double partial(int cell, const Vec2& xref, int axis) const = 0;
  /// Mesh the field lives on, when known; lets the lifting reject inputs
  /// from a different triangulation.
  virtual const Mesh* mesh() const { return nullptr; }
};

/// View of an FeFunction (either space) as a CellField.
class FeFieldView final : public CellField {
 public:
  explicit FeFieldView(const FeFunction& u) : u_(&u) {}
  double value(int cell, const Vec2& xref) const override { return u_->value(cell, xref); }
  double partial(int cell, const Vec2& xref, int axis) const override {
    return u_->gradient(cell, xref)[axis];
  }
  const Mesh* mesh() const override { return &u_->space->mesh(); }

 private:
  const FeFunction* u_;
};

/// Component `i` of the gradient of a continuous FE function; its traces jump
/// across faces in the normal direction, which is what the lifting sees.
class GradComponentView final : public CellField {
 public:
  GradComponentView(const FeFunction& u, int i) : u_(&u), i_(i) {}
  double value(int cell, const Vec2& xref) const override {
    return u_->gradient(cell, xref)[i_];
  }
  double partial(int cell, const Vec2& xref, int axis) const override {
    return u_->hessian(cell, xref)(i_, axis);
  }
  const Mesh* mesh() const override { return &u_->space->mesh(); }

 private:
  const FeFunction* u_;
  int i_;
};

/// Physical points and length-weighted quadrature weights of a face, from
/// the shared canonical parameterization (sorted endpoint ids), so both
/// adjacent cells sample coincident physical points.
struct FaceQuadrature {
  std::vector<Vec2> points;
  std::vector<double> weights;  // sum to h_F
};
FaceQuadrature face_quadrature(const Mesh& mesh, int face_id, const SegmentQuadrature& rule);

/// Which algebraic form of the lifted partial derivative to assemble. Both
/// are equal for any piecewise W^{1,1} input; the implementation keeps them
/// separate so their agreement can be asserted instead of assumed.
enum class LiftForm {
  FaceAverage,  // <{v} n, [phi]> over all faces minus (v, d_phi) volume term
  InteriorJump  // -<[v] n, {phi}> over interior faces plus (d_v, phi) volume term
};

/// Lifted partial derivative of a piecewise field into the discontinuous
/// space: cell-local mass solves against face and volume contributions.
FeFunction lift_partial(const FeSpace& vbar, const CellField& v, int axis,
                        LiftForm form = LiftForm::FaceAverage);

/// Materialized lifted-derivative maps for the discrete Hessian.
///
/// For a continuous space V_h and its broken companion, builds once the four
/// sparse matrices taking V_h coefficients to the broken-space coefficients
/// of H_ij(u) = lifted d/dx_j of (grad u)_i. The stencil of a cell is the
/// cell plus its face neighbors.
class LiftingOperator {
 public:
  LiftingOperator(const FeSpace& vh, const FeSpace& vbar);

  const FeSpace& vh() const { return *vh_; }
  const FeSpace& vbar() const { return *vbar_; }

  /// Map for Hessian component (i, j); dimensions n_dofs(vbar) x n_dofs(vh).
  const SparseMat& hessian_map(int i, int j) const { return maps_[2 * i + j]; }

  /// Applies the maps to a V_h function.
  MatrixFeFunction discrete_hessian(const FeFunction& u) const;

  /// Unweighted pairing P[a,m] = (psi_m, phi_a): broken basis against V_h
  /// basis. Used to turn broken-space coefficients into V_h load vectors.
  const SparseMat& pairing_matrix() const { return pairing_; }

  /// Coordinate-format dump (row col value per line) for external inspection.
  void dump_maps(std::ostream& os) const;

 private:
  const FeSpace* vh_;
  const FeSpace* vbar_;
  std::array<SparseMat, 4> maps_;
  SparseMat pairing_;
};

}  // namespace ndfem
