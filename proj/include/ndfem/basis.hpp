#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ndfem {

/// Scalar Lagrange basis of degree r on the reference triangle, with nodes on
/// the uniform lattice (i/r, j/r), i+j <= r. Realized through the inverse
/// Vandermonde matrix in the monomial basis (fine for r <= 4).
class LagrangeBasis {
 public:
  /// Lattice node ownership, used to build conforming DOF maps.
  /// kind: 0 = vertex (entity = local vertex), 1 = edge (entity = local edge
  /// from vertex e to vertex (e+1)%3, index = 1..r-1 along it),
  /// 2 = cell interior (index = running id).
  struct NodeKey {
    int kind;
    int entity;
    int index;
  };

  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Eigen::Vector2d>& nodes() const { return nodes_; }
  const std::vector<NodeKey>& node_keys() const { return keys_; }

  /// Basis values at a reference point (size() entries).
  Eigen::VectorXd values(const Eigen::Vector2d& xref) const;
  /// Reference gradients, one row per basis function (size() x 2).
  Eigen::MatrixXd gradients(const Eigen::Vector2d& xref) const;
  /// Reference second derivatives, columns (dxx, dxy, dyy).
  Eigen::MatrixXd hessians(const Eigen::Vector2d& xref) const;

 private:
  int degree_;
  std::vector<Eigen::Vector2d> nodes_;
  std::vector<NodeKey> keys_;
  std::vector<std::array<int, 2>> mono_;  // exponent pairs (a, b)
  Eigen::MatrixXd coeff_;                 // mono x basis: inverse Vandermonde
};

}  // namespace ndfem
