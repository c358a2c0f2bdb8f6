#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace ndfem {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// One mesh face (an edge of the 2D triangulation).
///
/// For interior faces the two adjacent cells are stored so that
/// cell_plus > cell_minus in the global cell numbering, and `normal` is the
/// unit normal outward from cell_plus (it points toward cell_minus).
/// Boundary faces keep the single adjacent cell in cell_plus
/// (cell_minus = -1) and `normal` is the outward domain normal.
struct Face {
  std::array<int, 2> vertices;  // endpoint vertex ids, vertices[0] < vertices[1]
  int cell_plus = -1;
  int cell_minus = -1;
  Vec2 normal = Vec2::Zero();
  double length = 0.0;  // h_F

  bool is_boundary() const { return cell_minus < 0; }
};

/// Conforming simplicial triangulation of a 2D polygon.
///
/// Immutable after construction. Cell global indices are assigned
/// lexicographically by centroid (x, then y) and the jump/average sign
/// conventions of the face list derive from that order.
class Mesh {
 public:
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> cells;  // CCW vertex triples
  std::vector<Face> interior_faces;
  std::vector<Face> boundary_faces;

  std::string domain_tag;        // unit-square | l-shape | custom-polygon
  double h_max = 0.0;            // max cell diameter
  double quasi_uniformity = 0.0; // max diameter / min inradius, recorded only
  double total_area = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }
  int n_interior_faces() const { return static_cast<int>(interior_faces.size()); }
  int n_boundary_faces() const { return static_cast<int>(boundary_faces.size()); }
  int n_faces() const { return n_interior_faces() + n_boundary_faces(); }

  /// Faces are addressed by a single id: interior first, then boundary.
  const Face& face(int face_id) const;

  /// Affine map x = v0 + J * xref from the reference triangle
  /// {(0,0),(1,0),(0,1)} onto cell k.
  Mat2 jacobian(int cell) const;
  Mat2 jacobian_inverse(int cell) const;
  double cell_area(int cell) const;
  Vec2 centroid(int cell) const;
  Vec2 map_to_physical(int cell, const Vec2& xref) const;
  Vec2 map_to_reference(int cell, const Vec2& xphys) const;

  /// Face ids (global, interior-first numbering) of the three faces of a
  /// cell, and the face-neighbor cells (-1 across boundary faces).
  const std::array<int, 3>& cell_faces(int cell) const { return cell_faces_[cell]; }
  const std::array<int, 3>& cell_neighbors(int cell) const { return cell_neighbors_[cell]; }

  /// cells + vertices - edges; equals 1 for simply connected domains.
  int euler_characteristic() const;

  /// Recomputes topology, orientation and areas; throws on violation.
  void validate() const;

  /// Called once all vertices/cells are filled in: sorts cells by centroid,
  /// fixes orientation, builds faces and the cached geometry.
  void finalize(const std::string& tag);

 private:
  std::vector<std::array<int, 3>> cell_faces_;
  std::vector<std::array<int, 3>> cell_neighbors_;
};

/// Structured triangulations of the unit square ([0,1]^2, 2n^2 cells) and of
/// the L-shape [0,1]^2 minus (1/2,1]^2 (even n, 3n^2/2 cells). Square cells
/// are split along the (lower-left -> upper-right) diagonal.
Mesh build_structured(const std::string& domain_tag, int n);

/// Red refinement: every triangle is split into 4 congruent children.
Mesh refine_uniform(const Mesh& mesh);

/// Line-oriented text format: "mesh 2 <nv> <nc>", then "v x y" lines, then
/// "c i j k" lines (0-based). Values print with 17 significant digits so the
/// round trip is bit exact.
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is, const std::string& tag = "custom-polygon");

}  // namespace ndfem
