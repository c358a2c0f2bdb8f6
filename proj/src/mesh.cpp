#include "ndfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ndfem {

namespace {

double triangle_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

double triangle_diameter(const Vec2& a, const Vec2& b, const Vec2& c) {
  return std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
}

double triangle_inradius(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double per = (b - a).norm() + (c - b).norm() + (a - c).norm();
  return 2.0 * std::abs(triangle_area(a, b, c)) / per;
}

}  // namespace

const Face& Mesh::face(int face_id) const {
  const int ni = n_interior_faces();
  if (face_id < 0 || face_id >= n_faces())
    throw std::out_of_range("mesh: face id " + std::to_string(face_id) + " out of range");
  return face_id < ni ? interior_faces[face_id] : boundary_faces[face_id - ni];
}

Mat2 Mesh::jacobian(int cell) const {
  const auto& c = cells[cell];
  Mat2 J;
  J.col(0) = vertices[c[1]] - vertices[c[0]];
  J.col(1) = vertices[c[2]] - vertices[c[0]];
  return J;
}

Mat2 Mesh::jacobian_inverse(int cell) const { return jacobian(cell).inverse(); }

double Mesh::cell_area(int cell) const {
  const auto& c = cells[cell];
  return triangle_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
}

Vec2 Mesh::centroid(int cell) const {
  const auto& c = cells[cell];
  return (vertices[c[0]] + vertices[c[1]] + vertices[c[2]]) / 3.0;
}

Vec2 Mesh::map_to_physical(int cell, const Vec2& xref) const {
  return vertices[cells[cell][0]] + jacobian(cell) * xref;
}

Vec2 Mesh::map_to_reference(int cell, const Vec2& xphys) const {
  return jacobian_inverse(cell) * (xphys - vertices[cells[cell][0]]);
}

int Mesh::euler_characteristic() const {
  return n_cells() + n_vertices() - n_faces();
}

void Mesh::finalize(const std::string& tag) {
  domain_tag = tag;

  // Enforce counterclockwise orientation before fixing the global order.
  for (auto& c : cells) {
    if (triangle_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]) < 0.0)
      std::swap(c[1], c[2]);
  }

  // Global cell indices: lexicographic by centroid (x, then y). The jump
  // sign convention needs a stable total order, so this order is fixed here
  // and never changes afterwards.
  std::vector<int> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Vec2 ca = (vertices[cells[a][0]] + vertices[cells[a][1]] + vertices[cells[a][2]]) / 3.0;
    const Vec2 cb = (vertices[cells[b][0]] + vertices[cells[b][1]] + vertices[cells[b][2]]) / 3.0;
    if (ca.x() != cb.x()) return ca.x() < cb.x();
    return ca.y() < cb.y();
  });
  std::vector<std::array<int, 3>> sorted(cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) sorted[i] = cells[order[i]];
  cells = std::move(sorted);

  // Edge -> adjacent cells.
  std::map<std::array<int, 2>, std::vector<int>> edge_cells;
  for (int k = 0; k < n_cells(); ++k) {
    const auto& c = cells[k];
    for (int e = 0; e < 3; ++e) {
      std::array<int, 2> key{c[e], c[(e + 1) % 3]};
      if (key[0] > key[1]) std::swap(key[0], key[1]);
      edge_cells[key].push_back(k);
    }
  }

  interior_faces.clear();
  boundary_faces.clear();
  for (const auto& [key, adj] : edge_cells) {
    if (adj.size() > 2)
      throw std::runtime_error("mesh: non-manifold edge (" + std::to_string(key[0]) + "," +
                               std::to_string(key[1]) + ")");
    Face f;
    f.vertices = key;
    const Vec2 a = vertices[key[0]], b = vertices[key[1]];
    f.length = (b - a).norm();
    if (adj.size() == 2) {
      f.cell_plus = std::max(adj[0], adj[1]);
      f.cell_minus = std::min(adj[0], adj[1]);
    } else {
      f.cell_plus = adj[0];
      f.cell_minus = -1;
    }
    // Unit normal outward from cell_plus: perpendicular to the edge, pointing
    // away from the centroid of cell_plus.
    Vec2 t = (b - a) / f.length;
    Vec2 n(t.y(), -t.x());
    const Vec2 mid = 0.5 * (a + b);
    const Vec2 cp = (vertices[cells[f.cell_plus][0]] + vertices[cells[f.cell_plus][1]] +
                     vertices[cells[f.cell_plus][2]]) /
                    3.0;
    if (n.dot(mid - cp) < 0.0) n = -n;
    f.normal = n;
    if (f.is_boundary())
      boundary_faces.push_back(f);
    else
      interior_faces.push_back(f);
  }

  // Per-cell face/neighbor tables (face ids in interior-first numbering).
  cell_faces_.assign(cells.size(), {-1, -1, -1});
  cell_neighbors_.assign(cells.size(), {-1, -1, -1});
  std::map<std::array<int, 2>, int> edge_to_face;
  for (int i = 0; i < n_interior_faces(); ++i) edge_to_face[interior_faces[i].vertices] = i;
  for (int i = 0; i < n_boundary_faces(); ++i)
    edge_to_face[boundary_faces[i].vertices] = n_interior_faces() + i;
  for (int k = 0; k < n_cells(); ++k) {
    const auto& c = cells[k];
    for (int e = 0; e < 3; ++e) {
      std::array<int, 2> key{c[e], c[(e + 1) % 3]};
      if (key[0] > key[1]) std::swap(key[0], key[1]);
      const int fid = edge_to_face.at(key);
      cell_faces_[k][e] = fid;
      const Face& f = face(fid);
      cell_neighbors_[k][e] = f.is_boundary() ? -1 : (f.cell_plus == k ? f.cell_minus : f.cell_plus);
    }
  }

  h_max = 0.0;
  total_area = 0.0;
  double min_inradius = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n_cells(); ++k) {
    const auto& c = cells[k];
    const Vec2 &a = vertices[c[0]], &b = vertices[c[1]], &cc = vertices[c[2]];
    h_max = std::max(h_max, triangle_diameter(a, b, cc));
    min_inradius = std::min(min_inradius, triangle_inradius(a, b, cc));
    total_area += triangle_area(a, b, cc);
  }
  quasi_uniformity = h_max / min_inradius;

  validate();
}

void Mesh::validate() const {
  for (int k = 0; k < n_cells(); ++k) {
    if (cell_area(k) <= 0.0)
      throw std::runtime_error("mesh: cell " + std::to_string(k) + " has non-positive area");
  }
  for (const Face& f : interior_faces) {
    if (!(f.cell_plus > f.cell_minus))
      throw std::runtime_error("mesh: interior face violates the K+/K- index convention");
    const Vec2 d = centroid(f.cell_minus) - centroid(f.cell_plus);
    if (!(f.normal.dot(d) > 0.0))
      throw std::runtime_error("mesh: interior face normal does not point toward K-");
    if (std::abs(f.normal.norm() - 1.0) > 1e-14)
      throw std::runtime_error("mesh: face normal not unit length");
  }
}

Mesh build_structured(const std::string& domain_tag, int n) {
  if (n < 1) throw std::invalid_argument("build_structured: n must be >= 1");
  if (domain_tag != "unit-square" && domain_tag != "l-shape")
    throw std::invalid_argument("build_structured: unknown domain tag '" + domain_tag + "'");
  if (domain_tag == "l-shape" && n % 2 != 0)
    throw std::invalid_argument(
        "build_structured: the l-shape grid needs an even number of subdivisions per unit edge "
        "so the re-entrant corner lands on a grid line");

  Mesh mesh;
  std::vector<int> vid((n + 1) * (n + 1), -1);
  auto grid_index = [n](int i, int j) { return j * (n + 1) + i; };
  auto keep_square = [&](int i, int j) {
    if (domain_tag == "unit-square") return true;
    // L-shape: drop the open quadrant (1/2,1]^2.
    return !(i >= n / 2 && j >= n / 2);
  };

  auto vertex_id = [&](int i, int j) {
    int& id = vid[grid_index(i, j)];
    if (id < 0) {
      id = mesh.n_vertices();
      mesh.vertices.push_back(Vec2(double(i) / n, double(j) / n));
    }
    return id;
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!keep_square(i, j)) continue;
      const int v00 = vertex_id(i, j);
      const int v10 = vertex_id(i + 1, j);
      const int v11 = vertex_id(i + 1, j + 1);
      const int v01 = vertex_id(i, j + 1);
      mesh.cells.push_back({v00, v10, v11});
      mesh.cells.push_back({v00, v11, v01});
    }
  }
  mesh.finalize(domain_tag);

  const double expected_area = domain_tag == "unit-square" ? 1.0 : 0.75;
  if (std::abs(mesh.total_area - expected_area) > 1e-12 * expected_area)
    throw std::runtime_error("build_structured: cell areas do not sum to the polygon area");
  return mesh;
}

Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.vertices = mesh.vertices;
  std::map<std::array<int, 2>, int> midpoint;
  auto mid_id = [&](int a, int b) {
    std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const int id = fine.n_vertices();
    fine.vertices.push_back(0.5 * (mesh.vertices[a] + mesh.vertices[b]));
    midpoint[key] = id;
    return id;
  };
  for (const auto& c : mesh.cells) {
    const int m01 = mid_id(c[0], c[1]);
    const int m12 = mid_id(c[1], c[2]);
    const int m02 = mid_id(c[0], c[2]);
    fine.cells.push_back({c[0], m01, m02});
    fine.cells.push_back({m01, c[1], m12});
    fine.cells.push_back({m02, m12, c[2]});
    fine.cells.push_back({m01, m12, m02});
  }
  fine.finalize(mesh.domain_tag);
  return fine;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "mesh 2 " << mesh.n_vertices() << " " << mesh.n_cells() << "\n";
  char buf[64];
  for (const Vec2& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", v.x(), v.y());
    os << buf;
  }
  for (const auto& c : mesh.cells) os << "c " << c[0] << " " << c[1] << " " << c[2] << "\n";
}

Mesh read_mesh(std::istream& is, const std::string& tag) {
  std::string word;
  int dim = 0, nv = 0, nc = 0;
  if (!(is >> word >> dim >> nv >> nc) || word != "mesh" || dim != 2)
    throw std::runtime_error("read_mesh: expected header 'mesh 2 <nv> <nc>'");
  Mesh mesh;
  mesh.vertices.reserve(nv);
  mesh.cells.reserve(nc);
  for (int i = 0; i < nv; ++i) {
    double x = 0, y = 0;
    if (!(is >> word >> x >> y) || word != "v")
      throw std::runtime_error("read_mesh: bad vertex line " + std::to_string(i));
    mesh.vertices.push_back(Vec2(x, y));
  }
  for (int i = 0; i < nc; ++i) {
    int a = 0, b = 0, c = 0;
    if (!(is >> word >> a >> b >> c) || word != "c")
      throw std::runtime_error("read_mesh: bad cell line " + std::to_string(i));
    if (a < 0 || b < 0 || c < 0 || a >= nv || b >= nv || c >= nv)
      throw std::runtime_error("read_mesh: cell vertex index out of range on line " +
                               std::to_string(i));
    mesh.cells.push_back({a, b, c});
  }
  mesh.finalize(tag);
  return mesh;
}

}  // namespace ndfem
