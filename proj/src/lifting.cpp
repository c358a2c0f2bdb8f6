#include "ndfem/lifting.hpp"

#include <map>
#include <ostream>
#include <stdexcept>

#include "ndfem/parallel.hpp"

namespace ndfem {

namespace {

// Shared face parameterization: p(t) = a + t(b-a) with a, b the canonical
// (sorted-id) endpoints, so both adjacent cells sample coincident physical
// points.
struct FacePoints {
  std::vector<Vec2> phys;
  std::vector<double> weights;  // include h_F
};

FacePoints face_points(const Mesh& mesh, const Face& f, const SegmentQuadrature& rule) {
  FacePoints fp;
  const Vec2 a = mesh.vertices[f.vertices[0]];
  const Vec2 b = mesh.vertices[f.vertices[1]];
  fp.phys.resize(rule.size());
  fp.weights.resize(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    fp.phys[q] = a + rule.points[q] * (b - a);
    fp.weights[q] = rule.weights[q] * f.length;
  }
  return fp;
}

Eigen::MatrixXd local_mass(const FeSpace& space, int cell) {
  const int nloc = space.n_local();
  const double detJ = 2.0 * space.mesh().cell_area(cell);
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(nloc, nloc);
  const auto& rule = space.cell_rule();
  for (int q = 0; q < rule.size(); ++q) {
    const auto phi = space.values_at_q().row(q);
    mass.noalias() += rule.weights[q] * detJ * phi.transpose() * phi;
  }
  return mass;
}

}  // namespace

FaceQuadrature face_quadrature(const Mesh& mesh, int face_id, const SegmentQuadrature& rule) {
  const FacePoints fp = face_points(mesh, mesh.face(face_id), rule);
  return FaceQuadrature{fp.phys, fp.weights};
}

FeFunction lift_partial(const FeSpace& vbar, const CellField& v, int axis, LiftForm form) {
  if (vbar.kind() != SpaceKind::Discontinuous)
    throw std::invalid_argument("lift_partial: target space must be discontinuous");
  if (axis < 0 || axis > 1) throw std::invalid_argument("lift_partial: axis must be 0 or 1");
  if (v.mesh() && v.mesh() != &vbar.mesh())
    throw std::invalid_argument("lift_partial: input field lives on a different mesh");

  const Mesh& mesh = vbar.mesh();
  const int nloc = vbar.n_local();
  const auto& cell_rule = vbar.cell_rule();
  FeFunction out(vbar);

  parallel_for(mesh.n_cells(), [&](std::size_t kc) {
    const int k = static_cast<int>(kc);
    // Extended-precision accumulation: the two algebraic forms must agree to
    // 1e-10 in the coefficients even where those reach O(h^-2).
    std::vector<long double> acc(nloc, 0.0L);
    const double detJ = 2.0 * mesh.cell_area(k);
    const Mat2 Jinv = mesh.jacobian_inverse(k);

    // Volume term.
    for (int q = 0; q < cell_rule.size(); ++q) {
      const long double w = (long double)cell_rule.weights[q] * detJ;
      const Vec2 xref = cell_rule.points[q];
      if (form == LiftForm::FaceAverage) {
        const long double vv = v.value(k, xref);
        const Eigen::MatrixXd gphys = vbar.ref_gradients_at_q(q) * Jinv;  // nloc x 2
        for (int m = 0; m < nloc; ++m) acc[m] -= w * vv * (long double)gphys(m, axis);
      } else {
        const long double dv = v.partial(k, xref, axis);
        for (int m = 0; m < nloc; ++m) acc[m] += w * dv * (long double)vbar.values_at_q()(q, m);
      }
    }

    // Face terms.
    for (int e = 0; e < 3; ++e) {
      const Face& f = mesh.face(mesh.cell_faces(k)[e]);
      if (form == LiftForm::InteriorJump && f.is_boundary()) continue;
      const FacePoints fp = face_points(mesh, f, vbar.face_rule());
      const double n_axis = f.normal[axis];
      const double sign_k = (f.cell_plus == k) ? 1.0 : -1.0;
      for (int q = 0; q < (int)fp.phys.size(); ++q) {
        const Vec2 ref_k = mesh.map_to_reference(k, fp.phys[q]);
        const Eigen::VectorXd psi = vbar.basis().values(ref_k);
        long double factor = 0.0L;
        if (form == LiftForm::FaceAverage) {
          long double avg = v.value(f.cell_plus, mesh.map_to_reference(f.cell_plus, fp.phys[q]));
          if (!f.is_boundary()) {
            avg = 0.5L * (avg + (long double)v.value(f.cell_minus,
                                                     mesh.map_to_reference(f.cell_minus, fp.phys[q])));
          }
          factor = avg * n_axis * sign_k;  // sign_k realizes [psi]|_K
        } else {
          const long double jump =
              (long double)v.value(f.cell_plus, mesh.map_to_reference(f.cell_plus, fp.phys[q])) -
              (long double)v.value(f.cell_minus, mesh.map_to_reference(f.cell_minus, fp.phys[q]));
          factor = -jump * n_axis * 0.5L;  // {psi}|_K = psi/2 on interior faces
        }
        for (int m = 0; m < nloc; ++m) acc[m] += (long double)fp.weights[q] * factor * (long double)psi(m);
      }
    }

    Eigen::VectorXd rhs(nloc);
    for (int m = 0; m < nloc; ++m) rhs[m] = static_cast<double>(acc[m]);
    const Eigen::VectorXd local = local_mass(vbar, k).llt().solve(rhs);
    const auto& dofs = vbar.cell_dofs(k);
    for (int l = 0; l < nloc; ++l) out.coeffs[dofs[l]] = local[l];
  });
  return out;
}

LiftingOperator::LiftingOperator(const FeSpace& vh, const FeSpace& vbar) : vh_(&vh), vbar_(&vbar) {
  if (&vh.mesh() != &vbar.mesh())
    throw std::invalid_argument("LiftingOperator: spaces live on different meshes");
  if (vh.degree() != vbar.degree())
    throw std::invalid_argument("LiftingOperator: spaces must share the polynomial degree");
  if (vh.kind() != SpaceKind::ContinuousZeroTrace || vbar.kind() != SpaceKind::Discontinuous)
    throw std::invalid_argument("LiftingOperator: expects (continuous, discontinuous) spaces");

  const Mesh& mesh = vh.mesh();
  const int nloc = vh.n_local();
  const int n_cells = mesh.n_cells();

  struct CellBlock {
    std::vector<int> cols;                   // global V_h dofs in the stencil
    std::array<Eigen::MatrixXd, 4> local;    // nloc x cols per Hessian component
    Eigen::MatrixXd pairing;                 // nloc x nloc, columns = K's own dofs
  };
  std::vector<CellBlock> blocks(n_cells);

  parallel_for(n_cells, [&](std::size_t kc) {
    const int k = static_cast<int>(kc);
    CellBlock& blk = blocks[k];

    // Stencil columns: dofs of K and of its face neighbors.
    std::map<int, int> col_of;
    auto add_cols = [&](int cell) {
      for (int d : vh.cell_dofs(cell))
        if (d >= 0 && !col_of.count(d)) {
          col_of[d] = static_cast<int>(blk.cols.size());
          blk.cols.push_back(d);
        }
    };
    add_cols(k);
    for (int e = 0; e < 3; ++e)
      if (mesh.cell_neighbors(k)[e] >= 0) add_cols(mesh.cell_neighbors(k)[e]);

    const int ncols = static_cast<int>(blk.cols.size());
    for (auto& L : blk.local) L = Eigen::MatrixXd::Zero(nloc, ncols);
    blk.pairing = Eigen::MatrixXd::Zero(nloc, nloc);

    const double detJ = 2.0 * mesh.cell_area(k);
    const Mat2 Jinv = mesh.jacobian_inverse(k);
    const auto& cell_rule = vbar.cell_rule();

    // Volume parts: -( (grad phi_c)_i, d_j psi_m )_K and the pairing matrix.
    for (int q = 0; q < cell_rule.size(); ++q) {
      const double w = cell_rule.weights[q] * detJ;
      const auto psi = vbar.values_at_q().row(q);
      const Eigen::MatrixXd gphys = vh.ref_gradients_at_q(q) * Jinv;  // nloc x 2
      blk.pairing.noalias() += w * psi.transpose() * psi;
      for (int c = 0; c < nloc; ++c) {
        const int g = vh.cell_dofs(k)[c];
        if (g < 0) continue;
        const int col = col_of.at(g);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int m = 0; m < nloc; ++m)
              blk.local[2 * i + j](m, col) -= w * gphys(c, i) * gphys(m, j);
      }
    }

    // Face parts: <{(grad phi_c)_i} n^(j), [psi_m]> restricted to psi on K.
    for (int e = 0; e < 3; ++e) {
      const Face& f = mesh.face(mesh.cell_faces(k)[e]);
      const FacePoints fp = face_points(mesh, f, vbar.face_rule());
      const double sign_k = (f.cell_plus == k) ? 1.0 : -1.0;
      const int sides[2] = {f.cell_plus, f.cell_minus};
      const double avg_w = f.is_boundary() ? 1.0 : 0.5;
      for (int q = 0; q < (int)fp.phys.size(); ++q) {
        const Eigen::VectorXd psi = vbar.basis().values(mesh.map_to_reference(k, fp.phys[q]));
        for (int s = 0; s < (f.is_boundary() ? 1 : 2); ++s) {
          const int cell_s = sides[s];
          const Eigen::MatrixXd gref = vh.basis().gradients(mesh.map_to_reference(cell_s, fp.phys[q]));
          const Eigen::MatrixXd gphys = gref * mesh.jacobian_inverse(cell_s);
          for (int c = 0; c < nloc; ++c) {
            const int g = vh.cell_dofs(cell_s)[c];
            if (g < 0) continue;
            const int col = col_of.at(g);
            for (int i = 0; i < 2; ++i) {
              const double trace = avg_w * gphys(c, i);
              for (int j = 0; j < 2; ++j) {
                const double fac = fp.weights[q] * trace * f.normal[j] * sign_k;
                for (int m = 0; m < nloc; ++m)
                  blk.local[2 * i + j](m, col) += fac * psi(m);
              }
            }
          }
        }
      }
    }

    // Cell-local mass solve turns weak contributions into coefficients.
    const Eigen::LLT<Eigen::MatrixXd> llt(local_mass(vbar, k));
    for (auto& L : blk.local) L = llt.solve(L);
  });

  // Deterministic merge, cell by cell.
  std::array<std::vector<Eigen::Triplet<double>>, 4> trips;
  std::vector<Eigen::Triplet<double>> ptrips;
  for (int k = 0; k < n_cells; ++k) {
    const CellBlock& blk = blocks[k];
    const auto& bar_dofs = vbar.cell_dofs(k);
    for (int comp = 0; comp < 4; ++comp)
      for (int m = 0; m < nloc; ++m)
        for (int c = 0; c < (int)blk.cols.size(); ++c) {
          const double v = blk.local[comp](m, c);
          if (v != 0.0) trips[comp].emplace_back(bar_dofs[m], blk.cols[c], v);
        }
    for (int m = 0; m < nloc; ++m)
      for (int a = 0; a < nloc; ++a) {
        const int g = vh.cell_dofs(k)[a];
        if (g >= 0) ptrips.emplace_back(g, bar_dofs[m], blk.pairing(a, m));
      }
  }
  for (int comp = 0; comp < 4; ++comp) {
    maps_[comp].resize(vbar.n_dofs(), vh.n_dofs());
    maps_[comp].setFromTriplets(trips[comp].begin(), trips[comp].end());
  }
  pairing_.resize(vh.n_dofs(), vbar.n_dofs());
  pairing_.setFromTriplets(ptrips.begin(), ptrips.end());
}

MatrixFeFunction LiftingOperator::discrete_hessian(const FeFunction& u) const {
  if (u.space != vh_)
    throw std::invalid_argument("discrete_hessian: function does not belong to the V_h space");
  MatrixFeFunction H(*vbar_);
  for (int comp = 0; comp < 4; ++comp) H.comp[comp] = maps_[comp] * u.coeffs;
  return H;
}

void LiftingOperator::dump_maps(std::ostream& os) const {
  char buf[96];
  for (int comp = 0; comp < 4; ++comp) {
    os << "# hessian component " << comp / 2 << " " << comp % 2 << "\n";
    for (int col = 0; col < maps_[comp].outerSize(); ++col)
      for (SparseMat::InnerIterator it(maps_[comp], col); it; ++it) {
        std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", long(it.row()), long(it.col()), it.value());
        os << buf;
      }
  }
}

}  // namespace ndfem
