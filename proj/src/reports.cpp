#include "ndfem/reports.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ndfem {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {
Json json_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}
}  // namespace

Json to_json(const CordesReport& rep) {
  Json j;
  j["condition"] = to_string(rep.condition);
  j["dimension"] = rep.dimension;
  j["lambda"] = rep.lambda;
  j["worst_lhs"] = rep.worst_lhs;
  j["eps_max"] = json_or_null(rep.eps_max);
  j["eps_sup"] = json_or_null(rep.eps_sup);
  j["worst_point"] = {rep.worst_point.x(), rep.worst_point.y()};
  j["worst_control"] = rep.worst_control;
  j["infeasible_points"] = rep.infeasible_points;
  if (rep.infeasible_points > 0)
    j["first_infeasible_point"] = {rep.first_infeasible_point.x(), rep.first_infeasible_point.y()};
  j["feasible"] = rep.feasible();
  return j;
}

Json to_json(const ErrorReport& rep) {
  Json j;
  j["p"] = rep.p;
  j["level"] = rep.level;
  j["h"] = rep.h;
  j["n_dofs"] = rep.n_dofs;
  j["lp"] = rep.lp;
  j["w1p_semi"] = rep.w1p_semi;
  j["w2ph"] = rep.w2ph;
  j["w2ph_volume"] = rep.w2ph_volume;
  j["w2ph_jump"] = rep.w2ph_jump;
  j["best_approx_w2ph"] = rep.best_approx_w2ph;
  j["hess_proj_error"] = rep.hess_proj_error;
  return j;
}

Json to_json(const ValidationReport& rep) {
  Json j;
  j["min_eigenvalue"] = rep.min_eigenvalue;
  j["max_asymmetry"] = rep.max_asymmetry;
  j["max_c"] = rep.max_c;
  j["worst_point"] = {rep.worst_point.x(), rep.worst_point.y()};
  j["ok"] = rep.ok();
  return j;
}

Json to_json(const IterationRecord& rec) {
  Json j;
  j["k"] = rec.k;
  j["increment_h1_lambda"] = rec.inc_h1;
  j["increment_w22h_lambda"] = rec.inc_w2;
  j["residual"] = rec.residual;
  j["histogram"] = rec.histogram;
  return j;
}

Json to_json(const HjbReport& rep, bool include_history) {
  Json j;
  j["converged"] = rep.converged;
  j["iterations"] = rep.iterations;
  j["final_residual"] = rep.final_residual;
  j["final_increment"] = rep.final_increment;
  j["last_contraction_ratio"] = rep.last_ratio;
  j["lambda"] = rep.lambda;
  if (!rep.converged) j["status"] = "diverged-or-slow";
  if (include_history) {
    Json hist = Json::array();
    for (const auto& rec : rep.history) hist.push_back(to_json(rec));
    j["history"] = hist;
  }
  return j;
}

Json to_json(const FeFunction& u) {
  Json j;
  j["space"]["degree"] = u.space->degree();
  j["space"]["kind"] = u.space->kind() == SpaceKind::ContinuousZeroTrace
                           ? "continuous-zero-trace"
                           : "discontinuous";
  j["coefficients"] = std::vector<double>(u.coeffs.data(), u.coeffs.data() + u.coeffs.size());
  return j;
}

std::string convergence_csv(const std::vector<ErrorReport>& rows) {
  std::string out =
      "level,h,n_dofs,lp,w1p_semi,w2ph,w2ph_volume,w2ph_jump,best_approx_w2ph,hess_proj_error,"
      "eoc_w2ph\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ErrorReport& r = rows[i];
    out += std::to_string(r.level) + "," + fmt17(r.h) + "," + std::to_string(r.n_dofs) + "," +
           fmt17(r.lp) + "," + fmt17(r.w1p_semi) + "," + fmt17(r.w2ph) + "," +
           fmt17(r.w2ph_volume) + "," + fmt17(r.w2ph_jump) + "," + fmt17(r.best_approx_w2ph) +
           "," + fmt17(r.hess_proj_error) + ",";
    if (i > 0 && rows[i - 1].w2ph > 0.0 && r.w2ph > 0.0) {
      const double eoc = std::log(rows[i - 1].w2ph / r.w2ph) / std::log(rows[i - 1].h / r.h);
      out += fmt17(eoc);
    }
    out += "\n";
  }
  return out;
}

std::string iteration_csv(const std::vector<IterationRecord>& history,
                          const std::vector<std::string>& control_labels) {
  std::string out = "k,increment_h1_lambda,increment_w22h_lambda,residual";
  for (const auto& label : control_labels) out += ",active_" + label;
  out += "\n";
  for (const auto& rec : history) {
    out += std::to_string(rec.k) + "," + fmt17(rec.inc_h1) + "," + fmt17(rec.inc_w2) + "," +
           fmt17(rec.residual);
    for (long h : rec.histogram) out += "," + std::to_string(h);
    out += "\n";
  }
  return out;
}

std::string vtk_scalar(const FeFunction& u, const std::string& name) {
  const FeSpace& space = *u.space;
  const Mesh& mesh = space.mesh();

  // Vertex samples: evaluate each vertex through one adjacent cell.
  std::vector<int> owner(mesh.n_vertices(), -1);
  for (int k = 0; k < mesh.n_cells(); ++k)
    for (int v : mesh.cells[k])
      if (owner[v] < 0) owner[v] = k;

  std::string out = "# vtk DataFile Version 3.0\n" + name + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(mesh.n_vertices()) + " double\n";
  for (const Vec2& v : mesh.vertices) out += fmt17(v.x()) + " " + fmt17(v.y()) + " 0\n";
  out += "CELLS " + std::to_string(mesh.n_cells()) + " " + std::to_string(4 * mesh.n_cells()) + "\n";
  for (const auto& c : mesh.cells)
    out += "3 " + std::to_string(c[0]) + " " + std::to_string(c[1]) + " " + std::to_string(c[2]) + "\n";
  out += "CELL_TYPES " + std::to_string(mesh.n_cells()) + "\n";
  for (int k = 0; k < mesh.n_cells(); ++k) out += "5\n";
  out += "POINT_DATA " + std::to_string(mesh.n_vertices()) + "\nSCALARS " + name +
         " double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const int k = owner[v];
    const Vec2 xref = mesh.map_to_reference(k, mesh.vertices[v]);
    out += fmt17(u.value(k, xref)) + "\n";
  }
  return out;
}

std::string coordinate_format(const SparseMat& m) {
  std::string out;
  char buf[96];
  for (int col = 0; col < m.outerSize(); ++col)
    for (SparseMat::InnerIterator it(m, col); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", long(it.row()), long(it.col()), it.value());
      out += buf;
    }
  return out;
}

void write_text_file(const std::string& path, const std::string& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << payload;
}

}  // namespace ndfem
