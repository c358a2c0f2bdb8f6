// Python bindings for the main solver operations: meshes, spaces, the lifted
// Hessian, Cordes checks, and the linear/Bellman solvers.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ndfem/hjb.hpp"
#include "ndfem/problem_io.hpp"
#include "ndfem/reports.hpp"

namespace py = pybind11;
using namespace ndfem;

namespace {

// Python-facing bundle keeping mesh, spaces and lifting maps alive together.
struct Discretization {
  std::shared_ptr<Mesh> mesh;
  std::shared_ptr<FeSpace> vh;
  std::shared_ptr<FeSpace> vbar;
  std::shared_ptr<LiftingOperator> lift;

  Discretization(const Mesh& m, int degree) : mesh(std::make_shared<Mesh>(m)) {
    vh = std::make_shared<FeSpace>(*mesh, degree, SpaceKind::ContinuousZeroTrace);
    vbar = std::make_shared<FeSpace>(*mesh, degree, SpaceKind::Discontinuous);
    lift = std::make_shared<LiftingOperator>(*vh, *vbar);
  }
};

std::vector<Vec2> default_samples(const Mesh& mesh, int grid) {
  std::vector<Vec2> pts;
  const FeSpace probe(mesh, 2, SpaceKind::Discontinuous);
  for (int k = 0; k < mesh.n_cells(); ++k)
    for (const auto& q : probe.cell_rule().points) pts.push_back(mesh.map_to_physical(k, q));
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Vec2& v : mesh.vertices) {
    x0 = std::min(x0, v.x());
    x1 = std::max(x1, v.x());
    y0 = std::min(y0, v.y());
    y1 = std::max(y1, v.y());
  }
  for (const Vec2& v : uniform_grid_samples(x0, x1, y0, y1, grid)) pts.push_back(v);
  return pts;
}

py::dict cordes_dict(const CordesReport& rep) {
  py::dict d;
  d["condition"] = to_string(rep.condition);
  d["lambda"] = rep.lambda;
  d["worst_lhs"] = rep.worst_lhs;
  d["eps_max"] = rep.eps_max;
  d["eps_sup"] = rep.eps_sup;
  d["worst_point"] = py::make_tuple(rep.worst_point.x(), rep.worst_point.y());
  d["worst_control"] = rep.worst_control;
  d["infeasible_points"] = rep.infeasible_points;
  d["feasible"] = rep.feasible();
  return d;
}

py::dict error_dict(const ErrorReport& er) {
  py::dict d;
  d["p"] = er.p;
  d["h"] = er.h;
  d["n_dofs"] = er.n_dofs;
  d["lp"] = er.lp;
  d["w1p_semi"] = er.w1p_semi;
  d["w2ph"] = er.w2ph;
  d["w2ph_volume"] = er.w2ph_volume;
  d["w2ph_jump"] = er.w2ph_jump;
  d["best_approx_w2ph"] = er.best_approx_w2ph;
  d["hess_proj_error"] = er.hess_proj_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ndfem, m) {
  m.doc() = "Finite element solver for non-divergence-form elliptic PDEs and Bellman equations";

  py::class_<Mesh>(m, "Mesh")
      .def_property_readonly("n_vertices", &Mesh::n_vertices)
      .def_property_readonly("n_cells", &Mesh::n_cells)
      .def_property_readonly("n_interior_faces", &Mesh::n_interior_faces)
      .def_property_readonly("n_boundary_faces", &Mesh::n_boundary_faces)
      .def_readonly("h_max", &Mesh::h_max)
      .def_readonly("quasi_uniformity", &Mesh::quasi_uniformity)
      .def_readonly("total_area", &Mesh::total_area)
      .def_readonly("domain_tag", &Mesh::domain_tag)
      .def("euler_characteristic", &Mesh::euler_characteristic)
      .def("vertices", [](const Mesh& mesh) {
        Eigen::MatrixXd out(mesh.n_vertices(), 2);
        for (int i = 0; i < mesh.n_vertices(); ++i) out.row(i) = mesh.vertices[i].transpose();
        return out;
      })
      .def("cells", [](const Mesh& mesh) {
        Eigen::MatrixXi out(mesh.n_cells(), 3);
        for (int i = 0; i < mesh.n_cells(); ++i)
          out.row(i) << mesh.cells[i][0], mesh.cells[i][1], mesh.cells[i][2];
        return out;
      })
      .def("write", [](const Mesh& mesh) {
        std::ostringstream os;
        write_mesh(os, mesh);
        return os.str();
      })
      .def("__repr__", [](const Mesh& mesh) {
        return "<Mesh " + mesh.domain_tag + ": " + std::to_string(mesh.n_cells()) + " cells, h_max=" +
               fmt17(mesh.h_max) + ">";
      });

  m.def("build_structured", &build_structured, py::arg("domain_tag"), py::arg("n"));
  m.def("refine_uniform", &refine_uniform);
  m.def("read_mesh", [](const std::string& text) {
    std::istringstream is(text);
    return read_mesh(is);
  });

  py::class_<ProblemFile>(m, "Problem")
      .def_property_readonly("degree", [](const ProblemFile& pf) { return pf.degree; })
      .def_property_readonly("refinements", [](const ProblemFile& pf) { return pf.refinements; })
      .def_property_readonly("n_controls", [](const ProblemFile& pf) { return pf.controls.size(); })
      .def_property_readonly("labels", [](const ProblemFile& pf) {
        std::vector<std::string> out;
        for (const auto& c : pf.controls.controls) out.push_back(c.label);
        return out;
      });
  m.def("load_problem", &load_problem, py::arg("path"));
  m.def("parse_problem", &parse_problem, py::arg("text"));

  m.def(
      "problem_mesh",
      [](const ProblemFile& pf) { return build_structured(pf.domain_tag, pf.n); },
      "Structured mesh described by the problem's [domain] section");

  m.def(
      "check_cordes",
      [](const ProblemFile& pf, const std::string& condition, double lambda, int grid) {
        const Mesh mesh = build_structured(pf.domain_tag, pf.n);
        const CordesCondition cond = condition.empty()
                                         ? pf.cordes_condition.value_or(CordesCondition::FemGeneral)
                                         : cordes_condition_from_string(condition);
        return cordes_dict(check_cordes(cond, pf.controls, lambda, default_samples(mesh, grid)));
      },
      py::arg("problem"), py::arg("condition") = "", py::arg("lambda_") = 1.0, py::arg("grid") = 17);

  m.def(
      "search_lambda",
      [](const ProblemFile& pf, double lo, double hi, int grid) {
        const Mesh mesh = build_structured(pf.domain_tag, pf.n);
        const CordesCondition cond = pf.cordes_condition.value_or(CordesCondition::FemGeneral);
        const LambdaSearchResult res =
            search_lambda(cond, pf.controls, default_samples(mesh, grid), lo, hi);
        py::dict d;
        d["lambda"] = res.lambda;
        d["eps_sup"] = res.eps_sup;
        d["report"] = cordes_dict(res.report);
        return d;
      },
      py::arg("problem"), py::arg("lambda_lo") = 0.1, py::arg("lambda_hi") = 100.0,
      py::arg("grid") = 17);

  m.def(
      "solve_linear",
      [](const ProblemFile& pf, int degree, int refine) {
        Mesh mesh = build_structured(pf.domain_tag, pf.n);
        for (int i = 0; i < refine; ++i) mesh = refine_uniform(mesh);
        Discretization d(mesh, degree > 0 ? degree : pf.degree);
        LinearSolveInfo info;
        const FeFunction u = solve_linear_nondiv(*d.lift, pf.controls[0], info);
        if (info.singular) throw std::runtime_error("singular system: " + info.message);
        py::dict out;
        out["coefficients"] = u.coeffs;
        out["residual"] = info.residual;
        out["solver"] = info.solver;
        out["n_dofs"] = d.vh->n_dofs();
        out["h_max"] = d.mesh->h_max;
        if (pf.manufactured_u) {
          const ExactSolution exact = exact_from_expression(*pf.manufactured_u);
          out["errors"] = error_dict(error_report(*d.vh, *d.vbar, u, exact, pf.p));
        }
        return out;
      },
      py::arg("problem"), py::arg("degree") = 0, py::arg("refine") = 0);

  m.def(
      "solve_hjb",
      [](const ProblemFile& pf, double lambda, double tol, int max_iter, bool policy, int degree,
         int refine) {
        Mesh mesh = build_structured(pf.domain_tag, pf.n);
        for (int i = 0; i < refine; ++i) mesh = refine_uniform(mesh);
        Discretization d(mesh, degree > 0 ? degree : pf.degree);
        if (!(lambda > 0.0)) {
          if (pf.lambda) {
            lambda = *pf.lambda;
          } else {
            const auto range = pf.lambda_range.value_or(std::make_pair(0.1, 100.0));
            lambda = search_lambda(pf.cordes_condition.value_or(CordesCondition::FemGeneral),
                                   pf.controls, default_samples(*d.mesh, 17), range.first,
                                   range.second)
                         .lambda;
          }
        }
        const HjbSolver solver(*d.lift, pf.controls, lambda);
        FeFunction u(*d.vh);
        const HjbReport rep =
            policy ? solver.solve_policy(tol, max_iter, &u) : solver.solve(tol, max_iter, &u);
        py::dict out;
        out["coefficients"] = u.coeffs;
        out["converged"] = rep.converged;
        out["iterations"] = rep.iterations;
        out["final_residual"] = rep.final_residual;
        out["lambda"] = rep.lambda;
        out["cell_majority_control"] = rep.cell_majority_control;
        std::vector<double> inc;
        for (const auto& r : rep.history) inc.push_back(r.inc_h1);
        out["increments"] = inc;
        if (pf.manufactured_u) {
          const ExactSolution exact = exact_from_expression(*pf.manufactured_u);
          out["errors"] = error_dict(error_report(*d.vh, *d.vbar, u, exact, pf.p));
        }
        return out;
      },
      py::arg("problem"), py::arg("lambda_") = 0.0, py::arg("tol") = 1e-8,
      py::arg("max_iter") = 500, py::arg("policy") = false, py::arg("degree") = 0,
      py::arg("refine") = 0);

  m.def(
      "gamma_weight", [](const Mat2& A) { return gamma_weight(A); },
      "Tr(A)/|A|^2 with the Frobenius norm");
  m.def(
      "gamma_lambda_weight",
      [](const Mat2& A, const Vec2& b, double c, double lambda) {
        return gamma_lambda_weight(A, b, c, lambda);
      },
      py::arg("A"), py::arg("b"), py::arg("c"), py::arg("lambda_"));

  m.def(
      "eval_expression",
      [](const std::string& src, double x, double y) { return Expression::parse(src).eval(x, y); },
      "Evaluate a coefficient expression at (x, y)");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
