// Command-line driver: Cordes feasibility checks, linear and Bellman solves,
// convergence studies, and the built-in invariant suite.
#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "ndfem/hjb.hpp"
#include "ndfem/problem_io.hpp"
#include "ndfem/reports.hpp"

using namespace ndfem;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string problem_path;
  std::string out_dir = ".";
  int levels = 0;        // 0 = use the problem file's refinement count
  int degree = 0;        // 0 = use the problem file's degree
  double p = 0.0;        // 0 = use the problem file's exponent
  double lambda = 0.0;   // 0 = search or problem value
  double tol = 1e-8;
  int max_iter = 500;
  std::uint64_t seed = 42;
  bool vtk = false;
  bool policy = false;
  bool dump_matrix = false;
  int grid = 33;
};

void write_metadata(const RunConfig& cfg, const std::string& command) {
  Json meta;
  meta["command"] = command;
  meta["timestamp_utc"] = static_cast<long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  meta["seed"] = cfg.seed;
  write_text_file(cfg.out_dir + "/metadata.json", meta.dump(2) + "\n");
}

[[noreturn]] void emit_error(const RunConfig& cfg, const std::string& command,
                             const std::string& what) {
  Json err;
  err["error"] = what;
  err["command"] = command;
  std::cerr << err.dump(2) << "\n";
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (!ec) write_text_file(cfg.out_dir + "/error.json", err.dump(2) + "\n");
  std::exit(2);
}

Mesh mesh_from_problem(const ProblemFile& pf) {
  if (pf.domain_tag == "file") {
    std::ifstream in(pf.mesh_path);
    if (!in) throw std::runtime_error("cannot open mesh file '" + pf.mesh_path + "'");
    return read_mesh(in);
  }
  return build_structured(pf.domain_tag, pf.n);
}

std::vector<Vec2> sample_points(const Mesh& mesh, int grid) {
  // Mesh quadrature points plus a plain lattice over the bounding box.
  const FeSpace probe(mesh, 2, SpaceKind::Discontinuous);
  std::vector<Vec2> pts;
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

double pick_lambda(const RunConfig& cfg, const ProblemFile& pf, const Mesh& mesh,
                   Json* search_log) {
  if (cfg.lambda > 0.0) return cfg.lambda;
  if (pf.lambda) return *pf.lambda;
  const auto pts = sample_points(mesh, cfg.grid);
  const CordesCondition cond =
      pf.cordes_condition.value_or(CordesCondition::FemGeneral);
  const auto range = pf.lambda_range.value_or(std::make_pair(0.1, 100.0));
  const LambdaSearchResult res = search_lambda(cond, pf.controls, pts, range.first, range.second);
  if (search_log) {
    (*search_log)["lambda_search"]["lambda"] = res.lambda;
    (*search_log)["lambda_search"]["eps_sup"] = res.eps_sup;
  }
  return res.lambda;
}

struct Discretization {
  Mesh mesh;
  FeSpace vh;
  FeSpace vbar;
  LiftingOperator lift;
  Discretization(Mesh m, int r, int q_coeff)
      : mesh(std::move(m)),
        vh(mesh, r, SpaceKind::ContinuousZeroTrace, q_coeff),
        vbar(mesh, r, SpaceKind::Discontinuous, q_coeff),
        lift(vh, vbar) {}
};

void export_solution(const RunConfig& cfg, const FeFunction& u) {
  write_text_file(cfg.out_dir + "/solution.json", to_json(u).dump() + "\n");
  if (cfg.vtk) write_text_file(cfg.out_dir + "/solution.vtk", vtk_scalar(u, "solution"));
}

Json mesh_stats(const Mesh& mesh) {
  Json j;
  j["cells"] = mesh.n_cells();
  j["vertices"] = mesh.n_vertices();
  j["h_max"] = mesh.h_max;
  j["quasi_uniformity"] = mesh.quasi_uniformity;
  j["area"] = mesh.total_area;
  return j;
}

int run_check_cordes(const RunConfig& cfg) {
  const ProblemFile pf = load_problem(cfg.problem_path);
  const Mesh mesh = mesh_from_problem(pf);
  const auto pts = sample_points(mesh, cfg.grid);
  const CordesCondition cond = pf.cordes_condition.value_or(CordesCondition::FemGeneral);

  Json report;
  report["problem"] = fs::path(cfg.problem_path).filename().string();
  report["mesh"] = mesh_stats(mesh);
  report["validation"] = to_json(validate_controls(pf.controls, pts));

  const bool needs_lambda =
      cond == CordesCondition::PdeGeneral || cond == CordesCondition::FemGeneral;
  if (needs_lambda && !(cfg.lambda > 0.0) && !pf.lambda && pf.lambda_range) {
    const LambdaSearchResult res =
        search_lambda(cond, pf.controls, pts, pf.lambda_range->first, pf.lambda_range->second);
    report["lambda_search"]["lambda"] = res.lambda;
    report["lambda_search"]["eps_sup"] = res.eps_sup;
    report["cordes"] = to_json(res.report);
  } else {
    const double lambda = cfg.lambda > 0.0 ? cfg.lambda : pf.lambda.value_or(1.0);
    report["cordes"] = to_json(check_cordes(cond, pf.controls, lambda, pts));
  }
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
  std::printf("max feasible eps: %s\n",
              report["cordes"]["eps_max"].is_null()
                  ? "-inf"
                  : fmt17(report["cordes"]["eps_max"].get<double>()).c_str());
  return 0;
}

int run_solve_linear(const RunConfig& cfg) {
  const ProblemFile pf = load_problem(cfg.problem_path);
  const int r = cfg.degree > 0 ? cfg.degree : pf.degree;
  const double p = cfg.p > 0.0 ? cfg.p : pf.p;
  Discretization d(mesh_from_problem(pf), r, pf.q_coeff);

  const AssembledOperator op = assemble_nondiv(d.lift, make_provider(pf.controls[0]));
  if (cfg.dump_matrix) write_text_file(cfg.out_dir + "/matrix.txt", coordinate_format(op.matrix));
  LinearSolveInfo info;
  const FeFunction u = solve_linear_system(d.vh, op, info);

  Json report;
  report["problem"] = fs::path(cfg.problem_path).filename().string();
  report["mesh"] = mesh_stats(d.mesh);
  report["degree"] = r;
  report["n_dofs"] = d.vh.n_dofs();
  report["solver"] = info.solver;
  report["residual_inf_rel"] = info.residual;
  report["singular"] = info.singular;
  if (!info.message.empty()) report["message"] = info.message;
  if (pf.manufactured_u && !info.singular) {
    const ExactSolution exact = exact_from_expression(*pf.manufactured_u);
    report["errors"] = to_json(error_report(d.vh, d.vbar, u, exact, p));
  }
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
  if (info.singular) return 2;
  export_solution(cfg, u);
  std::printf("solved: %d dofs, residual %s\n", d.vh.n_dofs(), fmt17(info.residual).c_str());
  return 0;
}

int run_solve_hjb(const RunConfig& cfg) {
  const ProblemFile pf = load_problem(cfg.problem_path);
  const int r = cfg.degree > 0 ? cfg.degree : pf.degree;
  const double p = cfg.p > 0.0 ? cfg.p : pf.p;
  Discretization d(mesh_from_problem(pf), r, pf.q_coeff);

  Json report;
  report["problem"] = fs::path(cfg.problem_path).filename().string();
  report["mesh"] = mesh_stats(d.mesh);
  report["degree"] = r;
  report["n_dofs"] = d.vh.n_dofs();
  const double lambda = pick_lambda(cfg, pf, d.mesh, &report);

  const HjbSolver solver(d.lift, pf.controls, lambda);
  FeFunction u(d.vh);
  const HjbReport rep =
      cfg.policy ? solver.solve_policy(cfg.tol, cfg.max_iter, &u) : solver.solve(cfg.tol, cfg.max_iter, &u);
  report["hjb"] = to_json(rep, /*include_history=*/false);
  report["method"] = cfg.policy ? "policy-iteration" : "contraction";
  if (pf.manufactured_u) {
    const ExactSolution exact = exact_from_expression(*pf.manufactured_u);
    report["errors"] = to_json(error_report(d.vh, d.vbar, u, exact, p));
  }

  std::vector<std::string> labels;
  for (const auto& ctl : pf.controls.controls) labels.push_back(ctl.label);
  write_text_file(cfg.out_dir + "/iteration_log.csv", iteration_csv(rep.history, labels));
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
  export_solution(cfg, u);

  // Per-cell majority control for visualization.
  std::string argmax_csv = "cell,control\n";
  for (std::size_t k = 0; k < rep.cell_majority_control.size(); ++k)
    argmax_csv += std::to_string(k) + "," + std::to_string(rep.cell_majority_control[k]) + "\n";
  write_text_file(cfg.out_dir + "/argmax.csv", argmax_csv);

  std::printf("%s after %d iterations, residual %s\n",
              rep.converged ? "converged" : "NOT converged (diverged-or-slow)", rep.iterations,
              fmt17(rep.final_residual).c_str());
  return rep.converged ? 0 : 2;
}

int run_convergence(const RunConfig& cfg) {
  const ProblemFile pf = load_problem(cfg.problem_path);
  if (!pf.manufactured_u)
    throw std::runtime_error("convergence study needs a [manufactured] u in the problem file");
  const int r = cfg.degree > 0 ? cfg.degree : pf.degree;
  const double p = cfg.p > 0.0 ? cfg.p : pf.p;
  const int levels = cfg.levels > 0 ? cfg.levels : pf.refinements;
  const ExactSolution exact = exact_from_expression(*pf.manufactured_u);

  std::vector<ErrorReport> rows;
  Mesh mesh = mesh_from_problem(pf);
  Json report;
  report["problem"] = fs::path(cfg.problem_path).filename().string();
  report["degree"] = r;
  report["p"] = p;
  Json levels_json = Json::array();

  for (int level = 0; level < levels; ++level) {
    Discretization d(mesh, r, pf.q_coeff);
    FeFunction u(d.vh);
    if (pf.controls.size() == 1) {
      LinearSolveInfo info;
      u = solve_linear_nondiv(d.lift, pf.controls[0], info);
      if (info.singular) throw std::runtime_error("level " + std::to_string(level) + ": singular system");
    } else {
      const double lambda = pick_lambda(cfg, pf, d.mesh, nullptr);
      const HjbSolver solver(d.lift, pf.controls, lambda);
      const HjbReport rep = solver.solve(cfg.tol, cfg.max_iter, &u);
      if (!rep.converged)
        throw std::runtime_error("level " + std::to_string(level) + ": Bellman iteration did not converge");
    }
    ErrorReport er = error_report(d.vh, d.vbar, u, exact, p, level);
    rows.push_back(er);
    levels_json.push_back(to_json(er));
    if (level + 1 < levels) mesh = refine_uniform(mesh);
  }

  std::vector<double> errs, hs;
  for (const auto& rw : rows) {
    errs.push_back(rw.w2ph);
    hs.push_back(rw.h);
  }
  const auto eoc = estimate_order(errs, hs);
  Json eoc_json = Json::array();
  for (const auto& e : eoc) eoc_json.push_back(e ? Json(*e) : Json(nullptr));
  report["levels"] = levels_json;
  report["eoc_w2ph"] = eoc_json;

  write_text_file(cfg.out_dir + "/table.csv", convergence_csv(rows));
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::printf("level %zu: h=%s  w2ph=%s", i, fmt17(rows[i].h).c_str(), fmt17(rows[i].w2ph).c_str());
    if (i > 0 && eoc[i - 1]) std::printf("  eoc=%s", fmt17(*eoc[i - 1]).c_str());
    std::printf("\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify: built-in invariant suite
// ---------------------------------------------------------------------------

int run_verify(const RunConfig& cfg) {
  int failures = 0;
  Json checks = Json::array();
  auto record = [&](const std::string& name, bool ok, double worst, double tol) {
    std::printf("[%s] %-32s worst %-13.3e tol %.1e\n", ok ? "PASS" : "FAIL", name.c_str(), worst, tol);
    Json j;
    j["name"] = name;
    j["ok"] = ok;
    j["worst"] = worst;
    j["tol"] = tol;
    checks.push_back(j);
    if (!ok) ++failures;
  };
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  std::vector<Mat2> mats(3);
  mats[0] = Mat2::Identity();
  mats[1] << 1, 0, 0, 2;
  mats[2] << 2, 0.5, 0.5, 1;

  // Lifting identity + two-form equivalence.
  double worst_identity = 0.0, worst_forms = 0.0;
  for (int n : {2, 4}) {
    const Mesh mesh = build_structured("unit-square", n);
    for (int r : {2, 3}) {
      const FeSpace vh(mesh, r, SpaceKind::ContinuousZeroTrace);
      const FeSpace vbar(mesh, r, SpaceKind::Discontinuous);
      const LiftingOperator lift(vh, vbar);
      const ShiftedLaplacianSolver shifted(vh, 1.0);
      for (int trial = 0; trial < 5; ++trial) {
        FeFunction w(vh), v(vh);
        for (int i = 0; i < w.coeffs.size(); ++i) w.coeffs[i] = dist(rng);
        for (int i = 0; i < v.coeffs.size(); ++i) v.coeffs[i] = dist(rng);
        for (const Mat2& A0 : mats) {
          double lhs = 0.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              lhs += A0(i, j) * v.coeffs.dot(lift.pairing_matrix() * (lift.hessian_map(i, j) * w.coeffs));
          double rhs = 0.0;
          const auto& rule = vh.cell_rule();
          for (int k = 0; k < mesh.n_cells(); ++k) {
            const double detJ = 2.0 * mesh.cell_area(k);
            for (int q = 0; q < rule.size(); ++q)
              rhs -= rule.weights[q] * detJ *
                     v.gradient(k, rule.points[q]).dot(A0 * w.gradient(k, rule.points[q]));
          }
          worst_identity = std::max(
              worst_identity, std::abs(lhs + (-rhs) - 0.0) == 0.0
                                  ? 0.0
                                  : std::abs(lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs)));
        }
        // Normalized to unit second-derivative scale so the absolute
        // tolerance is commensurate.
        FeFunction ws(vh);
        ws.coeffs = w.coeffs / double((r * n) * (r * n));
        for (int i = 0; i < 2; ++i) {
          const GradComponentView gi(ws, i);
          for (int axis : {0, 1}) {
            const FeFunction a = lift_partial(vbar, gi, axis, LiftForm::FaceAverage);
            const FeFunction b = lift_partial(vbar, gi, axis, LiftForm::InteriorJump);
            worst_forms = std::max(worst_forms, (a.coeffs - b.coeffs).lpNorm<Eigen::Infinity>());
          }
        }
      }
    }
  }
  record("lifting-identity", worst_identity <= 1e-10, worst_identity, 1e-10);
  record("two-form-equivalence", worst_forms <= 1e-10, worst_forms, 1e-10);

  // P_h non-expansiveness on broken random fields.
  {
    const Mesh mesh = build_structured("unit-square", 4);
    const FeSpace vh(mesh, 2, SpaceKind::ContinuousZeroTrace);
    const FeSpace vbar(mesh, 2, SpaceKind::Discontinuous);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      FeFunction f(vbar);
      for (int i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = dist(rng);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(vh.n_dofs());
      const auto& rule = vh.cell_rule();
      for (int k = 0; k < mesh.n_cells(); ++k) {
        const double detJ = 2.0 * mesh.cell_area(k);
        const auto& dofs = vh.cell_dofs(k);
        for (int q = 0; q < rule.size(); ++q) {
          const double fv = f.value(k, rule.points[q]);
          for (int l = 0; l < vh.n_local(); ++l)
            if (dofs[l] >= 0) rhs[dofs[l]] += rule.weights[q] * detJ * fv * vh.values_at_q()(q, l);
        }
      }
      const Eigen::VectorXd c = vh.solve_mass(rhs);
      const double ratio = std::sqrt(std::max(0.0, c.dot(rhs))) / f.l2_norm();
      worst = std::max(worst, ratio);
    }
    record("projection-non-expansive", worst <= 1.0 + 1e-12, worst, 1.0 + 1e-12);
  }

  // Scheme reduction: singleton Bellman solve equals the linear solve.
  {
    const Mesh mesh = build_structured("unit-square", 4);
    const FeSpace vh(mesh, 2, SpaceKind::ContinuousZeroTrace);
    const FeSpace vbar(mesh, 2, SpaceKind::Discontinuous);
    const LiftingOperator lift(vh, vbar);
    Control ctl;
    ctl.label = "cont";
    ctl.A.entry = {CoefficientField::expression("1 + 0.4*sin(pi*x)*sin(pi*y)"),
                   CoefficientField::constant(0.0), CoefficientField::constant(0.0),
                   CoefficientField::constant(1.0)};
    ctl.b.entry = {CoefficientField::constant(0.0), CoefficientField::constant(0.0)};
    ctl.c = CoefficientField::constant(0.0);
    ctl.f = CoefficientField::expression("sin(pi*x)*sin(pi*y)");
    LinearSolveInfo info;
    const FeFunction ulin = solve_linear_nondiv(lift, ctl, info);
    ControlSet single;
    single.controls.push_back(ctl);
    const HjbSolver solver(lift, single, 1.0);
    FeFunction uhjb(vh);
    solver.solve(1e-11, 500, &uhjb);
    FeFunction diff(vh);
    diff.coeffs = uhjb.coeffs - ulin.coeffs;
    const double dist_w2 = w2ph_norm(diff, 2.0);
    record("scheme-reduction", !info.singular && dist_w2 <= 1e-8, dist_w2, 1e-8);
  }

  Json report;
  report["checks"] = checks;
  report["failures"] = failures;
  report["seed"] = cfg.seed;
  write_text_file(cfg.out_dir + "/report.json", report.dump(2) + "\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite element solver for non-divergence-form elliptic PDEs and Bellman equations"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string command;
  auto add_common = [&](CLI::App* sub, bool needs_problem) {
    if (needs_problem)
      sub->add_option("--problem", cfg.problem_path, "problem file")->required();
    sub->add_option("--levels", cfg.levels, "refinement levels");
    sub->add_option("--degree", cfg.degree, "polynomial degree r");
    sub->add_option("--p", cfg.p, "Lebesgue exponent for error norms");
    sub->add_option("--lambda", cfg.lambda, "shift parameter (overrides the problem file)");
    sub->add_option("--tol", cfg.tol, "iteration tolerance");
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap");
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "seed for randomized suites");
    sub->add_option("--grid", cfg.grid, "extra sample-lattice resolution for Cordes checks");
    sub->add_flag("--vtk", cfg.vtk, "write solution.vtk");
  };

  CLI::App* c1 = app.add_subcommand("check-cordes", "evaluate a Cordes-type feasibility condition");
  add_common(c1, true);
  CLI::App* c2 = app.add_subcommand("solve-linear", "solve the linear non-divergence problem");
  add_common(c2, true);
  c2->add_flag("--dump-matrix", cfg.dump_matrix, "export the assembled matrix in coordinate format");
  CLI::App* c3 = app.add_subcommand("solve-hjb", "solve the Bellman problem");
  add_common(c3, true);
  c3->add_flag("--policy", cfg.policy, "use policy iteration instead of the contraction map");
  CLI::App* c4 = app.add_subcommand("convergence", "manufactured-solution refinement study");
  add_common(c4, true);
  CLI::App* c5 = app.add_subcommand("verify", "run the built-in invariant suite");
  add_common(c5, false);

  CLI11_PARSE(app, argc, argv);

  if (c1->parsed()) command = "check-cordes";
  else if (c2->parsed()) command = "solve-linear";
  else if (c3->parsed()) command = "solve-hjb";
  else if (c4->parsed()) command = "convergence";
  else command = "verify";

  try {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    int status = 0;
    if (command == "check-cordes") status = run_check_cordes(cfg);
    else if (command == "solve-linear") status = run_solve_linear(cfg);
    else if (command == "solve-hjb") status = run_solve_hjb(cfg);
    else if (command == "convergence") status = run_convergence(cfg);
    else status = run_verify(cfg);
    write_metadata(cfg, command);
    return status;
  } catch (const std::exception& e) {
    emit_error(cfg, command, e.what());
  }
}
