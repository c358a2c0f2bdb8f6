#include <doctest.h>

#include <cmath>
#include <random>

#include "example1_problem.hpp"
#include "ndfem/assembly.hpp"
#include "ndfem/norms.hpp"
#include "poly_oracle.hpp"

using namespace ndfem;

namespace {

struct Workspace {
  Mesh mesh;
  FeSpace vh;
  FeSpace vbar;
  LiftingOperator lift;
  Workspace(int n, int r)
      : mesh(build_structured("unit-square", n)),
        vh(mesh, r, SpaceKind::ContinuousZeroTrace),
        vbar(mesh, r, SpaceKind::Discontinuous),
        lift(vh, vbar) {}
};

FeFunction random_fn(const FeSpace& vh, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  FeFunction u(vh);
  for (int i = 0; i < u.coeffs.size(); ++i) u.coeffs[i] = dist(rng);
  return u;
}

Control identity_laplace_control(const ScalarFn& f) {
  Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  ctl.f = CoefficientField::analytic(f);
  return ctl;
}

}  // namespace

TEST_CASE("identity coefficients reduce to the negative stiffness matrix") {
  Workspace ws(4, 2);
  const Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  const AssembledOperator op = assemble_nondiv(ws.lift, make_provider(ctl));
  const ShiftedLaplacianSolver shifted(ws.vh, 1.0);  // its stiffness block is assembled directly
  const SparseMat diff = op.matrix + shifted.stiffness();
  double max_abs = 0.0, scale = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SparseMat::InnerIterator it(diff, c); it; ++it) max_abs = std::max(max_abs, std::abs(it.value()));
  for (int c = 0; c < op.matrix.outerSize(); ++c)
    for (SparseMat::InnerIterator it(op.matrix, c); it; ++it) scale = std::max(scale, std::abs(it.value()));
  CHECK(max_abs <= 1e-10 * scale);
}

TEST_CASE("simultaneous coefficient scaling leaves the solution unchanged") {
  Workspace ws(4, 2);
  Control base;
  base.label = "a";
  base.A.entry = {CoefficientField::expression("1 + 0.4*sin(pi*x)*sin(pi*y)"),
                  CoefficientField::constant(0.0), CoefficientField::constant(0.0),
                  CoefficientField::constant(1.0)};
  base.b.entry = {CoefficientField::expression("0.2*y"), CoefficientField::constant(0.1)};
  base.c = CoefficientField::constant(-0.5);
  base.f = CoefficientField::expression("sin(pi*x)*sin(pi*y)");

  Control doubled = base;
  for (auto& e : doubled.A.entry) {
    const CoefficientField orig = e;
    e = CoefficientField::analytic([orig](const Vec2& x) { return 2.0 * orig.eval(x); });
  }
  for (auto& e : doubled.b.entry) {
    const CoefficientField orig = e;
    e = CoefficientField::analytic([orig](const Vec2& x) { return 2.0 * orig.eval(x); });
  }
  doubled.c = CoefficientField::constant(-1.0);
  doubled.f = CoefficientField::analytic([](const Vec2& x) {
    return 2.0 * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
  });

  LinearSolveInfo ia, ib;
  const FeFunction ua = solve_linear_nondiv(ws.lift, base, ia);
  const FeFunction ub = solve_linear_nondiv(ws.lift, doubled, ib);
  REQUIRE(!ia.singular);
  REQUIRE(!ib.singular);
  CHECK((ua.coeffs - ub.coeffs).lpNorm<Eigen::Infinity>() <=
        1e-10 * (1.0 + ua.coeffs.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("coefficient evaluation failures abort with the point attached") {
  Workspace ws(2, 2);
  const CoeffProvider bad = [](int, int, const Vec2&) -> WeightedCoeffs {
    throw std::runtime_error("boom");
  };
  CHECK_THROWS_WITH_AS(assemble_nondiv(ws.lift, bad),
                       doctest::Contains("coefficient evaluation failed at"), std::runtime_error);
}

TEST_CASE("manufactured Poisson problem matches the classical FEM solve") {
  Workspace ws(8, 2);
  const ScalarFn f = [](const Vec2& x) {
    return -2 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
  };
  LinearSolveInfo info;
  const FeFunction u = solve_linear_nondiv(ws.lift, identity_laplace_control(f), info);
  REQUIRE(!info.singular);
  CHECK(info.residual <= 1e-9);

  // Classical Poisson system: K u = -(f, v).
  const ShiftedLaplacianSolver shifted(ws.vh, 1.0);
  Eigen::SimplicialLDLT<SparseMat> chol(shifted.stiffness());
  const Eigen::VectorXd upoisson = chol.solve(Eigen::VectorXd(-assemble_load(ws.vh, f)));
  CHECK((u.coeffs - upoisson).lpNorm<Eigen::Infinity>() <=
        1e-9 * (1.0 + upoisson.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("shifted Laplacian: exact symmetry and the resolvent identity") {
  Workspace ws(4, 2);
  const double lambda = 2.5;
  const ShiftedLaplacianSolver shifted(ws.vh, lambda);

  // Bitwise symmetry.
  const SparseMat St = SparseMat(shifted.matrix().transpose());
  const SparseMat diff = shifted.matrix() - St;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SparseMat::InnerIterator it(diff, c); it; ++it) CHECK(it.value() == 0.0);

  // M_lambda(L_I w - lambda w) = w.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    const FeFunction w = random_fn(ws.vh, rng);
    // Functional of L_I w - lambda w against the V_h basis.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ws.vh.n_dofs());
    for (int i = 0; i < 2; ++i)
      g += ws.lift.pairing_matrix() * (ws.lift.hessian_map(i, i) * w.coeffs);
    g -= lambda * (ws.vh.mass_matrix() * w.coeffs);
    const Eigen::VectorXd back = shifted.apply_resolvent(g);
    CHECK((back - w.coeffs).lpNorm<Eigen::Infinity>() <=
          1e-9 * (1.0 + w.coeffs.lpNorm<Eigen::Infinity>()));
  }

  // Zero functional maps to zero.
  CHECK(shifted.apply_resolvent(Eigen::VectorXd::Zero(ws.vh.n_dofs())).norm() == 0.0);
  CHECK_THROWS_AS(ShiftedLaplacianSolver(ws.vh, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ShiftedLaplacianSolver(ws.vh, -1.0), std::invalid_argument);
}

TEST_CASE("constant-matrix operator against the dense oracle on two cells") {
  Workspace ws(1, 2);
  std::mt19937_64 rng(11);
  const FeFunction w = random_fn(ws.vh, rng);
  Mat2 A0;
  A0 << 1, 0, 0, 2;

  const FeFunction Lw = apply_constant_operator(ws.lift, A0, w);

  // Oracle: represent w cell by cell as exact polynomials (the oracle basis
  // shares the lattice ordering), lift each gradient component by dense
  // assembly, and compare (L w, v) with exact integrals.
  const Mesh& mesh = ws.mesh;
  std::vector<oracle::Poly2> wpolys(mesh.n_cells());
  std::vector<std::vector<oracle::Poly2>> cell_basis(mesh.n_cells());
  for (int k = 0; k < mesh.n_cells(); ++k) {
    const Vec2 p0 = mesh.vertices[mesh.cells[k][0]];
    const Vec2 p1 = mesh.vertices[mesh.cells[k][1]];
    const Vec2 p2 = mesh.vertices[mesh.cells[k][2]];
    cell_basis[k] = oracle::physical_lagrange_basis(p0, p1, p2, 2);
    for (int l = 0; l < ws.vh.n_local(); ++l) {
      const int d = ws.vh.cell_dofs(k)[l];
      if (d >= 0) wpolys[k] = wpolys[k] + cell_basis[k][l] * w.coeffs[d];
    }
  }

  // Dense lifting of (grad w)_i along axis j, per cell.
  auto dense_lift = [&](int i, int j) {
    std::vector<oracle::Poly2> out(mesh.n_cells());
    for (int k = 0; k < mesh.n_cells(); ++k) {
      const Vec2 p0 = mesh.vertices[mesh.cells[k][0]];
      const Vec2 p1 = mesh.vertices[mesh.cells[k][1]];
      const Vec2 p2 = mesh.vertices[mesh.cells[k][2]];
      const int n = static_cast<int>(cell_basis[k].size());
      Eigen::MatrixXd mass(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          mass(a, b) = (cell_basis[k][a] * cell_basis[k][b]).integrate_triangle(p0, p1, p2);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
      for (int m = 0; m < n; ++m) {
        rhs[m] -= (wpolys[k].derivative(i) * cell_basis[k][m].derivative(j))
                      .integrate_triangle(p0, p1, p2);
        for (int e = 0; e < 3; ++e) {
          const Face& fc = mesh.face(mesh.cell_faces(k)[e]);
          const Vec2 a = mesh.vertices[fc.vertices[0]];
          const Vec2 b = mesh.vertices[fc.vertices[1]];
          oracle::Poly2 avg = wpolys[fc.cell_plus].derivative(i);
          if (!fc.is_boundary()) avg = (avg + wpolys[fc.cell_minus].derivative(i)) * 0.5;
          const double sign_k = (fc.cell_plus == k) ? 1.0 : -1.0;
          rhs[m] += sign_k * fc.normal[j] * (avg * cell_basis[k][m]).integrate_segment(a, b);
        }
      }
      const Eigen::VectorXd c = mass.fullPivLu().solve(rhs);
      for (int m = 0; m < n; ++m) out[k] = out[k] + cell_basis[k][m] * c[m];
    }
    return out;
  };

  std::vector<oracle::Poly2> contraction(mesh.n_cells());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (A0(i, j) == 0.0) continue;
      const auto lifted = dense_lift(i, j);
      for (int k = 0; k < mesh.n_cells(); ++k)
        contraction[k] = contraction[k] + lifted[k] * A0(i, j);
    }

  // Compare (L_{A0,h} w, v) for random v in V_h.
  for (int trial = 0; trial < 4; ++trial) {
    const FeFunction v = random_fn(ws.vh, rng);
    const double lhs = v.coeffs.dot(ws.vh.mass_matrix() * Lw.coeffs);
    double rhs = 0.0;
    for (int k = 0; k < mesh.n_cells(); ++k) {
      const Vec2 p0 = mesh.vertices[mesh.cells[k][0]];
      const Vec2 p1 = mesh.vertices[mesh.cells[k][1]];
      const Vec2 p2 = mesh.vertices[mesh.cells[k][2]];
      oracle::Poly2 vpoly;
      for (int l = 0; l < ws.vh.n_local(); ++l) {
        const int d = ws.vh.cell_dofs(k)[l];
        if (d >= 0) vpoly = vpoly + cell_basis[k][l] * v.coeffs[d];
      }
      rhs += (contraction[k] * vpoly).integrate_triangle(p0, p1, p2);
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  // Linearity in w.
  const FeFunction w2 = random_fn(ws.vh, rng);
  FeFunction combo(ws.vh);
  combo.coeffs = 0.75 * w.coeffs - 2.0 * w2.coeffs;
  const Eigen::VectorXd lin = 0.75 * apply_constant_operator(ws.lift, A0, w).coeffs -
                              2.0 * apply_constant_operator(ws.lift, A0, w2).coeffs;
  CHECK((apply_constant_operator(ws.lift, A0, combo).coeffs - lin).lpNorm<Eigen::Infinity>() <=
        1e-12 * (1.0 + lin.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("discontinuous Cordes-feasible coefficients stay stable under refinement") {
  // A jumps between diag(2,1) and diag(1,2) across x = 1/2 (special-condition
  // margin 4/5); the solver must stay regular and the solution norm bounded.
  Control ctl;
  ctl.label = "jump";
  ctl.A.entry = {CoefficientField::expression("2 - step(x - 0.5)"), CoefficientField::constant(0.0),
                 CoefficientField::constant(0.0), CoefficientField::expression("1 + step(x - 0.5)")};
  ctl.b.entry = {CoefficientField::constant(0.0), CoefficientField::constant(0.0)};
  ctl.c = CoefficientField::constant(0.0);
  ctl.f = CoefficientField::constant(1.0);

  double prev_norm = 0.0;
  for (int level = 0; level < 2; ++level) {
    const int n = 4 << level;
    Workspace ws(n, 2);
    LinearSolveInfo info;
    const FeFunction u = solve_linear_nondiv(ws.lift, ctl, info);
    REQUIRE(!info.singular);
    Eigen::VectorXd Mu = ws.vh.mass_matrix() * u.coeffs;
    const double l2 = std::sqrt(u.coeffs.dot(Mu));
    if (level > 0) CHECK(l2 <= 2.0 * prev_norm + 1e-12);
    prev_norm = l2;
  }
}

TEST_CASE("drift and reaction terms converge against a manufactured solution") {
  // A = I, b = (1, -1/2), c = -1: the full operator with a non-symmetric
  // system pins the sign and placement of every term.
  const ExactSolution exact{
      [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); },
      [](const Vec2& x) {
        return Vec2(M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                    M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
      },
      [](const Vec2& x) {
        const double s = std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
        const double c = std::cos(M_PI * x.x()) * std::cos(M_PI * x.y());
        Mat2 H;
        H << -M_PI * M_PI * s, M_PI * M_PI * c, M_PI * M_PI * c, -M_PI * M_PI * s;
        return H;
      }};
  const Vec2 drift(1.0, -0.5);
  Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  ctl.b.entry = {CoefficientField::constant(drift.x()), CoefficientField::constant(drift.y())};
  ctl.c = CoefficientField::constant(-1.0);
  ctl.f = CoefficientField::analytic([&, drift](const Vec2& x) {
    return exact.hess(x).trace() + drift.dot(exact.grad(x)) - exact.value(x);
  });

  std::vector<double> errs, hs;
  for (int n : {4, 8, 16}) {
    Workspace ws(n, 2);
    LinearSolveInfo info;
    const FeFunction u = solve_linear_nondiv(ws.lift, ctl, info);
    REQUIRE(!info.singular);
    const ErrorReport er = error_report(ws.vh, ws.vbar, u, exact, 2.0);
    errs.push_back(er.w2ph);
    hs.push_back(er.h);
  }
  const double eoc = std::log(errs[1] / errs[2]) / std::log(hs[1] / hs[2]);
  CHECK(eoc >= 0.9);
  CHECK(eoc <= 1.3);
}

TEST_CASE("degree-4 spaces solve end to end at the faster rate") {
  const ExactSolution exact{
      [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); },
      [](const Vec2& x) {
        return Vec2(M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                    M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
      },
      [](const Vec2& x) {
        const double s = std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
        const double c = std::cos(M_PI * x.x()) * std::cos(M_PI * x.y());
        Mat2 H;
        H << -M_PI * M_PI * s, M_PI * M_PI * c, M_PI * M_PI * c, -M_PI * M_PI * s;
        return H;
      }};
  Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  ctl.f = CoefficientField::analytic([&](const Vec2& x) { return exact.hess(x).trace(); });

  std::vector<double> errs;
  for (int n : {2, 4}) {
    Workspace ws(n, 4);
    LinearSolveInfo info;
    const FeFunction u = solve_linear_nondiv(ws.lift, ctl, info);
    REQUIRE(!info.singular);
    errs.push_back(error_report(ws.vh, ws.vbar, u, exact, 2.0).w2ph);
  }
  // Broken second-order error contracts like h^(r-1) = h^3.
  CHECK(errs[0] / errs[1] >= 5.0);
}

TEST_CASE("error reports support exponents below 2") {
  Workspace ws(4, 2);
  const ExactSolution exact{
      [](const Vec2& x) { return std::sin(M_PI * x.x()) * std::sin(M_PI * x.y()); },
      [](const Vec2& x) {
        return Vec2(M_PI * std::cos(M_PI * x.x()) * std::sin(M_PI * x.y()),
                    M_PI * std::sin(M_PI * x.x()) * std::cos(M_PI * x.y()));
      },
      [](const Vec2& x) {
        const double s = std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
        const double c = std::cos(M_PI * x.x()) * std::cos(M_PI * x.y());
        Mat2 H;
        H << -M_PI * M_PI * s, M_PI * M_PI * c, M_PI * M_PI * c, -M_PI * M_PI * s;
        return H;
      }};
  Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  ctl.f = CoefficientField::analytic([&](const Vec2& x) { return exact.hess(x).trace(); });
  LinearSolveInfo info;
  const FeFunction u = solve_linear_nondiv(ws.lift, ctl, info);
  REQUIRE(!info.singular);
  const ErrorReport r15 = error_report(ws.vh, ws.vbar, u, exact, 1.5);
  const ErrorReport r20 = error_report(ws.vh, ws.vbar, u, exact, 2.0);
  CHECK(r15.w2ph > 0.0);
  CHECK(r15.lp > 0.0);
  CHECK(std::isfinite(r15.w2ph_jump));
  // On the unit-measure domain the Lp scale of the error is comparable
  // across nearby exponents.
  CHECK(r15.w2ph <= 4.0 * r20.w2ph);
  CHECK(r20.w2ph <= 4.0 * r15.w2ph);
}

TEST_CASE("non-convex domain: Poisson solve on the l-shape converges") {
  // u = sin(2 pi x) sin(2 pi y) vanishes on the whole l-shape boundary,
  // including the re-entrant notch edges at x = 1/2 and y = 1/2.
  const ExactSolution exact{
      [](const Vec2& x) { return std::sin(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y()); },
      [](const Vec2& x) {
        return Vec2(2 * M_PI * std::cos(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y()),
                    2 * M_PI * std::sin(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y()));
      },
      [](const Vec2& x) {
        const double s = std::sin(2 * M_PI * x.x()) * std::sin(2 * M_PI * x.y());
        const double c = std::cos(2 * M_PI * x.x()) * std::cos(2 * M_PI * x.y());
        const double w = 4 * M_PI * M_PI;
        Mat2 H;
        H << -w * s, w * c, w * c, -w * s;
        return H;
      }};
  Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  ctl.f = CoefficientField::analytic([&](const Vec2& x) { return exact.hess(x).trace(); });

  std::vector<double> errs;
  for (int n : {4, 8}) {
    const Mesh mesh = build_structured("l-shape", n);
    const FeSpace vh(mesh, 2, SpaceKind::ContinuousZeroTrace);
    const FeSpace vbar(mesh, 2, SpaceKind::Discontinuous);
    const LiftingOperator lift(vh, vbar);
    LinearSolveInfo info;
    const FeFunction u = solve_linear_nondiv(lift, ctl, info);
    REQUIRE(!info.singular);
    errs.push_back(error_report(vh, vbar, u, exact, 2.0).w2ph);
  }
  CHECK(errs[1] < 0.75 * errs[0]);
}

TEST_CASE("projected operator norm is positive on nonzero inputs") {
  Workspace ws(4, 2);
  std::mt19937_64 rng(21);
  const Control ctl = testutil::constant_matrix_control(Mat2::Identity());
  const AssembledOperator op = assemble_nondiv(ws.lift, make_provider(ctl));
  const FeFunction w = random_fn(ws.vh, rng);
  CHECK(projected_operator_l2(ws.lift, op, w) > 0.0);
}
