#include "ndfem/coefficients.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ndfem {

// ---------------------------------------------------------------------------
// CoefficientField
// ---------------------------------------------------------------------------

CoefficientField CoefficientField::constant(double v) {
  CoefficientField f;
  f.kind_ = Kind::Constant;
  f.const_ = v;
  f.smoothness_ = 0;
  return f;
}

CoefficientField CoefficientField::expression(const std::string& source, int smoothness) {
  CoefficientField f;
  f.kind_ = Kind::Expr;
  f.expr_ = Expression::parse(source);
  f.expr_src_ = source;
  double v = 0.0;
  if (f.expr_->is_constant(&v)) {
    f.kind_ = Kind::Constant;
    f.const_ = v;
    f.smoothness_ = 0;
  } else {
    f.smoothness_ = smoothness;
  }
  return f;
}

CoefficientField CoefficientField::per_cell(std::vector<double> values) {
  CoefficientField f;
  f.kind_ = Kind::PerCell;
  f.table_ = std::move(values);
  f.smoothness_ = 0;
  return f;
}

CoefficientField CoefficientField::analytic(std::function<double(const Vec2&)> fn, int smoothness) {
  CoefficientField f;
  f.kind_ = Kind::Analytic;
  f.fn_ = std::move(fn);
  f.smoothness_ = smoothness;
  return f;
}

double CoefficientField::eval(const Vec2& x, int cell) const {
  switch (kind_) {
    case Kind::Constant: return const_;
    case Kind::Expr: return expr_->eval(x.x(), x.y());
    case Kind::PerCell:
      if (cell < 0 || cell >= (int)table_.size())
        throw std::out_of_range("CoefficientField: per-cell table needs a valid cell index");
      return table_[cell];
    case Kind::Analytic: return fn_(x);
  }
  return 0.0;
}

bool CoefficientField::is_constant(double* value) const {
  if (kind_ != Kind::Constant) return false;
  if (value) *value = const_;
  return true;
}

bool CoefficientField::differentiable() const {
  return kind_ == Kind::Constant || kind_ == Kind::Expr;
}

CoefficientField CoefficientField::derivative(int axis) const {
  if (kind_ == Kind::Constant) return constant(0.0);
  if (kind_ != Kind::Expr)
    throw std::logic_error("CoefficientField: only constants and expressions differentiate");
  CoefficientField f;
  f.kind_ = Kind::Expr;
  f.expr_ = expr_->derivative(axis);
  f.expr_src_ = f.expr_->to_string();
  double v = 0.0;
  if (f.expr_->is_constant(&v)) return constant(v);
  f.smoothness_ = smoothness_;
  return f;
}

std::string CoefficientField::describe() const {
  switch (kind_) {
    case Kind::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", const_);
      return buf;
    }
    case Kind::Expr: return expr_src_;
    case Kind::PerCell: return "<per-cell table>";
    case Kind::Analytic: return "<analytic>";
  }
  return {};
}

Mat2 MatrixCoefficient::eval(const Vec2& x, int cell) const {
  Mat2 A;
  A << entry[0].eval(x, cell), entry[1].eval(x, cell), entry[2].eval(x, cell),
      entry[3].eval(x, cell);
  return A;
}

Vec2 VectorCoefficient::eval(const Vec2& x, int cell) const {
  return Vec2(entry[0].eval(x, cell), entry[1].eval(x, cell));
}

int MatrixCoefficient::smoothness() const {
  int s = 0;
  for (const auto& e : entry) s = std::max(s, e.smoothness());
  return s;
}

int ControlSet::max_smoothness() const {
  int s = 0;
  for (const auto& ctl : controls) {
    s = std::max(s, ctl.A.smoothness());
    s = std::max(s, ctl.b.entry[0].smoothness());
    s = std::max(s, ctl.b.entry[1].smoothness());
    s = std::max(s, ctl.c.smoothness());
    s = std::max(s, ctl.f.smoothness());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

double gamma_weight(const Mat2& A) {
  const double frob2 = A.squaredNorm();
  if (frob2 == 0.0) throw std::domain_error("gamma_weight: |A| = 0");
  return A.trace() / frob2;
}

double gamma_lambda_weight(const Mat2& A, const Vec2& b, double c, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("gamma_lambda_weight: lambda must be > 0");
  if (c > 0.0) throw std::invalid_argument("gamma_lambda_weight: requires c <= 0");
  const double num = A.trace() + std::abs(c) / lambda;
  const double den = A.squaredNorm() + b.squaredNorm() / (2.0 * lambda) + (c / lambda) * (c / lambda);
  if (den == 0.0) throw std::domain_error("gamma_lambda_weight: zero denominator");
  return num / den;
}

// ---------------------------------------------------------------------------
// Cordes conditions
// ---------------------------------------------------------------------------

CordesCondition cordes_condition_from_string(const std::string& id) {
  if (id == "pde-general") return CordesCondition::PdeGeneral;
  if (id == "fem-general") return CordesCondition::FemGeneral;
  if (id == "pde-special") return CordesCondition::PdeSpecial;
  if (id == "fem-special") return CordesCondition::FemSpecial;
  throw std::invalid_argument("unknown Cordes condition id '" + id + "'");
}

std::string to_string(CordesCondition c) {
  switch (c) {
    case CordesCondition::PdeGeneral: return "pde-general";
    case CordesCondition::FemGeneral: return "fem-general";
    case CordesCondition::PdeSpecial: return "pde-special";
    case CordesCondition::FemSpecial: return "fem-special";
  }
  return {};
}

namespace {

// Left-hand side of the chosen condition at one point for one control.
// Returns false when the fem-general denominator is non-positive.
bool condition_lhs(CordesCondition cond, const Mat2& A, const Vec2& b, double c, double lambda,
                   double& lhs) {
  const double frob2 = A.squaredNorm();
  const double tr = A.trace();
  const double ac = std::abs(c);
  switch (cond) {
    case CordesCondition::PdeGeneral: {
      const double num = frob2 + b.squaredNorm() / (2.0 * lambda) + (ac * ac) / (lambda * lambda);
      const double den = tr + ac / lambda;
      lhs = num / (den * den);
      return true;
    }
    case CordesCondition::FemGeneral: {
      const double num = frob2 / (tr * tr);
      const double den = 1.0 + 2.0 * ac / (lambda * tr) -
                         (ac * ac / (lambda * lambda) + b.squaredNorm() / (2.0 * lambda)) / frob2;
      if (!(den > 0.0)) return false;
      lhs = num / den;
      return true;
    }
    case CordesCondition::PdeSpecial:
    case CordesCondition::FemSpecial:
      lhs = frob2 / (tr * tr);
      return true;
  }
  return true;
}

double threshold_shift(CordesCondition cond, int d) {
  return (cond == CordesCondition::PdeSpecial || cond == CordesCondition::FemSpecial) ? d - 1 : d;
}

}  // namespace

CordesReport check_cordes(CordesCondition condition, const ControlSet& controls, double lambda,
                          const std::vector<Vec2>& sample_points, int dimension) {
  if (controls.size() == 0) throw std::invalid_argument("check_cordes: empty control set");
  if (sample_points.empty()) throw std::invalid_argument("check_cordes: no sample points");
  const bool needs_lambda =
      condition == CordesCondition::PdeGeneral || condition == CordesCondition::FemGeneral;
  if (needs_lambda && !(lambda > 0.0))
    throw std::invalid_argument("check_cordes: lambda must be > 0 for the general conditions");

  CordesReport rep;
  rep.condition = condition;
  rep.dimension = dimension;
  rep.lambda = lambda;
  rep.worst_lhs = -std::numeric_limits<double>::infinity();

  const double shift = threshold_shift(condition, dimension);
  for (std::size_t p = 0; p < sample_points.size(); ++p) {
    const Vec2& x = sample_points[p];
    for (int a = 0; a < controls.size(); ++a) {
      const Control& ctl = controls[a];
      const Mat2 A = ctl.A.eval(x);
      const Vec2 b = ctl.b.eval(x);
      const double c = ctl.c.eval(x);
      double lhs = 0.0;
      if (!condition_lhs(condition, A, b, c, lambda, lhs)) {
        if (rep.infeasible_points == 0) rep.first_infeasible_point = x;
        ++rep.infeasible_points;
        continue;
      }
      if (lhs > rep.worst_lhs) {
        rep.worst_lhs = lhs;
        rep.worst_point = x;
        rep.worst_control = a;
      }
    }
  }

  if (rep.infeasible_points > 0) {
    rep.eps_sup = -std::numeric_limits<double>::infinity();
  } else {
    rep.eps_sup = 1.0 / rep.worst_lhs - shift;
  }
  rep.eps_max = std::min(rep.eps_sup, 1.0 - 1e-12);
  return rep;
}

LambdaSearchResult search_lambda(CordesCondition condition, const ControlSet& controls,
                                 const std::vector<Vec2>& sample_points, double lambda_lo,
                                 double lambda_hi, int dimension) {
  if (!(0.0 < lambda_lo && lambda_lo < lambda_hi))
    throw std::invalid_argument("search_lambda: need 0 < lambda_lo < lambda_hi");

  auto objective = [&](double lam) {
    return check_cordes(condition, controls, lam, sample_points, dimension).eps_sup;
  };

  // Coarse log-spaced grid.
  const int grid = 64;
  const double llo = std::log(lambda_lo), lhi = std::log(lambda_hi);
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  std::vector<double> lam(grid);
  for (int i = 0; i < grid; ++i) {
    lam[i] = std::exp(llo + (lhi - llo) * i / (grid - 1));
    const double v = objective(lam[i]);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }

  // Golden-section refinement in log(lambda) around the best grid point.
  double a = std::log(lam[std::max(0, best - 1)]);
  double b = std::log(lam[std::min(grid - 1, best + 1)]);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective(std::exp(x1)), f2 = objective(std::exp(x2));
  while ((b - a) > 1e-6) {  // relative width in lambda since the axis is log
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(std::exp(x1));
    }
  }
  const double lam_star = std::exp(0.5 * (a + b));
  LambdaSearchResult res;
  res.report = check_cordes(condition, controls, lam_star, sample_points, dimension);
  res.lambda = lam_star;
  res.eps_sup = res.report.eps_sup;
  if (best_val > res.eps_sup) {  // keep the grid winner if refinement lost it
    res.lambda = lam[best];
    res.report = check_cordes(condition, controls, lam[best], sample_points, dimension);
    res.eps_sup = res.report.eps_sup;
  }
  return res;
}

ValidationReport validate_controls(const ControlSet& controls,
                                   const std::vector<Vec2>& sample_points) {
  ValidationReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_c = -std::numeric_limits<double>::infinity();
  for (const Vec2& x : sample_points) {
    for (int a = 0; a < controls.size(); ++a) {
      const Control& ctl = controls[a];
      const Mat2 A = ctl.A.eval(x);
      const double asym = std::abs(A(0, 1) - A(1, 0));
      // Eigenvalues of the symmetrized matrix.
      const Mat2 S = 0.5 * (A + A.transpose());
      const double mean = 0.5 * (S(0, 0) + S(1, 1));
      const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
      const double disc = std::sqrt(std::max(0.0, mean * mean - det));
      const double lam_min = mean - disc;
      const double c = ctl.c.eval(x);
      if (lam_min < rep.min_eigenvalue) {
        rep.min_eigenvalue = lam_min;
        rep.worst_point = x;
      }
      rep.max_asymmetry = std::max(rep.max_asymmetry, asym);
      rep.max_c = std::max(rep.max_c, c);
    }
  }
  return rep;
}

std::vector<Vec2> uniform_grid_samples(double x0, double x1, double y0, double y1, int m) {
  std::vector<Vec2> pts;
  pts.reserve(std::size_t(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      pts.emplace_back(x0 + (x1 - x0) * (i + 0.5) / m, y0 + (y1 - y0) * (j + 0.5) / m);
  return pts;
}

}  // namespace ndfem
