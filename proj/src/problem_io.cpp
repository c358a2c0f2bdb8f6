#include "ndfem/problem_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ndfem {

namespace {

struct ParsePos {
  std::size_t byte = 0;
  int line = 1;
};

[[noreturn]] void fail(const ParsePos& pos, const std::string& msg) {
  throw std::runtime_error("problem file, line " + std::to_string(pos.line) + " (byte " +
                           std::to_string(pos.byte) + "): " + msg);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

CoefficientField scalar_field(const std::string& value, const ParsePos& pos) {
  try {
    return CoefficientField::expression(value);
  } catch (const ExprError& e) {
    fail(pos, std::string(e.what()));
  }
}

std::array<CoefficientField, 4> matrix_field(const std::string& value, const ParsePos& pos) {
  std::array<CoefficientField, 4> out;
  if (value.rfind("const ", 0) == 0) {
    std::stringstream ss(value.substr(6));
    double v[4];
    if (!(ss >> v[0] >> v[1] >> v[2] >> v[3])) fail(pos, "expected 'const a11 a12 a21 a22'");
    for (int i = 0; i < 4; ++i) out[i] = CoefficientField::constant(v[i]);
    return out;
  }
  const auto parts = split(value, ';');
  if (parts.size() != 4) fail(pos, "matrix coefficient needs 4 ';'-separated expressions");
  for (int i = 0; i < 4; ++i) out[i] = scalar_field(parts[i], pos);
  return out;
}

std::array<CoefficientField, 2> vector_field(const std::string& value, const ParsePos& pos) {
  std::array<CoefficientField, 2> out;
  if (value.rfind("const ", 0) == 0) {
    std::stringstream ss(value.substr(6));
    double v[2];
    if (!(ss >> v[0] >> v[1])) fail(pos, "expected 'const b1 b2'");
    for (int i = 0; i < 2; ++i) out[i] = CoefficientField::constant(v[i]);
    return out;
  }
  const auto parts = split(value, ';');
  if (parts.size() != 2) fail(pos, "vector coefficient needs 2 ';'-separated expressions");
  for (int i = 0; i < 2; ++i) out[i] = scalar_field(parts[i], pos);
  return out;
}

}  // namespace

ExactSolution exact_from_expression(const std::string& source) {
  const Expression u = Expression::parse(source);
  const Expression ux = u.derivative(0), uy = u.derivative(1);
  const Expression uxx = ux.derivative(0), uxy = ux.derivative(1), uyy = uy.derivative(1);
  ExactSolution out;
  out.value = [u](const Vec2& x) { return u.eval(x.x(), x.y()); };
  out.grad = [ux, uy](const Vec2& x) { return Vec2(ux.eval(x.x(), x.y()), uy.eval(x.x(), x.y())); };
  out.hess = [uxx, uxy, uyy](const Vec2& x) {
    Mat2 H;
    const double mixed = uxy.eval(x.x(), x.y());
    H << uxx.eval(x.x(), x.y()), mixed, mixed, uyy.eval(x.x(), x.y());
    return H;
  };
  return out;
}

ProblemFile parse_problem(const std::string& text) {
  ProblemFile pf;
  pf.controls.controls.clear();

  std::string section;
  Control* current = nullptr;
  // Deferred from-exact loads: (control index, slack expression or empty).
  std::vector<std::pair<int, std::string>> from_exact;
  std::vector<std::pair<int, ParsePos>> from_exact_pos;

  ParsePos pos;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    pos.byte = line_start;
    std::string raw = text.substr(line_start, line_end - line_start);
    line_start = line_end + 1;

    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) {
      ++pos.line;
      continue;
    }

    if (line.front() == '[') {
      if (line.back() != ']') fail(pos, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "domain" && section != "discretization" && section != "manufactured" &&
          section != "controls" && section != "cordes")
        fail(pos, "unknown section [" + section + "]");
      ++pos.line;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(pos, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (section == "domain") {
      if (key == "tag") pf.domain_tag = value;
      else if (key == "n") pf.n = std::stoi(value);
      else if (key == "mesh") pf.mesh_path = value;
      else fail(pos, "unknown key '" + key + "' in [domain]");
    } else if (section == "discretization") {
      if (key == "r") pf.degree = std::stoi(value);
      else if (key == "refinements") pf.refinements = std::stoi(value);
      else if (key == "p") pf.p = std::stod(value);
      else if (key == "q_coeff") pf.q_coeff = std::stoi(value);
      else fail(pos, "unknown key '" + key + "' in [discretization]");
    } else if (section == "manufactured") {
      if (key == "u") pf.manufactured_u = value;
      else fail(pos, "unknown key '" + key + "' in [manufactured]");
    } else if (section == "controls") {
      if (key == "control") {
        pf.controls.controls.emplace_back();
        current = &pf.controls.controls.back();
        current->label = value;
        continue;  // do not advance pos.line twice
      }
      if (!current) fail(pos, "coefficient before any 'control = <label>' line");
      const int ctl_index = static_cast<int>(pf.controls.controls.size()) - 1;
      if (key == "A") current->A.entry = matrix_field(value, pos);
      else if (key == "b") current->b.entry = vector_field(value, pos);
      else if (key == "c") current->c = scalar_field(value, pos);
      else if (key == "f") {
        if (value == "from-exact") {
          from_exact.emplace_back(ctl_index, "");
          from_exact_pos.emplace_back(ctl_index, pos);
        } else {
          current->f = scalar_field(value, pos);
        }
      } else if (key == "slack") {
        bool found = false;
        for (auto& [idx, slack] : from_exact)
          if (idx == ctl_index) {
            slack = value;
            found = true;
          }
        if (!found) fail(pos, "'slack' is only meaningful after 'f = from-exact'");
      } else {
        fail(pos, "unknown key '" + key + "' in [controls]");
      }
    } else if (section == "cordes") {
      if (key == "condition") pf.cordes_condition = cordes_condition_from_string(value);
      else if (key == "lambda") pf.lambda = std::stod(value);
      else if (key == "lambda_range") {
        std::stringstream ss(value);
        double lo = 0, hi = 0;
        if (!(ss >> lo >> hi)) fail(pos, "expected 'lambda_range = <lo> <hi>'");
        pf.lambda_range = {lo, hi};
      } else fail(pos, "unknown key '" + key + "' in [cordes]");
    } else {
      fail(pos, "key outside of any section");
    }
    ++pos.line;
  }

  // Resolve manufactured loads: f = A : D^2 u + b . grad u + c u + slack.
  if (!from_exact.empty()) {
    if (!pf.manufactured_u)
      fail(from_exact_pos.front().second, "'f = from-exact' needs a [manufactured] u");
    const ExactSolution exact = exact_from_expression(*pf.manufactured_u);
    for (std::size_t i = 0; i < from_exact.size(); ++i) {
      const int idx = from_exact[i].first;
      Control& ctl = pf.controls.controls[idx];
      std::optional<Expression> slack;
      if (!from_exact[i].second.empty()) slack = Expression::parse(from_exact[i].second);
      const MatrixCoefficient A = ctl.A;
      const VectorCoefficient b = ctl.b;
      const CoefficientField c = ctl.c;
      ctl.f = CoefficientField::analytic(
          [A, b, c, exact, slack](const Vec2& x) {
            const Mat2 H = exact.hess(x);
            double v = A.eval(x).cwiseProduct(H).sum() + b.eval(x).dot(exact.grad(x)) +
                       c.eval(x) * exact.value(x);
            if (slack) v += slack->eval(x.x(), x.y());
            return v;
          });
    }
  }

  if (pf.controls.controls.empty())
    throw std::runtime_error("problem file: [controls] must declare at least one control");
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open problem file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

}  // namespace ndfem
