#include "ndfem/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <vector>

namespace ndfem {

enum class Op { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Sqrt, Abs, Step, Min, Max };

struct Expression::Node {
  Op op;
  double num = 0.0;  // Num value or Var axis (0/1)
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Num;
  n->num = v;
  return n;
}

NodePtr variable(int axis) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::Var;
  n->num = axis;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Num && n->num == v; }

double eval_node(const Expression::Node& n, double x, double y) {
  switch (n.op) {
    case Op::Num: return n.num;
    case Op::Var: return n.num == 0.0 ? x : y;
    case Op::Add: return eval_node(*n.a, x, y) + eval_node(*n.b, x, y);
    case Op::Sub: return eval_node(*n.a, x, y) - eval_node(*n.b, x, y);
    case Op::Mul: return eval_node(*n.a, x, y) * eval_node(*n.b, x, y);
    case Op::Div: return eval_node(*n.a, x, y) / eval_node(*n.b, x, y);
    case Op::Pow: return std::pow(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
    case Op::Neg: return -eval_node(*n.a, x, y);
    case Op::Sin: return std::sin(eval_node(*n.a, x, y));
    case Op::Cos: return std::cos(eval_node(*n.a, x, y));
    case Op::Exp: return std::exp(eval_node(*n.a, x, y));
    case Op::Sqrt: return std::sqrt(eval_node(*n.a, x, y));
    case Op::Abs: return std::abs(eval_node(*n.a, x, y));
    case Op::Step: return eval_node(*n.a, x, y) < 0.0 ? 0.0 : 1.0;
    case Op::Min: return std::min(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
    case Op::Max: return std::max(eval_node(*n.a, x, y), eval_node(*n.b, x, y));
  }
  return 0.0;
}

// Light constant folding keeps derivative trees small.
NodePtr simplify(Op op, NodePtr a, NodePtr b) {
  const bool ca = a && a->op == Op::Num;
  const bool cb = b && b->op == Op::Num;
  if ((ca && !b) || (ca && cb)) {
    Expression::Node tmp;
    tmp.op = op;
    tmp.a = a;
    tmp.b = b;
    return number(eval_node(tmp, 0, 0));
  }
  switch (op) {
    case Op::Add:
      if (ca && a->num == 0.0) return b;
      if (cb && b->num == 0.0) return a;
      break;
    case Op::Sub:
      if (cb && b->num == 0.0) return a;
      break;
    case Op::Mul:
      if (is_const(a, 0.0) || (cb && b->num == 0.0)) return number(0.0);
      if (ca && a->num == 1.0) return b;
      if (cb && b->num == 1.0) return a;
      break;
    case Op::Div:
      if (is_const(a, 0.0)) return number(0.0);
      if (cb && b->num == 1.0) return a;
      break;
    case Op::Pow:
      if (cb && b->num == 1.0) return a;
      if (cb && b->num == 0.0) return number(1.0);
      break;
    default: break;
  }
  return make(op, std::move(a), std::move(b));
}

NodePtr diff(const NodePtr& n, int axis) {
  switch (n->op) {
    case Op::Num: return number(0.0);
    case Op::Var: return number(n->num == axis ? 1.0 : 0.0);
    case Op::Add: return simplify(Op::Add, diff(n->a, axis), diff(n->b, axis));
    case Op::Sub: return simplify(Op::Sub, diff(n->a, axis), diff(n->b, axis));
    case Op::Mul:
      return simplify(Op::Add, simplify(Op::Mul, diff(n->a, axis), n->b),
                      simplify(Op::Mul, n->a, diff(n->b, axis)));
    case Op::Div:
      return simplify(Op::Div,
                      simplify(Op::Sub, simplify(Op::Mul, diff(n->a, axis), n->b),
                               simplify(Op::Mul, n->a, diff(n->b, axis))),
                      simplify(Op::Mul, n->b, n->b));
    case Op::Pow: {
      if (n->b->op != Op::Num)
        throw ExprError(0, "cannot differentiate a variable exponent in '^'");
      const double c = n->b->num;
      return simplify(Op::Mul, number(c),
                      simplify(Op::Mul, simplify(Op::Pow, n->a, number(c - 1.0)), diff(n->a, axis)));
    }
    case Op::Neg: return simplify(Op::Sub, number(0.0), diff(n->a, axis));
    case Op::Sin: return simplify(Op::Mul, make(Op::Cos, n->a), diff(n->a, axis));
    case Op::Cos:
      return simplify(Op::Sub, number(0.0), simplify(Op::Mul, make(Op::Sin, n->a), diff(n->a, axis)));
    case Op::Exp: return simplify(Op::Mul, make(Op::Exp, n->a), diff(n->a, axis));
    case Op::Sqrt:
      return simplify(Op::Div, diff(n->a, axis), simplify(Op::Mul, number(2.0), make(Op::Sqrt, n->a)));
    case Op::Abs:
      // d|u| = (2 step(u) - 1) u'  almost everywhere
      return simplify(Op::Mul,
                      simplify(Op::Sub, simplify(Op::Mul, number(2.0), make(Op::Step, n->a)), number(1.0)),
                      diff(n->a, axis));
    case Op::Step: return number(0.0);  // a.e.
    case Op::Min: {
      // min(u,v) = u where v-u > 0
      NodePtr sw = make(Op::Step, simplify(Op::Sub, n->b, n->a));
      return simplify(Op::Add, simplify(Op::Mul, sw, diff(n->a, axis)),
                      simplify(Op::Mul, simplify(Op::Sub, number(1.0), sw), diff(n->b, axis)));
    }
    case Op::Max: {
      NodePtr sw = make(Op::Step, simplify(Op::Sub, n->a, n->b));
      return simplify(Op::Add, simplify(Op::Mul, sw, diff(n->a, axis)),
                      simplify(Op::Mul, simplify(Op::Sub, number(1.0), sw), diff(n->b, axis)));
    }
  }
  return number(0.0);
}

void print_node(const Expression::Node& n, std::string& out);

void print_binary(const Expression::Node& n, std::string& out, const char* sym) {
  out += "(";
  print_node(*n.a, out);
  out += sym;
  print_node(*n.b, out);
  out += ")";
}

void print_node(const Expression::Node& n, std::string& out) {
  char buf[40];
  switch (n.op) {
    case Op::Num:
      std::snprintf(buf, sizeof buf, "%.17g", n.num);
      out += buf;
      break;
    case Op::Var: out += (n.num == 0.0 ? "x" : "y"); break;
    case Op::Add: print_binary(n, out, "+"); break;
    case Op::Sub: print_binary(n, out, "-"); break;
    case Op::Mul: print_binary(n, out, "*"); break;
    case Op::Div: print_binary(n, out, "/"); break;
    case Op::Pow: print_binary(n, out, "^"); break;
    case Op::Neg:
      out += "(-";
      print_node(*n.a, out);
      out += ")";
      break;
    case Op::Sin: out += "sin("; print_node(*n.a, out); out += ")"; break;
    case Op::Cos: out += "cos("; print_node(*n.a, out); out += ")"; break;
    case Op::Exp: out += "exp("; print_node(*n.a, out); out += ")"; break;
    case Op::Sqrt: out += "sqrt("; print_node(*n.a, out); out += ")"; break;
    case Op::Abs: out += "abs("; print_node(*n.a, out); out += ")"; break;
    case Op::Step: out += "step("; print_node(*n.a, out); out += ")"; break;
    case Op::Min:
      out += "min(";
      print_node(*n.a, out);
      out += ",";
      print_node(*n.b, out);
      out += ")";
      break;
    case Op::Max:
      out += "max(";
      print_node(*n.a, out);
      out += ",";
      print_node(*n.b, out);
      out += ")";
      break;
  }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size()) throw ExprError(pos_, "unexpected trailing input");
    return e;
  }

 private:
  const std::string& src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace((unsigned char)src_[pos_])) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (consume('+')) lhs = simplify(Op::Add, lhs, parse_term());
      else if (consume('-')) lhs = simplify(Op::Sub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (consume('*')) lhs = simplify(Op::Mul, lhs, parse_unary());
      else if (consume('/')) lhs = simplify(Op::Div, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) return simplify(Op::Sub, number(0.0), parse_unary());
    if (consume('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (consume('^')) return simplify(Op::Pow, base, parse_unary());  // right-assoc
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) throw ExprError(pos_, "unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number();
    if (std::isalpha((unsigned char)c) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!consume(')')) throw ExprError(pos_, "expected ')'");
      return e;
    }
    throw ExprError(pos_, std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ExprError(pos_, "malformed number");
    pos_ += end - begin;
    return number(v);
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);
    if (name == "x") return variable(0);
    if (name == "y") return variable(1);
    if (name == "pi") return number(M_PI);
    if (name == "e") return number(M_E);

    static const struct { const char* name; Op op; int arity; } fns[] = {
        {"sin", Op::Sin, 1}, {"cos", Op::Cos, 1},   {"exp", Op::Exp, 1},
        {"sqrt", Op::Sqrt, 1}, {"abs", Op::Abs, 1}, {"step", Op::Step, 1},
        {"min", Op::Min, 2}, {"max", Op::Max, 2},
    };
    for (const auto& fn : fns) {
      if (name != fn.name) continue;
      if (!consume('(')) throw ExprError(pos_, "expected '(' after '" + name + "'");
      NodePtr a = parse_expr();
      NodePtr b;
      if (fn.arity == 2) {
        if (!consume(',')) throw ExprError(pos_, "'" + name + "' takes two arguments");
        b = parse_expr();
      }
      if (!consume(')')) throw ExprError(pos_, "expected ')'");
      return make(fn.op, std::move(a), std::move(b));
    }
    throw ExprError(start, "unknown identifier '" + name + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& source) {
  return Expression(Parser(source).run());
}

double Expression::eval(double x, double y) const { return eval_node(*root_, x, y); }

Expression Expression::derivative(int axis) const {
  if (axis < 0 || axis > 1) throw std::invalid_argument("Expression::derivative: axis must be 0 or 1");
  return Expression(diff(root_, axis));
}

std::string Expression::to_string() const {
  std::string out;
  print_node(*root_, out);
  return out;
}

bool Expression::is_constant(double* value) const {
  if (root_->op != Op::Num) return false;
  if (value) *value = root_->num;
  return true;
}

}  // namespace ndfem
