#include "strainsurf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "strainsurf/errors.hpp"

namespace strainsurf::expr {

namespace {

using Node = Expr::Node;

// Recursive-descent parser building the post-order node array directly.
//
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | variable | func '(' sum ')' | '(' sum ')'
class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(ErrorCode::SyntaxError, "empty expression", pos_);
    sum();
    skip_space();
    if (pos_ != text_.size()) {
      throw ParseError(ErrorCode::SyntaxError,
                       std::string("unexpected '") + text_[pos_] + "'", pos_);
    }
    return Expr(std::move(nodes_));
  }

 private:
  int emit(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  int binary(Op op, int lhs, int rhs) {
    Node n;
    n.op = op;
    n.lhs = lhs;
    n.rhs = rhs;
    return emit(n);
  }
  int unary_node(Op op, int arg) {
    Node n;
    n.op = op;
    n.lhs = arg;
    return emit(n);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) {
      throw ParseError(ErrorCode::SyntaxError, std::string("expected '") + c + "'", pos_);
    }
  }

  int sum() {
    int lhs = product();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::Add, lhs, product());
      } else if (accept('-')) {
        lhs = binary(Op::Sub, lhs, product());
      } else {
        return lhs;
      }
    }
  }

  int product() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = binary(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return unary_node(Op::Neg, unary());
    return power();
  }

  int power() {
    const int base = primary();
    if (accept('^')) return binary(Op::Pow, base, unary());
    return base;
  }

  int primary() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError(ErrorCode::SyntaxError, "unexpected end", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(ErrorCode::SyntaxError, std::string("unexpected '") + c + "'", pos_);
  }

  int number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      throw ParseError(ErrorCode::SyntaxError, "malformed number", start);
    }
    Node n;
    n.op = Op::Number;
    n.number = value;
    return emit(n);
  }

  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "x" || name == "y" || name == "z") {
      Node n;
      n.op = Op::Var;
      n.var = name[0] - 'x';
      return emit(n);
    }
    Op fn;
    if (name == "sin") {
      fn = Op::Sin;
    } else if (name == "cos") {
      fn = Op::Cos;
    } else if (name == "exp") {
      fn = Op::Exp;
    } else if (name == "sqrt") {
      fn = Op::Sqrt;
    } else {
      throw ParseError(ErrorCode::UnknownIdentifier, "unknown identifier '" + std::string(name) + "'",
                       start);
    }
    expect('(');
    const int arg = sum();
    expect(')');
    return unary_node(fn, arg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
};

void print_node(const Expr& e, int i, std::ostream& os) {
  const Node& n = e.nodes()[i];
  switch (n.op) {
    case Op::Number: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n.number;
      os << tmp.str();
      return;
    }
    case Op::Var: os << "xyz"[n.var]; return;
    case Op::Neg:
      os << "(-";
      print_node(e, n.lhs, os);
      os << ")";
      return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Sqrt: {
      const char* name = n.op == Op::Sin ? "sin" : n.op == Op::Cos ? "cos" : n.op == Op::Exp ? "exp" : "sqrt";
      os << name << "(";
      print_node(e, n.lhs, os);
      os << ")";
      return;
    }
    default: break;
  }
  const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*'
                 : n.op == Op::Div ? '/' : '^';
  os << "(";
  print_node(e, n.lhs, os);
  os << " " << sym << " ";
  print_node(e, n.rhs, os);
  os << ")";
}

[[noreturn]] void domain_error(const char* what) { throw Error(ErrorCode::EvalDomainError, what); }

bool is_integer(double v) { return std::isfinite(v) && v == std::round(v) && std::abs(v) < 1e15; }

double int_power(double base, double exponent) {
  // Repeated squaring keeps small integer powers exact (x^2 == x*x).
  long long n = static_cast<long long>(exponent);
  const bool negative = n < 0;
  if (negative) n = -n;
  double result = 1.0, b = base;
  while (n) {
    if (n & 1) result *= b;
    b *= b;
    n >>= 1;
  }
  return negative ? 1.0 / result : result;
}

Dual eval_dual(const Expr& e, int i, const Vec3d& p) {
  const Node& n = e.nodes()[i];
  switch (n.op) {
    case Op::Number: return {n.number, Vec3d::Zero()};
    case Op::Var: return {p[n.var], Vec3d::Unit(n.var)};
    case Op::Neg: {
      Dual a = eval_dual(e, n.lhs, p);
      return {-a.value, -a.grad};
    }
    case Op::Add: {
      Dual a = eval_dual(e, n.lhs, p), b = eval_dual(e, n.rhs, p);
      return {a.value + b.value, a.grad + b.grad};
    }
    case Op::Sub: {
      Dual a = eval_dual(e, n.lhs, p), b = eval_dual(e, n.rhs, p);
      return {a.value - b.value, a.grad - b.grad};
    }
    case Op::Mul: {
      Dual a = eval_dual(e, n.lhs, p), b = eval_dual(e, n.rhs, p);
      return {a.value * b.value, a.value * b.grad + b.value * a.grad};
    }
    case Op::Div: {
      Dual a = eval_dual(e, n.lhs, p), b = eval_dual(e, n.rhs, p);
      if (b.value == 0.0) domain_error("division by zero");
      const double q = a.value / b.value;
      return {q, (a.grad - q * b.grad) / b.value};
    }
    case Op::Pow: {
      Dual a = eval_dual(e, n.lhs, p), b = eval_dual(e, n.rhs, p);
      const bool const_exp = b.grad.isZero(0.0);
      if (const_exp && is_integer(b.value)) {
        if (a.value == 0.0 && b.value < 0.0) domain_error("zero to a negative power");
        const double v = int_power(a.value, b.value);
        const double dv = b.value == 0.0 ? 0.0 : b.value * int_power(a.value, b.value - 1.0);
        return {v, dv * a.grad};
      }
      if (a.value < 0.0) domain_error("negative base with non-integer exponent");
      if (a.value == 0.0) {
        if (const_exp && b.value > 1.0) return {0.0, Vec3d::Zero()};
        domain_error("derivative of power undefined at zero base");
      }
      const double v = std::pow(a.value, b.value);
      const double la = std::log(a.value);
      return {v, v * (b.value / a.value * a.grad + la * b.grad)};
    }
    case Op::Sin: {
      Dual a = eval_dual(e, n.lhs, p);
      return {std::sin(a.value), std::cos(a.value) * a.grad};
    }
    case Op::Cos: {
      Dual a = eval_dual(e, n.lhs, p);
      return {std::cos(a.value), -std::sin(a.value) * a.grad};
    }
    case Op::Exp: {
      Dual a = eval_dual(e, n.lhs, p);
      const double v = std::exp(a.value);
      return {v, v * a.grad};
    }
    case Op::Sqrt: {
      Dual a = eval_dual(e, n.lhs, p);
      if (a.value < 0.0) domain_error("sqrt of a negative number");
      const double v = std::sqrt(a.value);
      if (v == 0.0) {
        if (a.grad.isZero(0.0)) return {0.0, Vec3d::Zero()};
        domain_error("derivative of sqrt at zero");
      }
      return {v, (0.5 / v) * a.grad};
    }
  }
  domain_error("corrupt expression");
}

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

std::string print(const Expr& e) {
  if (e.empty()) return {};
  std::ostringstream os;
  print_node(e, e.root(), os);
  return os.str();
}

Dual eval_with_gradient(const Expr& e, const Vec3d& p) {
  if (e.empty()) throw Error(ErrorCode::InvalidArgument, "empty expression");
  Dual d = eval_dual(e, e.root(), p);
  if (!std::isfinite(d.value)) domain_error("non-finite value");
  return d;
}

double eval(const Expr& e, const Vec3d& p) { return eval_with_gradient(e, p).value; }

Vec3d ExprField::value(const Vec3d& p) const {
  return {eval(comps_[0], p), eval(comps_[1], p), eval(comps_[2], p)};
}

Mat3d ExprField::jacobian(const Vec3d& p) const { return value_and_jacobian(p).second; }

std::pair<Vec3d, Mat3d> ExprField::value_and_jacobian(const Vec3d& p) const {
  Vec3d v;
  Mat3d J;
  for (int i = 0; i < 3; ++i) {
    const Dual d = eval_with_gradient(comps_[i], p);
    v[i] = d.value;
    J.row(i) = d.grad.transpose();
  }
  return {v, J};
}

VectorField parse_field(std::string_view text, const BoxDomain& domain, bool divergence_free) {
  std::array<Expr, 3> comps;
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t semi = text.find(';', start);
    if ((i < 2) != (semi != std::string_view::npos)) {
      throw ParseError(ErrorCode::SyntaxError, "field needs exactly three ';'-separated components",
                       semi == std::string_view::npos ? text.size() : semi);
    }
    const std::size_t end = i < 2 ? semi : text.size();
    try {
      comps[i] = parse(text.substr(start, end - start));
    } catch (const ParseError& e) {
      throw ParseError(e.code(), "component " + std::to_string(i) + " (" + e.what() + ")",
                       start + e.offset());
    }
    start = end + 1;
  }
  return {std::make_shared<ExprField>(comps[0], comps[1], comps[2]), domain, divergence_free,
          "expr:" + std::string(text)};
}

}  // namespace strainsurf::expr
