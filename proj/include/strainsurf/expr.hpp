#pragma once

#include <array>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strainsurf/field.hpp"

namespace strainsurf::expr {

enum class Op { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt };

/// Immutable expression tree over x, y, z.
///
/// Nodes live in a flat array in post-order: children always precede their
/// parent and the root is the last node.
class Expr {
 public:
  struct Node {
    Op op = Op::Number;
    double number = 0.0;  // Number
    int var = 0;          // Var: 0=x, 1=y, 2=z
    int lhs = -1;         // unary operand or left operand
    int rhs = -1;

    bool operator==(const Node&) const = default;
  };

  Expr() = default;
  explicit Expr(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return static_cast<int>(nodes_.size()) - 1; }
  bool empty() const { return nodes_.empty(); }

  /// Structural equality of the trees (node numbering is canonical).
  bool operator==(const Expr& other) const { return nodes_ == other.nodes_; }

 private:
  std::vector<Node> nodes_;
};

/// Value and exact gradient with respect to (x, y, z).
struct Dual {
  double value = 0.0;
  Vec3d grad = Vec3d::Zero();
};

/// Precedence, tightest first: function call, ^ (right-assoc), unary -,
/// * and /, + and -. Throws ParseError (SyntaxError, UnknownIdentifier).
Expr parse(std::string_view text);

/// Fully parenthesised form; parse(print(e)) == e.
std::string print(const Expr& e);

double eval(const Expr& e, const Vec3d& p);

/// Forward-mode evaluation. Throws EvalDomainError on division by zero,
/// sqrt of a negative number or a non-real power.
Dual eval_with_gradient(const Expr& e, const Vec3d& p);

/// Three component expressions backing a VectorField.
class ExprField final : public FieldModel {
 public:
  ExprField(Expr vx, Expr vy, Expr vz) : comps_{std::move(vx), std::move(vy), std::move(vz)} {}

  Vec3d value(const Vec3d& p) const override;
  Mat3d jacobian(const Vec3d& p) const override;
  std::pair<Vec3d, Mat3d> value_and_jacobian(const Vec3d& p) const override;

  const std::array<Expr, 3>& components() const { return comps_; }

 private:
  std::array<Expr, 3> comps_;
};

/// Parses "VX;VY;VZ".
VectorField parse_field(std::string_view text, const BoxDomain& domain, bool divergence_free);

}  // namespace strainsurf::expr
