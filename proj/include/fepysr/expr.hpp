#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fepysr/matrix.hpp"

namespace fepysr {

enum class UnaryOp { Square, Sin, Cos, Exp, Log, Sqrt, Abs, Neg, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

const char* name(UnaryOp op);
const char* symbol(BinaryOp op);

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum class Kind { Variable, Constant, Unary, Binary };
  Kind kind = Kind::Constant;
  int var_index = -1;
  std::string var_name;
  double value = 0.0;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  NodePtr lhs;  // unary child lives here
  NodePtr rhs;
  int size = 1;  // node count of the whole subtree
};

// Immutable expression tree. Copies share structure; safe to use across
// threads once built.
class Expr {
 public:
  Expr() = default;

  static Expr variable(int index, std::string name);
  static Expr constant(double value);  // throws std::invalid_argument on non-finite
  static Expr unary(UnaryOp op, Expr child);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);

  bool valid() const { return node_ != nullptr; }
  ExprNode::Kind kind() const { return node_->kind; }
  bool is_constant() const { return node_->kind == ExprNode::Kind::Constant; }
  bool is_variable() const { return node_->kind == ExprNode::Kind::Variable; }
  bool is_leaf() const { return is_constant() || is_variable(); }

  int var_index() const { return node_->var_index; }
  const std::string& var_name() const { return node_->var_name; }
  double value() const { return node_->value; }
  UnaryOp unary_op() const { return node_->uop; }
  BinaryOp binary_op() const { return node_->bop; }
  Expr left() const { return Expr(node_->lhs); }
  Expr right() const { return Expr(node_->rhs); }
  Expr child() const { return Expr(node_->lhs); }

  int complexity() const { return node_ ? node_->size : 0; }
  int max_var_index() const;

  bool same(const Expr& other) const;  // structural equality
  std::string render() const;

  double eval_row(std::span<const double> row) const;

 private:
  explicit Expr(NodePtr n) : node_(std::move(n)) {}
  NodePtr node_;

  friend class ExprBuilder;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

// Infix grammar: `^` is pow (right associative), unary operators use
// function-call syntax, `-` works as both binary and unary minus.
Expr parse(const std::string& text, const std::vector<std::string>& variables);

// Pointwise evaluation; domain violations (log of non-positives, sqrt of
// negatives, division by zero) and overflow produce NaN at that row.
std::vector<double> evaluate(const Expr& e, const Matrix& X);

inline int complexity(const Expr& e) { return e.complexity(); }

// pow with the real-root extension for negative bases and exponents that are
// rationals p/q with odd q <= 9 (cube roots and friends).
double eval_pow(double base, double exponent);

// Per-variable sampling box for the numeric equivalence oracle.
struct EvalDomain {
  std::vector<std::array<double, 2>> ranges;
  int probes = 64;
  std::uint64_t seed = 0xFEA7;

  static EvalDomain boxed(std::vector<std::array<double, 2>> ranges, int probes = 64,
                          std::uint64_t seed = 0xFEA7);
  Matrix sample() const;
};

enum class Equivalence { No, Yes, Indeterminate };

// Numeric semantic equivalence: |a-b| <= rel_tol*(1+max(|a|,|b|)) wherever
// both are finite, with both finite on >= 90% of probes. Indeterminate when
// either side is NaN on every probe.
Equivalence equivalent(const Expr& a, const Expr& b, const EvalDomain& dom, double rel_tol);

}  // namespace fepysr
