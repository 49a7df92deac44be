#include "fepysr/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>

#include "fepysr/rng.hpp"

namespace fepysr {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double finite_or_nan(double v) { return std::isfinite(v) ? v : kNan; }
}  // namespace

const char* name(UnaryOp op) {
  switch (op) {
    case UnaryOp::Square: return "square";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Abs: return "abs";
    case UnaryOp::Neg: return "neg";
    case UnaryOp::Tanh: return "tanh";
  }
  return "?";
}

const char* symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

Expr Expr::variable(int index, std::string name) {
  if (index < 0) throw std::invalid_argument("variable index must be >= 0");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Variable;
  n->var_index = index;
  n->var_name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::constant(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("constants must be finite");
  if (value == 0.0) value = 0.0;  // normalize -0.0
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Constant;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr child) {
  if (!child.valid()) throw std::invalid_argument("unary child missing");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Unary;
  n->uop = op;
  n->lhs = child.node_;
  n->size = 1 + child.complexity();
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  if (!lhs.valid() || !rhs.valid()) throw std::invalid_argument("binary child missing");
  auto n = std::make_shared<ExprNode>();
  n->kind = ExprNode::Kind::Binary;
  n->bop = op;
  n->lhs = lhs.node_;
  n->rhs = rhs.node_;
  n->size = 1 + lhs.complexity() + rhs.complexity();
  return Expr(std::move(n));
}

int Expr::max_var_index() const {
  switch (kind()) {
    case ExprNode::Kind::Variable: return var_index();
    case ExprNode::Kind::Constant: return -1;
    case ExprNode::Kind::Unary: return child().max_var_index();
    case ExprNode::Kind::Binary:
      return std::max(left().max_var_index(), right().max_var_index());
  }
  return -1;
}

bool Expr::same(const Expr& other) const {
  if (node_ == other.node_) return true;
  if (!node_ || !other.node_) return false;
  const ExprNode& a = *node_;
  const ExprNode& b = *other.node_;
  if (a.kind != b.kind || a.size != b.size) return false;
  switch (a.kind) {
    case ExprNode::Kind::Variable:
      return a.var_index == b.var_index && a.var_name == b.var_name;
    case ExprNode::Kind::Constant:
      return a.value == b.value;
    case ExprNode::Kind::Unary:
      return a.uop == b.uop && Expr(a.lhs).same(Expr(b.lhs));
    case ExprNode::Kind::Binary:
      return a.bop == b.bop && Expr(a.lhs).same(Expr(b.lhs)) && Expr(a.rhs).same(Expr(b.rhs));
  }
  return false;
}

double eval_pow(double base, double exponent) {
  if (base < 0.0 && std::round(exponent) != exponent) {
    // Real odd roots: x^(p/q) with odd q (e.g. cube roots on x < 0).
    for (int q = 3; q <= 9; q += 2) {
      double pq = exponent * q;
      double p = std::round(pq);
      if (std::fabs(pq - p) <= 1e-9 * q) {
        double mag = std::pow(-base, exponent);
        bool odd_p = std::fmod(std::fabs(p), 2.0) == 1.0;
        return odd_p ? -mag : mag;
      }
    }
    return kNan;
  }
  return std::pow(base, exponent);
}

double Expr::eval_row(std::span<const double> row) const {
  const ExprNode& n = *node_;
  switch (n.kind) {
    case ExprNode::Kind::Variable:
      return row[static_cast<std::size_t>(n.var_index)];
    case ExprNode::Kind::Constant:
      return n.value;
    case ExprNode::Kind::Unary: {
      double u = Expr(n.lhs).eval_row(row);
      if (std::isnan(u)) return kNan;
      double v;
      switch (n.uop) {
        case UnaryOp::Square: v = u * u; break;
        case UnaryOp::Sin: v = std::sin(u); break;
        case UnaryOp::Cos: v = std::cos(u); break;
        case UnaryOp::Exp: v = std::exp(u); break;
        case UnaryOp::Log: v = u > 0.0 ? std::log(u) : kNan; break;
        case UnaryOp::Sqrt: v = u >= 0.0 ? std::sqrt(u) : kNan; break;
        case UnaryOp::Abs: v = std::fabs(u); break;
        case UnaryOp::Neg: v = -u; break;
        case UnaryOp::Tanh: v = std::tanh(u); break;
        default: v = kNan;
      }
      return finite_or_nan(v);
    }
    case ExprNode::Kind::Binary: {
      double l = Expr(n.lhs).eval_row(row);
      if (std::isnan(l)) return kNan;
      double r = Expr(n.rhs).eval_row(row);
      if (std::isnan(r)) return kNan;
      double v;
      switch (n.bop) {
        case BinaryOp::Add: v = l + r; break;
        case BinaryOp::Sub: v = l - r; break;
        case BinaryOp::Mul: v = l * r; break;
        case BinaryOp::Div: v = r != 0.0 ? l / r : kNan; break;
        case BinaryOp::Pow: v = eval_pow(l, r); break;
        default: v = kNan;
      }
      return finite_or_nan(v);
    }
  }
  return kNan;
}

std::vector<double> evaluate(const Expr& e, const Matrix& X) {
  if (!e.valid()) throw std::invalid_argument("empty expression");
  if (e.max_var_index() >= X.cols) {
    throw std::invalid_argument("expression references variable " +
                                std::to_string(e.max_var_index()) + " but matrix has " +
                                std::to_string(X.cols) + " columns");
  }
  std::vector<double> out(static_cast<std::size_t>(X.rows));
  for (int i = 0; i < X.rows; ++i) out[static_cast<std::size_t>(i)] = e.eval_row(X.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Shortest decimal that round-trips to the exact double.
std::string format_double(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Precedences: add/sub 1, mul/div 2, pow 3, atoms 4. Unary minus renders at 1.
int precedence(const Expr& e) {
  switch (e.kind()) {
    case ExprNode::Kind::Variable: return 4;
    case ExprNode::Kind::Constant: return e.value() < 0.0 ? 1 : 4;
    case ExprNode::Kind::Unary: return e.unary_op() == UnaryOp::Neg ? 1 : 4;
    case ExprNode::Kind::Binary:
      switch (e.binary_op()) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 3;
      }
  }
  return 4;
}

void render_to(const Expr& e, std::string& out) {
  switch (e.kind()) {
    case ExprNode::Kind::Variable:
      out += e.var_name();
      return;
    case ExprNode::Kind::Constant:
      out += format_double(e.value());
      return;
    case ExprNode::Kind::Unary: {
      Expr c = e.child();
      if (e.unary_op() == UnaryOp::Neg) {
        out += '-';
        bool bare = c.is_variable() ||
                    (c.kind() == ExprNode::Kind::Unary && c.unary_op() != UnaryOp::Neg);
        if (bare) {
          render_to(c, out);
        } else {
          out += '(';
          render_to(c, out);
          out += ')';
        }
        return;
      }
      out += name(e.unary_op());
      out += '(';
      render_to(c, out);
      out += ')';
      return;
    }
    case ExprNode::Kind::Binary: {
      int p = precedence(e);
      bool right_assoc = e.binary_op() == BinaryOp::Pow;
      Expr l = e.left(), r = e.right();
      bool pl = right_assoc ? precedence(l) <= p : precedence(l) < p;
      bool pr = right_assoc ? precedence(r) < p : precedence(r) <= p;
      if (pl) out += '(';
      render_to(l, out);
      if (pl) out += ')';
      if (e.binary_op() != BinaryOp::Pow) out += ' ';
      out += symbol(e.binary_op());
      if (e.binary_op() != BinaryOp::Pow) out += ' ';
      if (pr) out += '(';
      render_to(r, out);
      if (pr) out += ')';
      return;
    }
  }
}

}  // namespace

std::string Expr::render() const {
  if (!valid()) return "<empty>";
  std::string out;
  render_to(*this, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing (recursive descent)

namespace {

struct Token {
  enum class Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Type type;
  double number = 0.0;
  std::string ident;
  std::size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
    tok_.pos = i_;
    if (i_ >= text_.size()) {
      tok_.type = Token::Type::End;
      return;
    }
    char c = text_[i_];
    switch (c) {
      case '+': tok_.type = Token::Type::Plus; ++i_; return;
      case '-': tok_.type = Token::Type::Minus; ++i_; return;
      case '*': tok_.type = Token::Type::Star; ++i_; return;
      case '/': tok_.type = Token::Type::Slash; ++i_; return;
      case '^': tok_.type = Token::Type::Caret; ++i_; return;
      case '(': tok_.type = Token::Type::LParen; ++i_; return;
      case ')': tok_.type = Token::Type::RParen; ++i_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* start = text_.c_str() + i_;
      char* end = nullptr;
      double v = std::strtod(start, &end);
      if (end == start) throw ParseError("bad numeric literal", i_);
      tok_.type = Token::Type::Number;
      tok_.number = v;
      i_ += static_cast<std::size_t>(end - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i_;
      while (j < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_'))
        ++j;
      tok_.type = Token::Type::Ident;
      tok_.ident = text_.substr(i_, j - i_);
      i_ = j;
      return;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i_);
  }

  const std::string& text_;
  std::size_t i_ = 0;
  Token tok_;
};

bool lookup_unary(const std::string& s, UnaryOp& op) {
  static const std::pair<const char*, UnaryOp> table[] = {
      {"square", UnaryOp::Square}, {"sin", UnaryOp::Sin},   {"cos", UnaryOp::Cos},
      {"exp", UnaryOp::Exp},       {"log", UnaryOp::Log},   {"ln", UnaryOp::Log},
      {"sqrt", UnaryOp::Sqrt},     {"abs", UnaryOp::Abs},   {"neg", UnaryOp::Neg},
      {"tanh", UnaryOp::Tanh}};
  for (const auto& [n, o] : table) {
    if (s == n) {
      op = o;
      return true;
    }
  }
  return false;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& variables)
      : lex_(text), variables_(variables) {}

  Expr run() {
    Expr e = expr();
    if (lex_.peek().type != Token::Type::End)
      throw ParseError("trailing input", lex_.peek().pos);
    return e;
  }

 private:
  // expr   := term (('+'|'-') term)*
  // term   := factor (('*'|'/') factor)*
  // factor := '-' factor | atom ('^' factor)?
  // atom   := number | ident | ident '(' expr ')' | '(' expr ')'
  Expr expr() {
    Expr e = term();
    for (;;) {
      auto t = lex_.peek().type;
      if (t == Token::Type::Plus) {
        lex_.take();
        e = Expr::binary(BinaryOp::Add, e, term());
      } else if (t == Token::Type::Minus) {
        lex_.take();
        e = Expr::binary(BinaryOp::Sub, e, term());
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      auto t = lex_.peek().type;
      if (t == Token::Type::Star) {
        lex_.take();
        e = Expr::binary(BinaryOp::Mul, e, factor());
      } else if (t == Token::Type::Slash) {
        lex_.take();
        e = Expr::binary(BinaryOp::Div, e, factor());
      } else {
        return e;
      }
    }
  }

  Expr factor() {
    if (lex_.peek().type == Token::Type::Minus) {
      lex_.take();
      // Fold a minus applied to a bare literal so that "-3" parses as the
      // constant -3 and renders back identically.
      if (lex_.peek().type == Token::Type::Number) {
        Token num = lex_.take();
        Expr base = Expr::constant(-num.number);
        return pow_tail(base);
      }
      return Expr::unary(UnaryOp::Neg, factor());
    }
    return pow_tail(atom());
  }

  Expr pow_tail(Expr base) {
    if (lex_.peek().type == Token::Type::Caret) {
      lex_.take();
      return Expr::binary(BinaryOp::Pow, base, factor());
    }
    return base;
  }

  Expr atom() {
    Token t = lex_.take();
    switch (t.type) {
      case Token::Type::Number:
        return Expr::constant(t.number);
      case Token::Type::LParen: {
        Expr e = expr();
        if (lex_.peek().type != Token::Type::RParen)
          throw ParseError("expected ')'", lex_.peek().pos);
        lex_.take();
        return e;
      }
      case Token::Type::Ident: {
        if (lex_.peek().type == Token::Type::LParen) {
          UnaryOp op;
          if (!lookup_unary(t.ident, op))
            throw ParseError("unknown function '" + t.ident + "'", t.pos);
          lex_.take();
          Expr arg = expr();
          if (lex_.peek().type != Token::Type::RParen)
            throw ParseError("expected ')'", lex_.peek().pos);
          lex_.take();
          return Expr::unary(op, arg);
        }
        for (std::size_t i = 0; i < variables_.size(); ++i) {
          if (variables_[i] == t.ident) return Expr::variable(static_cast<int>(i), t.ident);
        }
        throw ParseError("unknown identifier '" + t.ident + "'", t.pos);
      }
      default:
        throw ParseError("expected expression", t.pos);
    }
  }

  Lexer lex_;
  const std::vector<std::string>& variables_;
};

}  // namespace

Expr parse(const std::string& text, const std::vector<std::string>& variables) {
  return Parser(text, variables).run();
}

// ---------------------------------------------------------------------------
// Equivalence oracle

EvalDomain EvalDomain::boxed(std::vector<std::array<double, 2>> ranges, int probes,
                             std::uint64_t seed) {
  for (const auto& r : ranges) {
    if (!(r[0] < r[1])) throw std::invalid_argument("domain range needs lo < hi");
  }
  if (probes < 16) throw std::invalid_argument("need at least 16 probes");
  EvalDomain d;
  d.ranges = std::move(ranges);
  d.probes = probes;
  d.seed = seed;
  return d;
}

Matrix EvalDomain::sample() const {
  Rng rng(seed);
  Matrix X(probes, static_cast<int>(ranges.size()));
  for (int i = 0; i < X.rows; ++i)
    for (int j = 0; j < X.cols; ++j)
      X(i, j) = rng.uniform(ranges[static_cast<std::size_t>(j)][0],
                            ranges[static_cast<std::size_t>(j)][1]);
  return X;
}

Equivalence equivalent(const Expr& a, const Expr& b, const EvalDomain& dom, double rel_tol) {
  int d = static_cast<int>(dom.ranges.size());
  if (a.max_var_index() >= d || b.max_var_index() >= d)
    throw std::invalid_argument("domain does not cover all variables");
  Matrix X = dom.sample();
  std::vector<double> va = evaluate(a, X);
  std::vector<double> vb = evaluate(b, X);
  int fin_a = 0, fin_b = 0, joint = 0;
  bool close = true;
  for (int i = 0; i < X.rows; ++i) {
    double x = va[static_cast<std::size_t>(i)];
    double y = vb[static_cast<std::size_t>(i)];
    bool fa = std::isfinite(x), fb = std::isfinite(y);
    fin_a += fa;
    fin_b += fb;
    if (fa && fb) {
      ++joint;
      double tol = rel_tol * (1.0 + std::max(std::fabs(x), std::fabs(y)));
      if (std::fabs(x - y) > tol) close = false;
    }
  }
  if (fin_a == 0 || fin_b == 0) return Equivalence::Indeterminate;
  if (joint < static_cast<int>(0.9 * dom.probes)) return Equivalence::No;
  return close ? Equivalence::Yes : Equivalence::No;
}

}  // namespace fepysr
