#include "fepysr/simplify.hpp"

#include <algorithm>
#include <cmath>

namespace fepysr {

namespace {

bool is_const(const Expr& e, double v) { return e.is_constant() && e.value() == v; }

int structural_compare(const Expr& a, const Expr& b) {
  auto ka = static_cast<int>(a.kind());
  auto kb = static_cast<int>(b.kind());
  if (ka != kb) return ka < kb ? -1 : 1;
  switch (a.kind()) {
    case ExprNode::Kind::Variable:
      if (a.var_index() != b.var_index()) return a.var_index() < b.var_index() ? -1 : 1;
      return a.var_name().compare(b.var_name()) < 0   ? -1
             : a.var_name().compare(b.var_name()) > 0 ? 1
                                                      : 0;
    case ExprNode::Kind::Constant:
      if (a.value() != b.value()) return a.value() < b.value() ? -1 : 1;
      return 0;
    case ExprNode::Kind::Unary: {
      if (a.unary_op() != b.unary_op())
        return static_cast<int>(a.unary_op()) < static_cast<int>(b.unary_op()) ? -1 : 1;
      return structural_compare(a.child(), b.child());
    }
    case ExprNode::Kind::Binary: {
      if (a.binary_op() != b.binary_op())
        return static_cast<int>(a.binary_op()) < static_cast<int>(b.binary_op()) ? -1 : 1;
      int c = structural_compare(a.left(), b.left());
      if (c != 0) return c;
      return structural_compare(a.right(), b.right());
    }
  }
  return 0;
}

int rank_of(const Expr& e) {
  if (e.is_constant()) return 0;
  if (e.is_variable()) return 1;
  return 2;
}

Expr fold_unary(UnaryOp op, const Expr& c) {
  double row[1] = {0.0};
  Expr tmp = Expr::unary(op, c);
  double v = tmp.eval_row(row);  // constant subtree: row unused
  if (std::isfinite(v)) return Expr::constant(v);
  return tmp;
}

Expr fold_binary(BinaryOp op, const Expr& l, const Expr& r) {
  double row[1] = {0.0};
  Expr tmp = Expr::binary(op, l, r);
  double v = tmp.eval_row(row);
  if (std::isfinite(v)) return Expr::constant(v);
  return tmp;
}

void flatten(BinaryOp op, const Expr& e, std::vector<Expr>& out) {
  if (e.kind() == ExprNode::Kind::Binary && e.binary_op() == op) {
    flatten(op, e.left(), out);
    flatten(op, e.right(), out);
  } else {
    out.push_back(e);
  }
}

Expr rebuild_chain(BinaryOp op, const std::vector<Expr>& parts) {
  Expr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Expr::binary(op, acc, parts[i]);
  return acc;
}

Expr rewrite_add(const Expr& e) {
  std::vector<Expr> parts;
  flatten(BinaryOp::Add, e, parts);
  double csum = 0.0;
  std::vector<Expr> terms;
  for (const Expr& p : parts) {
    if (p.is_constant())
      csum += p.value();
    else
      terms.push_back(p);
  }
  std::sort(terms.begin(), terms.end(),
            [](const Expr& a, const Expr& b) { return canonical_compare(a, b) < 0; });
  // Group runs of identical terms: t + t -> 2*t.
  std::vector<Expr> grouped;
  for (std::size_t i = 0; i < terms.size();) {
    std::size_t j = i + 1;
    while (j < terms.size() && terms[j].same(terms[i])) ++j;
    auto count = static_cast<double>(j - i);
    if (count > 1.0)
      grouped.push_back(Expr::binary(BinaryOp::Mul, Expr::constant(count), terms[i]));
    else
      grouped.push_back(terms[i]);
    i = j;
  }
  std::vector<Expr> out;
  if (std::isfinite(csum) && csum != 0.0) out.push_back(Expr::constant(csum));
  if (!std::isfinite(csum)) return e;  // overflowing fold: leave untouched
  out.insert(out.end(), grouped.begin(), grouped.end());
  if (out.empty()) return Expr::constant(0.0);
  return rebuild_chain(BinaryOp::Add, out);
}

Expr rewrite_mul(const Expr& e) {
  std::vector<Expr> parts;
  flatten(BinaryOp::Mul, e, parts);
  double cprod = 1.0;
  std::vector<Expr> factors;
  for (const Expr& p : parts) {
    if (p.is_constant())
      cprod *= p.value();
    else
      factors.push_back(p);
  }
  if (!std::isfinite(cprod)) return e;
  if (cprod == 0.0) return Expr::constant(0.0);
  std::sort(factors.begin(), factors.end(),
            [](const Expr& a, const Expr& b) { return canonical_compare(a, b) < 0; });
  // Pair identical neighbours: x * x -> square(x).
  std::vector<Expr> paired;
  for (std::size_t i = 0; i < factors.size();) {
    if (i + 1 < factors.size() && factors[i + 1].same(factors[i])) {
      paired.push_back(Expr::unary(UnaryOp::Square, factors[i]));
      i += 2;
    } else {
      paired.push_back(factors[i]);
      ++i;
    }
  }
  std::vector<Expr> out;
  if (cprod != 1.0) out.push_back(Expr::constant(cprod));
  out.insert(out.end(), paired.begin(), paired.end());
  if (out.empty()) return Expr::constant(1.0);
  return rebuild_chain(BinaryOp::Mul, out);
}

Expr rewrite(const Expr& e);

Expr simplify_children(const Expr& e) {
  switch (e.kind()) {
    case ExprNode::Kind::Variable:
    case ExprNode::Kind::Constant:
      return e;
    case ExprNode::Kind::Unary: {
      Expr c = rewrite(e.child());
      if (c.same(e.child())) return e;
      return Expr::unary(e.unary_op(), c);
    }
    case ExprNode::Kind::Binary: {
      Expr l = rewrite(e.left());
      Expr r = rewrite(e.right());
      if (l.same(e.left()) && r.same(e.right())) return e;
      return Expr::binary(e.binary_op(), l, r);
    }
  }
  return e;
}

Expr rewrite(const Expr& in) {
  Expr e = simplify_children(in);
  switch (e.kind()) {
    case ExprNode::Kind::Variable:
    case ExprNode::Kind::Constant:
      return e;
    case ExprNode::Kind::Unary: {
      Expr c = e.child();
      if (c.is_constant()) return fold_unary(e.unary_op(), c);
      if (e.unary_op() == UnaryOp::Neg && c.kind() == ExprNode::Kind::Unary &&
          c.unary_op() == UnaryOp::Neg)
        return c.child();
      if (e.unary_op() == UnaryOp::Sin && c.kind() == ExprNode::Kind::Unary &&
          c.unary_op() == UnaryOp::Neg)
        return Expr::unary(UnaryOp::Neg, Expr::unary(UnaryOp::Sin, c.child()));
      if (e.unary_op() == UnaryOp::Cos && c.kind() == ExprNode::Kind::Unary &&
          c.unary_op() == UnaryOp::Neg)
        return Expr::unary(UnaryOp::Cos, c.child());
      return e;
    }
    case ExprNode::Kind::Binary: {
      Expr l = e.left(), r = e.right();
      if (l.is_constant() && r.is_constant()) return fold_binary(e.binary_op(), l, r);
      switch (e.binary_op()) {
        case BinaryOp::Add:
        case BinaryOp::Mul:
          return e.binary_op() == BinaryOp::Add ? rewrite_add(e) : rewrite_mul(e);
        case BinaryOp::Sub:
          if (is_const(r, 0.0)) return l;
          if (is_const(l, 0.0)) return Expr::unary(UnaryOp::Neg, r);
          if (l.same(r)) return Expr::constant(0.0);
          return e;
        case BinaryOp::Div:
          if (is_const(r, 1.0)) return l;
          if (is_const(l, 0.0)) return Expr::constant(0.0);
          return e;
        case BinaryOp::Pow:
          if (is_const(r, 1.0)) return l;
          if (is_const(r, 0.0)) return Expr::constant(1.0);
          if (is_const(r, 2.0)) return Expr::unary(UnaryOp::Square, l);
          if (is_const(r, 4.0))  // same node count, canonical square basis
            return Expr::unary(UnaryOp::Square, Expr::unary(UnaryOp::Square, l));
          if (is_const(r, 0.5)) return Expr::unary(UnaryOp::Sqrt, l);
          return e;
      }
    }
  }
  return e;
}

}  // namespace

int canonical_compare(const Expr& a, const Expr& b) {
  int ra = rank_of(a), rb = rank_of(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra == 0) return a.value() < b.value() ? -1 : (a.value() > b.value() ? 1 : 0);
  if (ra == 1) {
    if (a.var_index() != b.var_index()) return a.var_index() < b.var_index() ? -1 : 1;
    return structural_compare(a, b);
  }
  if (a.complexity() != b.complexity()) return a.complexity() < b.complexity() ? -1 : 1;
  std::string sa = a.render(), sb = b.render();
  int c = sa.compare(sb);
  if (c != 0) return c < 0 ? -1 : 1;
  return structural_compare(a, b);
}

Expr simplify(const Expr& e) {
  if (!e.valid()) return e;
  Expr cur = e;
  for (int pass = 0; pass < 16; ++pass) {
    Expr next = rewrite(cur);
    if (next.same(cur)) return next;
    cur = next;
  }
  return cur;
}

Expr snap_constants(const Expr& e, double tol) {
  switch (e.kind()) {
    case ExprNode::Kind::Variable:
      return e;
    case ExprNode::Kind::Constant: {
      double v = e.value();
      double r = std::round(v);
      if (std::fabs(v - r) <= tol) return Expr::constant(r);
      double h = std::round(v * 2.0) / 2.0;
      if (std::fabs(v - h) <= tol) return Expr::constant(h);
      return e;
    }
    case ExprNode::Kind::Unary:
      return Expr::unary(e.unary_op(), snap_constants(e.child(), tol));
    case ExprNode::Kind::Binary:
      return Expr::binary(e.binary_op(), snap_constants(e.left(), tol),
                          snap_constants(e.right(), tol));
  }
  return e;
}

Expr substitute(const Expr& e, const std::vector<Expr>& replacements) {
  switch (e.kind()) {
    case ExprNode::Kind::Variable: {
      auto i = static_cast<std::size_t>(e.var_index());
      if (i < replacements.size() && replacements[i].valid()) return replacements[i];
      return e;
    }
    case ExprNode::Kind::Constant:
      return e;
    case ExprNode::Kind::Unary:
      return Expr::unary(e.unary_op(), substitute(e.child(), replacements));
    case ExprNode::Kind::Binary:
      return Expr::binary(e.binary_op(), substitute(e.left(), replacements),
                          substitute(e.right(), replacements));
  }
  return e;
}

bool contains_subtree(const Expr& haystack, const Expr& needle) {
  if (haystack.same(needle)) return true;
  switch (haystack.kind()) {
    case ExprNode::Kind::Unary:
      return contains_subtree(haystack.child(), needle);
    case ExprNode::Kind::Binary:
      return contains_subtree(haystack.left(), needle) ||
             contains_subtree(haystack.right(), needle);
    default:
      return false;
  }
}

std::vector<Expr> all_subtrees(const Expr& e) {
  std::vector<Expr> out;
  auto walk = [&](auto&& self, const Expr& n) -> void {
    bool seen = false;
    for (const Expr& s : out) {
      if (s.same(n)) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(n);
    if (n.kind() == ExprNode::Kind::Unary) {
      self(self, n.child());
    } else if (n.kind() == ExprNode::Kind::Binary) {
      self(self, n.left());
      self(self, n.right());
    }
  };
  walk(walk, e);
  return out;
}

}  // namespace fepysr
