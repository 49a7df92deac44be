#include <cmath>

#include <doctest.h>

#include "fepysr/expr.hpp"
#include "test_util.hpp"

using namespace fepysr;

namespace {
int count_kind(const Expr& e, ExprNode::Kind k) {
  int self = e.kind() == k ? 1 : 0;
  switch (e.kind()) {
    case ExprNode::Kind::Unary: return self + count_kind(e.child(), k);
    case ExprNode::Kind::Binary: return self + count_kind(e.left(), k) + count_kind(e.right(), k);
    default: return self;
  }
}

int count_trig(const Expr& e) {
  int self = e.kind() == ExprNode::Kind::Unary &&
                     (e.unary_op() == UnaryOp::Sin || e.unary_op() == UnaryOp::Cos)
                 ? 1
                 : 0;
  switch (e.kind()) {
    case ExprNode::Kind::Unary: return self + count_trig(e.child());
    case ExprNode::Kind::Binary: return self + count_trig(e.left()) + count_trig(e.right());
    default: return self;
  }
}
}  // namespace

TEST_CASE("parse builds the expected trees") {
  Expr nguyen1 = parse("x^3 + x^2 + x", {"x"});
  CHECK(nguyen1.kind() == ExprNode::Kind::Binary);
  CHECK(nguyen1.binary_op() == BinaryOp::Add);
  CHECK(count_kind(nguyen1, ExprNode::Kind::Variable) == 3);

  Expr id = parse("x", {"x"});
  CHECK(id.is_variable());
  CHECK(id.var_index() == 0);

  Expr nguyen5 = parse("sin(x^2)*cos(x) - 1", {"x"});
  CHECK(count_trig(nguyen5) == 2);
}

TEST_CASE("parse errors carry positions") {
  CHECK_THROWS_AS(parse("x +", {"x"}), ParseError);
  CHECK_THROWS_AS(parse("x + y", {"x"}), ParseError);   // unknown identifier
  CHECK_THROWS_AS(parse("frob(x)", {"x"}), ParseError);  // unknown function
  CHECK_THROWS_AS(parse("(x + 1", {"x"}), ParseError);
  try {
    parse("x + $", {"x"});
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.position == 4);
  }
}

TEST_CASE("unary minus binds looser than pow") {
  // -x^2 means -(x^2)
  Expr e = parse("-x^2", {"x"});
  REQUIRE(e.kind() == ExprNode::Kind::Unary);
  CHECK(e.unary_op() == UnaryOp::Neg);
  Matrix X(1, 1);
  X(0, 0) = 3.0;
  CHECK(evaluate(e, X)[0] == -9.0);
}

TEST_CASE("evaluate: pointwise with NaN on domain violations") {
  Matrix X3(1, 1);
  X3(0, 0) = 3.0;
  CHECK(evaluate(parse("x^2", {"x"}), X3)[0] == 9.0);

  Matrix Xneg(1, 1);
  Xneg(0, 0) = -1.0;
  CHECK(std::isnan(evaluate(parse("log(x)", {"x"}), Xneg)[0]));
  CHECK(std::isnan(evaluate(parse("sqrt(x)", {"x"}), Xneg)[0]));
  CHECK(std::isnan(evaluate(parse("1/(x+1)", {"x"}), Xneg)[0]));

  // Hand-evaluated: 1 - 1 + 2 - 2 = 0.
  Matrix X12(1, 2);
  X12(0, 0) = 1.0;
  X12(0, 1) = 2.0;
  CHECK(evaluate(parse("x^4 - x^3 + 0.5*y^2 - y", {"x", "y"}), X12)[0] == 0.0);

  // Overflow is reported as NaN, never an exception.
  Matrix Xbig(1, 1);
  Xbig(0, 0) = 1000.0;
  CHECK(std::isnan(evaluate(parse("exp(x)", {"x"}), Xbig)[0]));

  CHECK_THROWS_AS(evaluate(parse("x + y", {"x", "y"}), X3), std::invalid_argument);
}

TEST_CASE("pow takes real odd roots of negative bases") {
  Matrix X(1, 1);
  X(0, 0) = -8.0;
  CHECK(evaluate(parse("x^(1/3)", {"x"}), X)[0] == doctest::Approx(-2.0));
  CHECK(evaluate(parse("x^(2/3)", {"x"}), X)[0] == doctest::Approx(4.0));
  CHECK(std::isnan(evaluate(parse("x^0.423", {"x"}), X)[0]));
  CHECK(evaluate(parse("x^2", {"x"}), X)[0] == 64.0);
}

TEST_CASE("complexity counts every node as one token") {
  CHECK(complexity(parse("x", {"x"})) == 1);
  // Nested Nguyen-2 form: 13 tokens.
  CHECK(complexity(parse("x*(x*(x*(x+1)+1)+1)", {"x"})) == 13);
  // Factorized Nguyen-12 form: 17 tokens.
  CHECK(complexity(parse("x*x*x*(x-1) + 0.5*y*y - y", {"x", "y"})) == 17);
}

TEST_CASE("render/parse round trip is structural identity") {
  const char* fixtures[] = {
      "x^3 + x^2 + x", "sin(x^2)*cos(x) - 1", "x^4 - x^3 + 0.5*y^2 - y",
      "exp(-0.5*x^2)",  "(x + 1)^3 / (x^2 - x + 1)", "x^y", "2*sin(x)*cos(y)",
      "x - -3",         "-(x*y)", "square(x) + abs(y)"};
  for (const char* f : fixtures) {
    Expr e = parse(f, {"x", "y"});
    Expr re = parse(e.render(), {"x", "y"});
    CHECK_MESSAGE(re.same(e), f, " -> ", e.render());
  }

  Rng rng(31337);
  for (int i = 0; i < 500; ++i) {
    Expr e = testutil::random_expr(rng, 2, 4);
    Expr re = parse(e.render(), testutil::vars(2));
    CHECK_MESSAGE(re.same(e), e.render());
  }
}

TEST_CASE("equivalence oracle") {
  EvalDomain dom = EvalDomain::boxed({{-2.0, 2.0}}, 64, 99);
  CHECK(equivalent(parse("(x+1)^2", {"x"}), parse("x^2 + 2*x + 1", {"x"}), dom, 1e-6) ==
        Equivalence::Yes);
  CHECK(equivalent(parse("x", {"x"}), parse("x", {"x"}), dom, 1e-9) == Equivalence::Yes);
  CHECK(equivalent(parse("x^2", {"x"}), parse("x^2 + 0.01", {"x"}), dom, 1e-9) ==
        Equivalence::No);
  // Degenerate: NaN everywhere on the domain.
  CHECK(equivalent(parse("log(-1 - x^2)", {"x"}), parse("x", {"x"}), dom, 1e-6) ==
        Equivalence::Indeterminate);
}

TEST_CASE("equivalence is symmetric and reflexive on random pairs") {
  Rng rng(777);
  EvalDomain dom = EvalDomain::boxed({{-2.0, 2.0}, {-2.0, 2.0}}, 64, 5);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Expr a = testutil::random_expr(rng, 2, 3);
    Expr b = testutil::random_expr(rng, 2, 3);
    CHECK(equivalent(a, b, dom, 1e-6) == equivalent(b, a, dom, 1e-6));
    ++checked;
  }
  CHECK(checked == 1000);
  // Reflexivity: a No verdict against itself can only come from the
  // joint-finiteness floor, never from value disagreement.
  for (int i = 0; i < 200; ++i) {
    Expr a = testutil::random_expr(rng, 2, 3);
    Equivalence self = equivalent(a, a, dom, 1e-9);
    if (self == Equivalence::No) {
      Matrix X = dom.sample();
      auto vals = evaluate(a, X);
      int finite = 0;
      for (double v : vals) finite += std::isfinite(v) ? 1 : 0;
      CHECK(finite < static_cast<int>(0.9 * dom.probes));
    }
  }
}

TEST_CASE("EvalDomain validates its invariants") {
  CHECK_THROWS_AS(EvalDomain::boxed({{1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(EvalDomain::boxed({{0.0, 1.0}}, 8), std::invalid_argument);
  CHECK_THROWS_AS(Expr::constant(std::nan("")), std::invalid_argument);
}
