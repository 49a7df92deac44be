#pragma once

#include <vector>

#include "fepysr/expr.hpp"

namespace fepysr {

// Semantics-preserving canonicalization: constant folding, identity and
// annihilator elimination, x*x -> square(x), double negation, sin/cos parity,
// and flattening + canonical sorting of add/mul chains. Idempotent.
Expr simplify(const Expr& e);

// Strict total order used for sorting commutative operands and for
// deterministic library ordering: constants first, then variables by index,
// then subtrees by (complexity, rendered form, structure).
int canonical_compare(const Expr& a, const Expr& b);

// Constants within `tol` of an integer or half-integer snap to it.
Expr snap_constants(const Expr& e, double tol = 1e-4);

// Replace Variable(i) by replacements[i] when that entry is valid; variables
// past the end of the list are kept.
Expr substitute(const Expr& e, const std::vector<Expr>& replacements);

// Structural containment: does `needle` appear as a subtree of `haystack`?
bool contains_subtree(const Expr& haystack, const Expr& needle);

// All distinct subtrees of e (structural dedup), preorder discovery order.
std::vector<Expr> all_subtrees(const Expr& e);

}  // namespace fepysr
