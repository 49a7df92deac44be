#include "fepysr/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fepysr/simplify.hpp"

namespace fepysr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void GpConfig::validate() const {
  if (population < 2) throw std::invalid_argument("population must be >= 2");
  if (max_complexity < 3) throw std::invalid_argument("max complexity must be >= 3");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (tournament < 1) throw std::invalid_argument("tournament must be >= 1");
  if (binary_ops.empty() && unary_ops.empty())
    throw std::invalid_argument("need at least one operator");
}

// ---------------------------------------------------------------------------
// Pareto front

bool ParetoFront::insert(const Candidate& c) {
  if (!std::isfinite(c.mse)) return false;
  // Reject candidates weakly dominated by a simpler entry.
  for (const auto& [comp, cand] : by_complexity_) {
    if (comp > c.complexity) break;
    if (comp == c.complexity) {
      if (cand.mse <= c.mse) return false;
      continue;
    }
    if (cand.mse <= c.mse) return false;
  }
  by_complexity_[c.complexity] = c;
  // Drop entries this candidate now dominates.
  for (auto it = by_complexity_.upper_bound(c.complexity); it != by_complexity_.end();) {
    if (it->second.mse >= c.mse)
      it = by_complexity_.erase(it);
    else
      ++it;
  }
  return true;
}

double ParetoFront::best_mse() const {
  double best = kInf;
  for (const auto& [comp, cand] : by_complexity_) best = std::min(best, cand.mse);
  return best;
}

bool ParetoFront::dominance_holds() const {
  double prev = kInf;
  for (const auto& [comp, cand] : by_complexity_) {
    if (!(cand.mse < prev)) return false;
    prev = cand.mse;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Search data

SearchData make_search_data(const Dataset& ds) {
  SearchData s;
  s.X = ds.X;
  s.y = ds.y;
  s.names = ds.var_names;
  s.raw_dims = ds.dims();
  return s;
}

SearchData make_search_data(const AugmentedDataset& ads) {
  SearchData s;
  s.X = ads.X;
  s.y = ads.y;
  s.names = ads.base.var_names;
  for (std::size_t k = 0; k < ads.features.size(); ++k)
    s.names.push_back("phi" + std::to_string(k + 1));
  s.features = ads.features;
  s.raw_dims = ads.raw_dims();
  return s;
}

double candidate_mse(const Expr& e, const SearchData& data) {
  double acc = 0.0;
  auto n = static_cast<std::size_t>(data.X.rows);
  for (std::size_t i = 0; i < n; ++i) {
    double v = e.eval_row(data.X.row(static_cast<int>(i)));
    if (!std::isfinite(v)) return kInf;
    double d = v - data.y[i];
    acc += d * d;
  }
  double mse = acc / static_cast<double>(n);
  return std::isfinite(mse) ? mse : kInf;
}

// ---------------------------------------------------------------------------
// Random trees and tree surgery

namespace {

Expr random_leaf(Rng& rng, const SearchData& data) {
  if (rng.uniform01() < 0.8) {
    int v = static_cast<int>(rng.index(static_cast<std::size_t>(data.X.cols)));
    return Expr::variable(v, data.names[static_cast<std::size_t>(v)]);
  }
  return Expr::constant(std::round(rng.uniform(-5.0, 5.0) * 100.0) / 100.0);
}

Expr random_tree(Rng& rng, const GpConfig& cfg, const SearchData& data, int depth) {
  if (depth <= 0) return random_leaf(rng, data);
  double r = rng.uniform01();
  std::size_t nu = cfg.unary_ops.size(), nb = cfg.binary_ops.size();
  if (r < 0.25 || (nb == 0 && r < 0.75)) {
    if (nu == 0) return random_leaf(rng, data);
    UnaryOp op = cfg.unary_ops[rng.index(nu)];
    return Expr::unary(op, random_tree(rng, cfg, data, depth - 1));
  }
  if (r < 0.75) {
    BinaryOp op = cfg.binary_ops[rng.index(nb)];
    return Expr::binary(op, random_tree(rng, cfg, data, depth - 1),
                        random_tree(rng, cfg, data, depth - 1));
  }
  return random_leaf(rng, data);
}

// Graft material: fresh random structure that keeps the displaced subtree as
// one of its leaves half the time, so operators can be wrapped around
// existing building blocks.
Expr graft_tree(Rng& rng, const GpConfig& cfg, const SearchData& data, const Expr& displaced) {
  Expr fresh = random_tree(rng, cfg, data, rng.uniform_int(1, 3));
  if (rng.uniform01() < 0.5) return fresh;
  int leaves = 0;
  auto count_leaves = [&](auto&& self, const Expr& e) -> void {
    if (e.is_leaf()) {
      ++leaves;
      return;
    }
    if (e.kind() == ExprNode::Kind::Unary) {
      self(self, e.child());
    } else {
      self(self, e.left());
      self(self, e.right());
    }
  };
  count_leaves(count_leaves, fresh);
  if (leaves == 0) return fresh;
  int pick = static_cast<int>(rng.index(static_cast<std::size_t>(leaves)));
  int seen = 0;
  auto replace_leaf = [&](auto&& self, const Expr& e) -> Expr {
    if (e.is_leaf()) return seen++ == pick ? displaced : e;
    if (e.kind() == ExprNode::Kind::Unary) return Expr::unary(e.unary_op(), self(self, e.child()));
    Expr l = self(self, e.left());
    Expr r = self(self, e.right());
    return Expr::binary(e.binary_op(), l, r);
  };
  return replace_leaf(replace_leaf, fresh);
}

// Preorder subtree lookup.
Expr subtree_at(const Expr& e, int index) {
  if (index == 0) return e;
  int skip = index - 1;
  if (e.kind() == ExprNode::Kind::Unary) return subtree_at(e.child(), skip);
  if (e.kind() == ExprNode::Kind::Binary) {
    int ln = e.left().complexity();
    if (skip < ln) return subtree_at(e.left(), skip);
    return subtree_at(e.right(), skip - ln);
  }
  throw std::logic_error("subtree index out of range");
}

// Rebuild with the subtree at preorder `index` replaced by make(old).
template <typename F>
Expr replace_at(const Expr& e, int index, const F& make) {
  if (index == 0) return make(e);
  int skip = index - 1;
  if (e.kind() == ExprNode::Kind::Unary)
    return Expr::unary(e.unary_op(), replace_at(e.child(), skip, make));
  if (e.kind() == ExprNode::Kind::Binary) {
    int ln = e.left().complexity();
    if (skip < ln) return Expr::binary(e.binary_op(), replace_at(e.left(), skip, make), e.right());
    return Expr::binary(e.binary_op(), e.left(), replace_at(e.right(), skip - ln, make));
  }
  throw std::logic_error("replace index out of range");
}

void collect_indices(const Expr& e, int base, std::vector<int>& constants,
                     std::vector<int>& internals) {
  if (e.is_constant()) {
    constants.push_back(base);
    return;
  }
  if (e.is_variable()) return;
  internals.push_back(base);
  if (e.kind() == ExprNode::Kind::Unary) {
    collect_indices(e.child(), base + 1, constants, internals);
  } else {
    collect_indices(e.left(), base + 1, constants, internals);
    collect_indices(e.right(), base + 1 + e.left().complexity(), constants, internals);
  }
}

enum class MutKind { NodeReplace, Graft, Delete, ConstPerturb, Crossover };

MutKind sample_action(const MutationWeights& w, Rng& rng, bool allow_crossover) {
  double total = w.node_replace + w.graft + w.subtree_delete + w.constant_perturb +
                 (allow_crossover ? w.crossover : 0.0);
  double r = rng.uniform01() * total;
  if ((r -= w.node_replace) < 0) return MutKind::NodeReplace;
  if ((r -= w.graft) < 0) return MutKind::Graft;
  if ((r -= w.subtree_delete) < 0) return MutKind::Delete;
  if ((r -= w.constant_perturb) < 0) return MutKind::ConstPerturb;
  return MutKind::Crossover;
}

Expr apply_mutation(MutKind kind, const Expr& e, const GpConfig& cfg, const SearchData& data,
                    Rng& rng) {
  switch (kind) {
    case MutKind::NodeReplace: {
      int idx = static_cast<int>(rng.index(static_cast<std::size_t>(e.complexity())));
      return replace_at(e, idx, [&](const Expr& old) -> Expr {
        switch (old.kind()) {
          case ExprNode::Kind::Unary:
            if (cfg.unary_ops.empty()) return old;
            return Expr::unary(cfg.unary_ops[rng.index(cfg.unary_ops.size())], old.child());
          case ExprNode::Kind::Binary:
            if (cfg.binary_ops.empty()) return old;
            return Expr::binary(cfg.binary_ops[rng.index(cfg.binary_ops.size())], old.left(),
                                old.right());
          default:
            return random_leaf(rng, data);
        }
      });
    }
    case MutKind::Graft: {
      int idx = static_cast<int>(rng.index(static_cast<std::size_t>(e.complexity())));
      return replace_at(e, idx, [&](const Expr& old) { return graft_tree(rng, cfg, data, old); });
    }
    case MutKind::Delete: {
      std::vector<int> constants, internals;
      collect_indices(e, 0, constants, internals);
      if (internals.empty()) return e;
      int idx = internals[rng.index(internals.size())];
      return replace_at(e, idx, [&](const Expr& old) {
        if (old.kind() == ExprNode::Kind::Unary) return old.child();
        return rng.uniform01() < 0.5 ? old.left() : old.right();
      });
    }
    case MutKind::ConstPerturb: {
      std::vector<int> constants, internals;
      collect_indices(e, 0, constants, internals);
      if (constants.empty()) return e;
      int idx = constants[rng.index(constants.size())];
      double delta = rng.normal(0.0, 0.2);
      return replace_at(e, idx, [&](const Expr& old) {
        double v = old.value() * (1.0 + delta);
        if (old.value() == 0.0) v = delta;
        return std::isfinite(v) ? Expr::constant(v) : old;
      });
    }
    case MutKind::Crossover:
      return e;  // handled by the caller
  }
  return e;
}

}  // namespace

Expr mutate(const Expr& e, const GpConfig& cfg, const SearchData& data, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    MutKind kind = sample_action(cfg.weights, rng, /*allow_crossover=*/false);
    Expr out = apply_mutation(kind, e, cfg, data, rng);
    if (!out.same(e) && out.complexity() <= cfg.max_complexity) return out;
  }
  return e;
}

Expr crossover(const Expr& a, const Expr& b, const GpConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    int ia = static_cast<int>(rng.index(static_cast<std::size_t>(a.complexity())));
    int ib = static_cast<int>(rng.index(static_cast<std::size_t>(b.complexity())));
    Expr donor = subtree_at(b, ib);
    Expr out = replace_at(a, ia, [&](const Expr&) { return donor; });
    if (out.complexity() <= cfg.max_complexity) return out;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Constant refinement (Nelder-Mead over the constant vector)

namespace {

Expr with_constants(const Expr& e, const std::vector<double>& values, std::size_t& pos) {
  switch (e.kind()) {
    case ExprNode::Kind::Constant: {
      double v = values[pos++];
      return std::isfinite(v) ? Expr::constant(v) : e;
    }
    case ExprNode::Kind::Variable:
      return e;
    case ExprNode::Kind::Unary: {
      Expr c = with_constants(e.child(), values, pos);
      return Expr::unary(e.unary_op(), c);
    }
    case ExprNode::Kind::Binary: {
      Expr l = with_constants(e.left(), values, pos);
      Expr r = with_constants(e.right(), values, pos);
      return Expr::binary(e.binary_op(), l, r);
    }
  }
  return e;
}

void collect_constants(const Expr& e, std::vector<double>& out) {
  switch (e.kind()) {
    case ExprNode::Kind::Constant: out.push_back(e.value()); return;
    case ExprNode::Kind::Variable: return;
    case ExprNode::Kind::Unary: collect_constants(e.child(), out); return;
    case ExprNode::Kind::Binary:
      collect_constants(e.left(), out);
      collect_constants(e.right(), out);
      return;
  }
}

}  // namespace

Expr refine_constants(const Expr& e, const SearchData& data) {
  std::vector<double> v0;
  collect_constants(e, v0);
  if (v0.empty()) return e;
  const std::size_t m = v0.size();

  auto objective = [&](const std::vector<double>& v) {
    std::size_t pos = 0;
    return candidate_mse(with_constants(e, v, pos), data);
  };

  double f0 = objective(v0);
  if (!std::isfinite(f0)) return e;

  // Nelder-Mead with standard coefficients.
  std::vector<std::vector<double>> simplex(m + 1, v0);
  std::vector<double> fvals(m + 1);
  for (std::size_t i = 0; i < m; ++i) {
    double step = std::max(0.1, std::fabs(v0[i]) * 0.1);
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= m; ++i) fvals[i] = objective(simplex[i]);

  int max_evals = 80 * static_cast<int>(m) + 60;
  int evals = static_cast<int>(m) + 1;
  while (evals < max_evals) {
    std::vector<std::size_t> idx(m + 1);
    for (std::size_t i = 0; i <= m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });
    std::size_t best = idx[0], worst = idx[m], second = idx[m - 1];
    // Stop only when both the value spread and the simplex diameter collapse;
    // a wide simplex straddling the minimum still has nearly equal values.
    double diam = 0.0;
    for (std::size_t i = 0; i <= m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        diam = std::max(diam, std::fabs(simplex[i][j] - simplex[best][j]));
    bool flat = !(fvals[worst] - fvals[best] > 1e-14 * (1.0 + std::fabs(fvals[best])));
    if (flat && diam <= 1e-9 * (1.0 + std::fabs(simplex[best][0]))) break;

    std::vector<double> centroid(m, 0.0);
    for (std::size_t i = 0; i <= m; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < m; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(m);

    auto blend = [&](double t) {
      std::vector<double> p(m);
      for (std::size_t j = 0; j < m; ++j) p[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
      return p;
    };

    std::vector<double> refl = blend(-1.0);
    double frefl = objective(refl);
    ++evals;
    if (frefl < fvals[idx[0]]) {
      std::vector<double> exp_ = blend(-2.0);
      double fexp = objective(exp_);
      ++evals;
      if (fexp < frefl) {
        simplex[worst] = exp_;
        fvals[worst] = fexp;
      } else {
        simplex[worst] = refl;
        fvals[worst] = frefl;
      }
    } else if (frefl < fvals[second]) {
      simplex[worst] = refl;
      fvals[worst] = frefl;
    } else {
      std::vector<double> contr = blend(0.5);
      double fcontr = objective(contr);
      ++evals;
      if (fcontr < fvals[worst]) {
        simplex[worst] = contr;
        fvals[worst] = fcontr;
      } else {
        for (std::size_t i = 0; i <= m; ++i) {
          if (i == best) continue;
          for (std::size_t j = 0; j < m; ++j)
            simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
          fvals[i] = objective(simplex[i]);
          ++evals;
        }
      }
    }
  }

  std::size_t argbest = 0;
  for (std::size_t i = 1; i <= m; ++i)
    if (fvals[i] < fvals[argbest]) argbest = i;
  if (fvals[argbest] >= f0) return e;
  std::size_t pos = 0;
  return with_constants(e, simplex[argbest], pos);
}

// ---------------------------------------------------------------------------
// Main loop

namespace {

Expr inline_features(const Expr& e, const SearchData& data) {
  if (data.features.empty()) return e;
  std::vector<Expr> repl(static_cast<std::size_t>(data.raw_dims) + data.features.size());
  for (int i = 0; i < data.raw_dims; ++i)
    repl[static_cast<std::size_t>(i)] =
        Expr::variable(i, data.names[static_cast<std::size_t>(i)]);
  for (std::size_t k = 0; k < data.features.size(); ++k)
    repl[static_cast<std::size_t>(data.raw_dims) + k] = data.features[k];
  return simplify(substitute(e, repl));
}

}  // namespace

SearchResult search(const SearchData& data, const GpConfig& cfg) {
  cfg.validate();
  if (data.X.rows < 10) throw std::invalid_argument("need at least 10 rows");
  if (data.X.cols < 1) throw std::invalid_argument("need at least one input column");

  Rng rng(cfg.seed);
  auto fitness = [&](const Candidate& c) { return c.mse + cfg.parsimony * c.complexity; };

  std::vector<Candidate> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  ParetoFront front;
  bool any_finite = false;
  auto push = [&](Expr e) {
    Candidate c{e, candidate_mse(e, data), e.complexity(), 0};
    any_finite |= std::isfinite(c.mse);
    front.insert(c);
    pop.push_back(std::move(c));
  };
  double ymean = 0.0;
  for (double v : data.y) ymean += v;
  ymean /= static_cast<double>(data.y.size());
  // Seed the trivial models (every bare column, the best constant), the
  // current front on restarts, and random trees for the rest.
  auto seed_population = [&]() {
    pop.clear();
    if (std::isfinite(ymean)) push(Expr::constant(ymean));
    for (int v = 0; v < data.X.cols && static_cast<int>(pop.size()) < cfg.population; ++v)
      push(Expr::variable(v, data.names[static_cast<std::size_t>(v)]));
    for (const auto& [comp, cand] : front.entries()) {
      if (static_cast<int>(pop.size()) >= cfg.population / 2) break;
      pop.push_back(cand);
    }
    while (static_cast<int>(pop.size()) < cfg.population)
      push(random_tree(rng, cfg, data, rng.uniform_int(1, 4)));
  };
  seed_population();
  if (!any_finite)
    throw std::runtime_error("degenerate data: every initial candidate has infinite fitness");

  auto tournament_pick = [&](bool best) {
    std::size_t chosen = rng.index(pop.size());
    for (int k = 1; k < cfg.tournament; ++k) {
      std::size_t other = rng.index(pop.size());
      bool better = fitness(pop[other]) < fitness(pop[chosen]);
      if (better == best) chosen = other;
    }
    return chosen;
  };

  auto t0 = std::chrono::steady_clock::now();
  long it = 0;
  for (; it < cfg.iterations; ++it) {
    if (cfg.time_budget_s > 0 && (it & 0xFF) == 0) {
      double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (elapsed > cfg.time_budget_s) break;
    }
    if (cfg.restart_interval > 0 && it > 0 && it % cfg.restart_interval == 0) seed_population();
    MutKind kind = sample_action(cfg.weights, rng, /*allow_crossover=*/true);
    std::size_t pi = tournament_pick(true);
    Expr child;
    if (kind == MutKind::Crossover) {
      std::size_t qi = tournament_pick(true);
      child = crossover(pop[pi].expr, pop[qi].expr, cfg, rng);
    } else {
      Expr out = apply_mutation(kind, pop[pi].expr, cfg, data, rng);
      child = out.complexity() <= cfg.max_complexity ? out : pop[pi].expr;
    }
    Candidate c{child, candidate_mse(child, data), child.complexity(), it};
    if (!std::isfinite(c.mse)) continue;

    // Constant polish for candidates that would improve the front, plus an
    // occasional random polish so near-miss structures are not discarded for
    // their unfitted constants.
    if (cfg.refine_constants) {
      ParetoFront probe = front;
      bool polish = probe.insert(c) || rng.uniform01() < 0.05;
      if (polish) {
        Expr refined = refine_constants(c.expr, data);
        if (!refined.same(c.expr)) {
          double rmse = candidate_mse(refined, data);
          if (rmse <= c.mse) {
            c.expr = refined;
            c.mse = rmse;
          }
        }
      }
    }
    front.insert(c);
    std::size_t vi = tournament_pick(false);
    pop[vi] = c;
  }

  SearchResult res;
  res.iterations_completed = it;
  for (const auto& [comp, cand] : front.entries()) {
    FrontEntry fe;
    fe.complexity = comp;
    fe.mse = cand.mse;
    fe.column_form = cand.expr;
    fe.inlined = inline_features(cand.expr, data);
    res.front.push_back(std::move(fe));
  }
  return res;
}

}  // namespace fepysr
