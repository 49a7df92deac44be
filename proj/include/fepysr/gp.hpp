#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fepysr/dataset.hpp"
#include "fepysr/expr.hpp"
#include "fepysr/features.hpp"
#include "fepysr/rng.hpp"

namespace fepysr {

struct MutationWeights {
  double node_replace = 1.0;
  double graft = 1.0;
  double subtree_delete = 1.0;
  double constant_perturb = 1.0;
  double crossover = 1.0;
};

struct GpConfig {
  int population = 200;
  long iterations = 8000;  // 40 x population
  int tournament = 5;
  std::vector<UnaryOp> unary_ops = {UnaryOp::Sin, UnaryOp::Cos, UnaryOp::Exp, UnaryOp::Sqrt};
  std::vector<BinaryOp> binary_ops = {BinaryOp::Mul, BinaryOp::Add, BinaryOp::Sub, BinaryOp::Div};
  int max_complexity = 40;
  MutationWeights weights;
  bool refine_constants = true;
  double parsimony = 1e-5;
  double time_budget_s = 120.0;  // 0 disables the wall-clock stop
  long restart_interval = 20000;  // reseed the population this often; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

struct Candidate {
  Expr expr;
  double mse = 0.0;  // +inf when any training row evaluates non-finite
  int complexity = 0;
  long age = 0;
};

// Best candidate per complexity level; dominated entries are pruned so MSE is
// strictly decreasing as complexity grows.
class ParetoFront {
 public:
  // True when the candidate entered the front.
  bool insert(const Candidate& c);
  const std::map<int, Candidate>& entries() const { return by_complexity_; }
  bool empty() const { return by_complexity_.empty(); }
  double best_mse() const;
  bool dominance_holds() const;

 private:
  std::map<int, Candidate> by_complexity_;
};

// Uniform view over raw and augmented inputs: columns beyond raw_dims carry
// the feature expressions used for closed-form inlining.
struct SearchData {
  Matrix X;
  std::vector<double> y;
  std::vector<std::string> names;
  std::vector<Expr> features;  // features[k] backs column raw_dims + k
  int raw_dims = 0;
};

SearchData make_search_data(const Dataset& ds);
SearchData make_search_data(const AugmentedDataset& ads);

struct FrontEntry {
  int complexity = 0;
  double mse = 0.0;
  Expr column_form;
  Expr inlined;  // closed form over raw variables
};

struct SearchResult {
  std::vector<FrontEntry> front;  // ascending complexity
  long iterations_completed = 0;
};

// Tournament-selected steady-state evolution for the configured iterations or
// time budget, whichever first.
SearchResult search(const SearchData& data, const GpConfig& cfg);

// One structural edit of the sampled kind; oversized results are resampled a
// bounded number of times.
Expr mutate(const Expr& e, const GpConfig& cfg, const SearchData& data, Rng& rng);

// `a` with one uniformly chosen subtree replaced by a uniformly chosen
// subtree of `b`.
Expr crossover(const Expr& a, const Expr& b, const GpConfig& cfg, Rng& rng);

// Derivative-free (Nelder-Mead) joint polish of constant nodes; never returns
// a result with higher MSE than the input.
Expr refine_constants(const Expr& e, const SearchData& data);

// Mean squared error over all rows; +inf when any row is non-finite.
double candidate_mse(const Expr& e, const SearchData& data);

}  // namespace fepysr
