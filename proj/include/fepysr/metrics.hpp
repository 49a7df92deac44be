#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fepysr/benchmarks.hpp"
#include "fepysr/expr.hpp"
#include "fepysr/features.hpp"
#include "fepysr/gp.hpp"

namespace fepysr {

struct TrialOutcome {
  std::string benchmark;
  std::uint64_t seed = 0;
  bool recovered = false;
  double best_mse = 0.0;
  double wall_time_s = 0.0;  // informational; excluded from reproducibility comparisons
  std::string expression;    // recovered closed form (when flagged)
  std::string certificate;   // oracle-equivalence evidence (when flagged)
};

double recovery_rate(const std::vector<TrialOutcome>& outcomes);

// Top-10 cut of a feature library with validity against a target.
struct RankedFeatures {
  std::vector<std::pair<Expr, std::int64_t>> top;  // frequency non-increasing
  std::vector<bool> valid;
};

RankedFeatures rank_features(const FeatureLibrary& lib, const Expr& target,
                             const EvalDomain& dom);

// Frequency share of valid features in the top 10.
double efr(const RankedFeatures& r);
// Rank-discounted validity: sum 1/log2(i+1) over valid ranks.
double dcg1(const RankedFeatures& r);
// Frequency-weighted rank-discounted validity.
double dcg2(const RankedFeatures& r);

struct MinMseComparison {
  double min_a = 0.0;
  double min_b = 0.0;
  double ratio = 0.0;  // min_a / min_b; below 1 marks side a superior
};

// Minima over non-recovered trials of the same benchmark.
MinMseComparison min_mse_comparison(const std::vector<TrialOutcome>& a,
                                    const std::vector<TrialOutcome>& b);

struct JudgeResult {
  bool recovered = false;
  Expr matched;
  std::string certificate;
};

// Recovery judging: any front member oracle-equivalent to the ground truth on
// the benchmark domain. Exact-structure benchmarks snap constants first and
// use rel_tol 1e-9; constant-tolerant benchmarks use rel_tol 1e-6.
JudgeResult judge_front(const std::vector<FrontEntry>& front, const Benchmark& bench);
JudgeResult judge_front(const std::vector<FrontEntry>& front, const Expr& truth,
                        const EvalDomain& dom, bool constant_tolerant);

}  // namespace fepysr
