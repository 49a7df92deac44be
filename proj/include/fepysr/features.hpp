#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fepysr/benchmarks.hpp"
#include "fepysr/dataset.hpp"
#include "fepysr/expr.hpp"
#include "fepysr/fmn.hpp"

namespace fepysr {

struct FeatureEntry {
  Expr expr;  // canonical form
  std::int64_t frequency = 0;
  int first_seen_run = -1;
};

// Canonical-form features with cross-run frequencies, sorted by
// (frequency desc, complexity asc, rendered form asc).
struct FeatureLibrary {
  std::vector<FeatureEntry> entries;
  std::int64_t total_extracted = 0;
};

// Layer-by-layer trace of a trained model: each unit contributes its primitive
// applied to the symbolic feature at its dominant input channel (argmax |w|,
// ties to the lowest index). Binary units resolve each branch independently.
std::vector<Expr> extract_run(const FmnModel& m, const std::vector<std::string>& var_names);

FeatureLibrary aggregate(const std::vector<std::vector<Expr>>& runs);

// First K entries under the library order; returns fewer (with a diagnostic)
// when the library is smaller. Throws on an empty library.
std::vector<Expr> select_top(const FeatureLibrary& lib, int k,
                             std::vector<std::string>* diagnostics = nullptr);

struct AugmentedDataset {
  Dataset base;                // surviving rows only
  std::vector<Expr> features;  // appended columns, in order
  Matrix X;                    // n x (d + K)
  std::vector<double> y;
  int rows_dropped = 0;
  std::vector<double> finite_fraction;  // per feature, before dropping
  std::vector<std::string> diagnostics;

  int raw_dims() const { return base.X.cols; }
};

// Appends evaluated feature columns; rows where any feature is NaN are
// dropped and counted. A feature that is NaN on every row is an error.
AugmentedDataset augment(const Dataset& ds, const std::vector<Expr>& features);

struct Stage1Config {
  int num_experiments = 16;
  int num_workers = 8;
  int top_k = 4;  // pysr-num
  std::uint64_t base_seed = 0;
  FmnConfig fmn;
};

struct Stage1Result {
  FeatureLibrary library;
  AugmentedDataset augmented;
  std::vector<TrainTrace> traces;
};

// num_experiments independent seeded train+extract runs (seed = base + index),
// aggregated, ranked, top-K selected, dataset augmented. The result does not
// depend on the worker count.
Stage1Result run_pipeline_stage1(const Stage1Config& cfg, const Dataset& ds);

// A feature is valid for a target when its canonical form is a structural
// subtree of the simplified target or numerically equivalent to one.
bool is_valid_feature(const Expr& feature, const Expr& target, const EvalDomain& dom);

// One feature per line: canonical form, frequency, and (when a target is
// given) a valid/invalid flag.
void export_library(const FeatureLibrary& lib, const std::filesystem::path& path,
                    const Expr* target = nullptr, const EvalDomain* dom = nullptr);

}  // namespace fepysr
