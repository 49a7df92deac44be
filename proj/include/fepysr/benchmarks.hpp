#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fepysr/dataset.hpp"
#include "fepysr/expr.hpp"

namespace fepysr {

enum class SampleKind { Uniform, Even };

struct VarSpec {
  SampleKind kind;
  double lo;
  double hi;
  int count;
};

struct Benchmark {
  std::string name;
  std::string expression;  // source text of the ground truth
  Expr truth;
  std::vector<std::string> vars;
  std::vector<VarSpec> sampling;
  bool constant_tolerant = false;  // ground truth has non-integer/half-integer constants
  std::string group;               // nguyen, nguyen-prime, livermore, jin, constant, r,
                                   // recover, unrecover

  // Probe domain for the equivalence oracle, per the declared sampling box.
  EvalDomain domain(int probes = 64) const;
};

// Parse-validated registry: the five standard suites plus the LLM-benchmark
// fixtures (all Recover equations; the Unrecover equations expressible in the
// operator vocabulary).
const std::vector<Benchmark>& registry();

const Benchmark& find_benchmark(const std::string& name);  // throws on unknown name
std::vector<const Benchmark*> match_benchmarks(const std::string& selector);  // glob with '*'

// X sampled per spec (uniform rows with NaN targets are resampled; even grids
// with NaN targets are an error), y = ground truth evaluated on X.
Dataset generate(const Benchmark& b, std::uint64_t seed);

// y' = y + Normal(0, alpha * RMS(y)); alpha = 0 returns the dataset unchanged.
Dataset add_noise(const Dataset& ds, double alpha, std::uint64_t seed);

}  // namespace fepysr
