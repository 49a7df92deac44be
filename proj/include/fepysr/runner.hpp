#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fepysr/fmn.hpp"
#include "fepysr/gp.hpp"
#include "fepysr/metrics.hpp"
#include "fepysr/tyson.hpp"

namespace fepysr {

enum class RunMode { FmnExtract, SrBaseline, FePySR, NoiseSweep, MinMse, OdeCase };

const char* name(RunMode m);
RunMode run_mode_from_name(const std::string& s);

struct RunConfig {
  std::string benchmark = "Nguyen-1";  // name, comma list, group, or glob
  RunMode mode = RunMode::FePySR;
  int trials = 10;
  std::vector<double> noise_alphas = {0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.2};
  int num_experiments = 16;
  int num_workers = 8;
  int pysr_num = 4;  // top-K features
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  FmnConfig fmn;
  GpConfig gp;

  // Replay override: trial key -> iteration count recorded in a manifest.
  std::map<std::string, long> replay_iterations;

  std::vector<std::string> validate() const;  // all problems, not just the first
};

// Flat key=value config with fmn./gp./run. section prefixes; '#' comments.
RunConfig parse_config_lines(const std::vector<std::string>& lines);
RunConfig load_config(const std::filesystem::path& path);
std::vector<std::string> config_lines(const RunConfig& cfg);  // canonical serialization

struct TrialRecord {
  TrialOutcome outcome;
  std::vector<FrontEntry> front;
  long iterations_completed = 0;
};

struct BenchmarkRun {
  std::string benchmark;
  std::vector<TrialRecord> trials;          // fepysr / sr-baseline / ode-case
  std::vector<TrialRecord> baseline_trials;  // min-mse mode pairs
  // noise-sweep grid rows: alpha -> (efr, dcg1, dcg2)
  std::vector<std::array<double, 4>> noise_grid;
  FeatureLibrary library;        // fmn-extract mode
  std::vector<TrainTrace> traces;
};

struct RunResult {
  std::vector<BenchmarkRun> benchmarks;
};

// Executes the configured experiment and, when write_reports is set, emits
// manifest + reports into cfg.output_dir.
RunResult run_config(const RunConfig& cfg, bool write_reports = true);

// Reads a manifest back into a replayable config (including per-trial
// iteration counts, so wall-clock stops replay identically).
RunConfig load_manifest(const std::filesystem::path& manifest_path);

// Trial seed derivation shared by all modes.
std::uint64_t trial_seed(std::uint64_t base, const std::string& benchmark, int trial);

}  // namespace fepysr
