// Command-line front end: benchmark listing, experiment execution, front
// re-judging, and report aggregation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fepysr/benchmarks.hpp"
#include "fepysr/metrics.hpp"
#include "fepysr/runner.hpp"
#include "fepysr/simplify.hpp"

namespace fs = std::filesystem;
using namespace fepysr;

namespace {

int cmd_bench(const std::string& selector) {
  auto matches = selector.empty() ? std::vector<const Benchmark*>{} : match_benchmarks(selector);
  if (selector.empty())
    for (const Benchmark& b : registry()) matches.push_back(&b);
  std::printf("%-14s %-10s %-5s %-22s %s\n", "name", "group", "vars", "sampling", "expression");
  for (const Benchmark* b : matches) {
    const VarSpec& s = b->sampling.front();
    char box[64];
    std::snprintf(box, sizeof(box), "%s(%g,%g,%d)/var",
                  s.kind == SampleKind::Uniform ? "U" : "E", s.lo, s.hi, s.count);
    std::printf("%-14s %-10s %-5zu %-22s %s\n", b->name.c_str(), b->group.c_str(),
                b->vars.size(), box, b->expression.c_str());
  }
  std::printf("%zu benchmarks\n", matches.size());
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  RunResult res = run_config(cfg, /*write_reports=*/true);
  for (const BenchmarkRun& br : res.benchmarks) {
    if (!br.trials.empty()) {
      std::vector<TrialOutcome> outs;
      for (const TrialRecord& t : br.trials) outs.push_back(t.outcome);
      std::printf("%s: recovery %.0f%% over %zu trials\n", br.benchmark.c_str(),
                  100.0 * recovery_rate(outs), outs.size());
    } else if (!br.noise_grid.empty()) {
      std::printf("%s: noise grid with %zu rows written\n", br.benchmark.c_str(),
                  br.noise_grid.size());
    } else if (!br.library.entries.empty()) {
      std::printf("%s: %zu unique features from %lld extracted\n", br.benchmark.c_str(),
                  br.library.entries.size(),
                  static_cast<long long>(br.library.total_extracted));
    }
  }
  std::printf("reports written to %s\n", cfg.output_dir.string().c_str());
  return 0;
}

std::vector<FrontEntry> read_front(const fs::path& path, const std::vector<std::string>& vars) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<FrontEntry> front;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    FrontEntry fe;
    std::string column, inlined;
    ss >> fe.complexity >> fe.mse;
    std::getline(ss, column, '\t');   // consume separator after mse
    std::getline(ss, column, '\t');
    std::getline(ss, inlined, '\t');
    fe.column_form = Expr();  // column form may reference phi columns; not needed for judging
    fe.inlined = parse(inlined, vars);
    front.push_back(std::move(fe));
  }
  return front;
}

int cmd_judge(const std::string& bench_name, const std::vector<std::string>& fronts) {
  const Benchmark& bench = find_benchmark(bench_name);
  int recovered = 0;
  for (const std::string& f : fronts) {
    auto front = read_front(f, bench.vars);
    JudgeResult jr = judge_front(front, bench);
    std::printf("%s: %s", f.c_str(), jr.recovered ? "recovered" : "not recovered");
    if (jr.recovered) {
      std::printf("  %s  [%s]", jr.matched.render().c_str(), jr.certificate.c_str());
      ++recovered;
    }
    std::printf("\n");
  }
  std::printf("%d/%zu fronts recovered\n", recovered, fronts.size());
  return 0;
}

int cmd_report(const std::vector<std::string>& dirs) {
  // Aggregate outcomes.tsv files into a recovery-rate table.
  std::map<std::string, std::pair<int, int>> per_bench;  // name -> (recovered, total)
  for (const std::string& dir : dirs) {
    fs::path p = fs::path(dir) / "outcomes.tsv";
    std::ifstream in(p);
    if (!in) {
      std::fprintf(stderr, "warning: no outcomes.tsv in %s\n", dir.c_str());
      continue;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string bench, trial, seed, rec;
      std::getline(ss, bench, '\t');
      std::getline(ss, trial, '\t');
      std::getline(ss, seed, '\t');
      std::getline(ss, rec, '\t');
      auto& cell = per_bench[bench];
      cell.second += 1;
      cell.first += rec == "1" ? 1 : 0;
    }
  }
  std::printf("%-20s %10s %10s %10s\n", "benchmark", "recovered", "trials", "rate");
  for (const auto& [bench, cell] : per_bench)
    std::printf("%-20s %10d %10d %9.1f%%\n", bench.c_str(), cell.first, cell.second,
                100.0 * cell.first / cell.second);
  return 0;
}

void add_overrides(CLI::App* cmd, std::vector<std::string>& overrides) {
  cmd->add_option("--set", overrides,
                  "override a config key, e.g. --set gp.iterations=20000 (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fepysr: neural feature extraction + evolutionary symbolic regression"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "list the benchmark registry");
  std::string selector;
  bench->add_option("selector", selector, "name, group, or glob (default: all)");

  auto* run = app.add_subcommand("run", "execute a run configuration");
  std::string config_path;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "key=value config file");
  add_overrides(run, overrides);

  auto* replay = app.add_subcommand("replay", "re-execute a run from its manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.txt from a previous run")->required();
  std::string replay_out;
  replay->add_option("--output-dir", replay_out, "write reports to a different directory");

  auto* judge = app.add_subcommand("judge", "re-judge stored fronts against a ground truth");
  std::string judge_bench;
  std::vector<std::string> judge_fronts;
  judge->add_option("benchmark", judge_bench, "benchmark name")->required();
  judge->add_option("fronts", judge_fronts, "front .tsv files")->required();

  auto* report = app.add_subcommand("report", "aggregate outcome files from run directories");
  std::vector<std::string> report_dirs;
  report->add_option("dirs", report_dirs, "run output directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (bench->parsed()) return cmd_bench(selector);
    if (run->parsed()) {
      std::vector<std::string> lines;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::fprintf(stderr, "error: cannot read %s\n", config_path.c_str());
          return 1;
        }
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
      }
      for (const std::string& o : overrides) lines.push_back(o);
      RunConfig cfg;
      try {
        cfg = parse_config_lines(lines);
        auto problems = cfg.validate();
        if (!problems.empty()) {
          for (const std::string& p : problems) std::fprintf(stderr, "config error: %s\n", p.c_str());
          return 1;
        }
      } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
      }
      return cmd_run(cfg);
    }
    if (replay->parsed()) {
      RunConfig cfg;
      try {
        cfg = load_manifest(manifest_path);
        if (!replay_out.empty()) cfg.output_dir = replay_out;
      } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
      }
      return cmd_run(cfg);
    }
    if (judge->parsed()) return cmd_judge(judge_bench, judge_fronts);
    if (report->parsed()) return cmd_report(report_dirs);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
