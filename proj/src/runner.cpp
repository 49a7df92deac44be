#include "fepysr/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "fepysr/simplify.hpp"

namespace fepysr {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

UnaryOp unary_from_name(const std::string& s) {
  static const std::pair<const char*, UnaryOp> table[] = {
      {"square", UnaryOp::Square}, {"sin", UnaryOp::Sin}, {"cos", UnaryOp::Cos},
      {"exp", UnaryOp::Exp},       {"log", UnaryOp::Log}, {"sqrt", UnaryOp::Sqrt},
      {"abs", UnaryOp::Abs},       {"neg", UnaryOp::Neg}, {"tanh", UnaryOp::Tanh}};
  for (const auto& [n, op] : table)
    if (s == n) return op;
  throw std::invalid_argument("unknown unary operator '" + s + "'");
}

BinaryOp binary_from_name(const std::string& s) {
  if (s == "add" || s == "+") return BinaryOp::Add;
  if (s == "sub" || s == "-") return BinaryOp::Sub;
  if (s == "mul" || s == "*") return BinaryOp::Mul;
  if (s == "div" || s == "/") return BinaryOp::Div;
  if (s == "pow" || s == "^") return BinaryOp::Pow;
  throw std::invalid_argument("unknown binary operator '" + s + "'");
}

const char* unary_name(UnaryOp op) { return name(op); }

const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "add";
    case BinaryOp::Sub: return "sub";
    case BinaryOp::Mul: return "mul";
    case BinaryOp::Div: return "div";
    case BinaryOp::Pow: return "pow";
  }
  return "?";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v, const std::string& sep,
                 const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += f(v[i]);
  }
  return out;
}

}  // namespace

const char* name(RunMode m) {
  switch (m) {
    case RunMode::FmnExtract: return "fmn-extract";
    case RunMode::SrBaseline: return "sr-baseline";
    case RunMode::FePySR: return "fepysr";
    case RunMode::NoiseSweep: return "noise-sweep";
    case RunMode::MinMse: return "min-mse";
    case RunMode::OdeCase: return "ode-case";
  }
  return "?";
}

RunMode run_mode_from_name(const std::string& s) {
  if (s == "fmn-extract") return RunMode::FmnExtract;
  if (s == "sr-baseline") return RunMode::SrBaseline;
  if (s == "fepysr") return RunMode::FePySR;
  if (s == "noise-sweep") return RunMode::NoiseSweep;
  if (s == "min-mse") return RunMode::MinMse;
  if (s == "ode-case") return RunMode::OdeCase;
  throw std::invalid_argument("unknown mode '" + s + "'");
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> problems;
  if (trials < 1) problems.push_back("run.trials must be >= 1");
  for (double a : noise_alphas)
    if (a < 0) problems.push_back("run.noise_alphas entries must be >= 0");
  if (num_experiments < 1) problems.push_back("run.num_experiments must be >= 1");
  if (num_workers < 1) problems.push_back("run.num_workers must be >= 1");
  if (pysr_num < 1) problems.push_back("run.pysr_num must be >= 1");
  if (mode != RunMode::OdeCase && match_benchmarks(benchmark).empty() &&
      split(benchmark, ',').empty())
    problems.push_back("run.benchmark selects nothing");
  if (mode != RunMode::OdeCase) {
    bool any = false;
    for (const std::string& sel : split(benchmark, ','))
      if (!match_benchmarks(sel).empty()) any = true;
    if (!any) problems.push_back("run.benchmark '" + benchmark + "' matches no benchmark");
  }
  try {
    FmnConfig f = fmn;
    if (f.depth == 0) f.depth = 4;
    f.validate();
  } catch (const std::exception& e) {
    problems.push_back(std::string("fmn: ") + e.what());
  }
  try {
    gp.validate();
  } catch (const std::exception& e) {
    problems.push_back(std::string("gp: ") + e.what());
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Config serialization

std::vector<std::string> config_lines(const RunConfig& c) {
  std::vector<std::string> out;
  out.push_back("run.benchmark=" + c.benchmark);
  out.push_back(std::string("run.mode=") + name(c.mode));
  out.push_back("run.trials=" + std::to_string(c.trials));
  {
    std::string a;
    for (std::size_t i = 0; i < c.noise_alphas.size(); ++i) {
      if (i) a += ",";
      a += fmt_short(c.noise_alphas[i]);
    }
    out.push_back("run.noise_alphas=" + a);
  }
  out.push_back("run.num_experiments=" + std::to_string(c.num_experiments));
  out.push_back("run.num_workers=" + std::to_string(c.num_workers));
  out.push_back("run.pysr_num=" + std::to_string(c.pysr_num));
  out.push_back("run.output_dir=" + c.output_dir.string());
  out.push_back("run.seed=" + std::to_string(c.seed));

  out.push_back("fmn.net_depth=" + std::to_string(c.fmn.depth));
  out.push_back("fmn.units_per_op=" + std::to_string(c.fmn.units_per_op));
  {
    std::string f;
    for (std::size_t i = 0; i < c.fmn.fun_net.size(); ++i) {
      if (i) f += ",";
      f += name(c.fmn.fun_net[i]);
    }
    out.push_back("fmn.fun_net=" + f);
  }
  out.push_back("fmn.learning_rate=" + fmt_short(c.fmn.learning_rate));
  out.push_back("fmn.epochs=" + std::to_string(c.fmn.epochs));
  out.push_back("fmn.batch_size=" + std::to_string(c.fmn.batch_size));
  out.push_back("fmn.lambda1=" + fmt_short(c.fmn.lambda1));
  out.push_back("fmn.lambda2=" + fmt_short(c.fmn.lambda2));
  out.push_back("fmn.epsilon=" + fmt_short(c.fmn.epsilon));
  out.push_back(std::string("fmn.norm_mode=") +
                (c.fmn.norm_mode == NormMode::Global ? "global" : "per_unit"));

  out.push_back("gp.population=" + std::to_string(c.gp.population));
  out.push_back("gp.iterations=" + std::to_string(c.gp.iterations));
  out.push_back("gp.tournament=" + std::to_string(c.gp.tournament));
  {
    std::string u;
    for (std::size_t i = 0; i < c.gp.unary_ops.size(); ++i) {
      if (i) u += ",";
      u += unary_name(c.gp.unary_ops[i]);
    }
    out.push_back("gp.unary_operators=" + u);
    std::string b;
    for (std::size_t i = 0; i < c.gp.binary_ops.size(); ++i) {
      if (i) b += ",";
      b += binary_name(c.gp.binary_ops[i]);
    }
    out.push_back("gp.binary_operators=" + b);
  }
  out.push_back("gp.max_complexity=" + std::to_string(c.gp.max_complexity));
  out.push_back("gp.parsimony=" + fmt_short(c.gp.parsimony));
  out.push_back("gp.time_budget=" + fmt_short(c.gp.time_budget_s));
  out.push_back("gp.restart_interval=" + std::to_string(c.gp.restart_interval));
  out.push_back(std::string("gp.constant_refine=") + (c.gp.refine_constants ? "1" : "0"));
  out.push_back("gp.weight_node_replace=" + fmt_short(c.gp.weights.node_replace));
  out.push_back("gp.weight_graft=" + fmt_short(c.gp.weights.graft));
  out.push_back("gp.weight_subtree_delete=" + fmt_short(c.gp.weights.subtree_delete));
  out.push_back("gp.weight_constant_perturb=" + fmt_short(c.gp.weights.constant_perturb));
  out.push_back("gp.weight_crossover=" + fmt_short(c.gp.weights.crossover));
  return out;
}

RunConfig parse_config_lines(const std::vector<std::string>& lines) {
  RunConfig c;
  c.fmn.depth = 0;  // auto: 3 univariate, 4 multivariate
  std::vector<std::string> problems;
  for (const std::string& raw : lines) {
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto notspace = line.find_first_not_of(" \t\r\n");
    if (notspace == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back("bad config line: " + raw);
      continue;
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t\r\n");
      auto e = s.find_last_not_of(" \t\r\n");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(val);
    try {
      if (key == "run.benchmark") c.benchmark = val;
      else if (key == "run.mode") c.mode = run_mode_from_name(val);
      else if (key == "run.trials") c.trials = std::stoi(val);
      else if (key == "run.noise_alphas") {
        c.noise_alphas.clear();
        for (const std::string& a : split(val, ',')) c.noise_alphas.push_back(std::stod(a));
      } else if (key == "run.num_experiments") c.num_experiments = std::stoi(val);
      else if (key == "run.num_workers") c.num_workers = std::stoi(val);
      else if (key == "run.pysr_num") c.pysr_num = std::stoi(val);
      else if (key == "run.output_dir") c.output_dir = val;
      else if (key == "run.seed") c.seed = std::stoull(val);
      else if (key == "fmn.net_depth") c.fmn.depth = std::stoi(val);
      else if (key == "fmn.units_per_op") c.fmn.units_per_op = std::stoi(val);
      else if (key == "fmn.fun_net") {
        c.fmn.fun_net.clear();
        for (const std::string& s : split(val, ',')) c.fmn.fun_net.push_back(hau_from_name(s));
      } else if (key == "fmn.learning_rate") c.fmn.learning_rate = std::stod(val);
      else if (key == "fmn.epochs") c.fmn.epochs = std::stoi(val);
      else if (key == "fmn.batch_size") c.fmn.batch_size = std::stoi(val);
      else if (key == "fmn.lambda1") c.fmn.lambda1 = std::stod(val);
      else if (key == "fmn.lambda2") c.fmn.lambda2 = std::stod(val);
      else if (key == "fmn.epsilon") c.fmn.epsilon = std::stod(val);
      else if (key == "fmn.norm_mode") {
        if (val == "global") c.fmn.norm_mode = NormMode::Global;
        else if (val == "per_unit") c.fmn.norm_mode = NormMode::PerUnit;
        else throw std::invalid_argument("fmn.norm_mode must be global or per_unit");
      } else if (key == "gp.population") c.gp.population = std::stoi(val);
      else if (key == "gp.iterations") c.gp.iterations = std::stol(val);
      else if (key == "gp.tournament") c.gp.tournament = std::stoi(val);
      else if (key == "gp.unary_operators") {
        c.gp.unary_ops.clear();
        for (const std::string& s : split(val, ',')) c.gp.unary_ops.push_back(unary_from_name(s));
      } else if (key == "gp.binary_operators") {
        c.gp.binary_ops.clear();
        for (const std::string& s : split(val, ',')) c.gp.binary_ops.push_back(binary_from_name(s));
      } else if (key == "gp.max_complexity") c.gp.max_complexity = std::stoi(val);
      else if (key == "gp.parsimony") c.gp.parsimony = std::stod(val);
      else if (key == "gp.time_budget") c.gp.time_budget_s = std::stod(val);
      else if (key == "gp.restart_interval") c.gp.restart_interval = std::stol(val);
      else if (key == "gp.constant_refine") c.gp.refine_constants = val == "1" || val == "true";
      else if (key == "gp.weight_node_replace") c.gp.weights.node_replace = std::stod(val);
      else if (key == "gp.weight_graft") c.gp.weights.graft = std::stod(val);
      else if (key == "gp.weight_subtree_delete") c.gp.weights.subtree_delete = std::stod(val);
      else if (key == "gp.weight_constant_perturb") c.gp.weights.constant_perturb = std::stod(val);
      else if (key == "gp.weight_crossover") c.gp.weights.crossover = std::stod(val);
      else if (key.rfind("trial.", 0) == 0) {
        // manifest replay: trial.<bench>.<idx>.iterations=<n>
        if (key.size() > 11 && key.substr(key.size() - 11) == ".iterations") {
          std::string k = key.substr(6, key.size() - 6 - 11);
          c.replay_iterations[k] = std::stol(val);
        }
        // trial.*.seed lines are derivable; ignored on load
      } else if (key == "config_hash") {
        // informational
      } else {
        problems.push_back("unknown config key: " + key);
      }
    } catch (const std::exception& e) {
      problems.push_back("bad value for " + key + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string all;
    for (const std::string& p : problems) all += p + "\n";
    throw std::invalid_argument(all);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return parse_config_lines(lines);
}

RunConfig load_manifest(const std::filesystem::path& manifest_path) {
  return load_config(manifest_path);
}

std::uint64_t trial_seed(std::uint64_t base, const std::string& benchmark, int trial) {
  return mix_seed(base, fnv1a(benchmark), static_cast<std::uint64_t>(trial));
}

// ---------------------------------------------------------------------------
// Execution

namespace {

FmnConfig resolved_fmn(const RunConfig& cfg, int dims) {
  FmnConfig f = cfg.fmn;
  if (f.depth == 0) f.depth = dims <= 1 ? 3 : 4;  // Table defaults
  return f;
}

struct TrialJob {
  const Benchmark* bench = nullptr;  // null for ode-case
  int trial = 0;
  bool with_features = true;
};

TrialRecord run_one_trial(const RunConfig& cfg, const TrialJob& job) {
  auto t0 = std::chrono::steady_clock::now();
  std::string bench_name = job.bench ? job.bench->name : "Tyson-dX1";
  std::uint64_t ts = trial_seed(cfg.seed, bench_name, job.trial);

  Dataset data;
  Expr truth;
  EvalDomain dom;
  bool constant_tolerant;
  if (job.bench) {
    data = generate(*job.bench, mix_seed(ts, fnv1a("data")));
    truth = job.bench->truth;
    dom = job.bench->domain();
    constant_tolerant = job.bench->constant_tolerant;
  } else {
    TysonConfig tc;
    data = tyson_generate(tc);
    data.seed = ts;
    truth = tyson_dx1_truth(tc);
    std::vector<std::array<double, 2>> ranges;
    for (int j = 0; j < data.dims(); ++j) {
      double lo = data.X(0, j), hi = lo;
      for (int i = 1; i < data.rows(); ++i) {
        lo = std::min(lo, data.X(i, j));
        hi = std::max(hi, data.X(i, j));
      }
      if (!(lo < hi)) hi = lo + 1.0;  // S is constant within a segment set
      ranges.push_back({lo, hi});
    }
    dom = EvalDomain::boxed(std::move(ranges), 64, mix_seed(0xD0A11, fnv1a(bench_name)));
    constant_tolerant = true;
  }

  SearchData sd;
  if (job.with_features) {
    Stage1Config s1;
    s1.num_experiments = cfg.num_experiments;
    s1.num_workers = 1;  // trials already parallelize above
    s1.top_k = cfg.pysr_num;
    s1.base_seed = mix_seed(ts, fnv1a("fmn"));
    s1.fmn = resolved_fmn(cfg, data.dims());
    Stage1Result s1r = run_pipeline_stage1(s1, data);
    sd = make_search_data(s1r.augmented);
  } else {
    sd = make_search_data(data);
  }

  GpConfig gp = cfg.gp;
  gp.seed = mix_seed(ts, fnv1a("gp"));
  std::string key = bench_name + "." + std::to_string(job.trial);
  auto it = cfg.replay_iterations.find(key);
  if (it != cfg.replay_iterations.end()) {
    gp.iterations = it->second;
    gp.time_budget_s = 0;  // replay exactly as recorded
  }
  SearchResult sr = search(sd, gp);
  JudgeResult jr = judge_front(sr.front, truth, dom, constant_tolerant);

  TrialRecord rec;
  rec.front = sr.front;
  rec.iterations_completed = sr.iterations_completed;
  rec.outcome.benchmark = bench_name;
  rec.outcome.seed = ts;
  rec.outcome.recovered = jr.recovered;
  double best = std::numeric_limits<double>::infinity();
  for (const FrontEntry& fe : sr.front) best = std::min(best, fe.mse);
  rec.outcome.best_mse = best;
  if (jr.recovered) {
    rec.outcome.expression = jr.matched.render();
    rec.outcome.certificate = jr.certificate;
  }
  rec.outcome.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// Runs f(i) for i in [0, n) on up to `workers` threads; exceptions rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& f) {
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto body = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        f(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_front(const std::filesystem::path& path, const std::vector<FrontEntry>& front) {
  std::ofstream out(path);
  out << "# complexity\tmse\tcolumn_form\tinlined\n";
  for (const FrontEntry& fe : front)
    out << fe.complexity << '\t' << fmt(fe.mse) << '\t' << fe.column_form.render() << '\t'
        << fe.inlined.render() << '\n';
}

void write_trace(const std::filesystem::path& path, const TrainTrace& trace) {
  std::ofstream out(path);
  out << "# epoch\ttotal\tl2\tsparse\tcontrast\n";
  for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
    const LossBreakdown& lb = trace.epochs[i];
    out << i + 1 << '\t' << fmt(lb.total) << '\t' << fmt(lb.l2) << '\t' << fmt(lb.sparse) << '\t'
        << fmt(lb.contrast) << '\n';
  }
}

}  // namespace

RunResult run_config(const RunConfig& cfg, bool write_reports) {
  auto problems = cfg.validate();
  if (!problems.empty()) {
    std::string all = "invalid configuration:\n";
    for (const std::string& p : problems) all += "  " + p + "\n";
    throw std::invalid_argument(all);
  }

  std::vector<const Benchmark*> benches;
  if (cfg.mode == RunMode::OdeCase) {
    benches.push_back(nullptr);
  } else {
    for (const std::string& sel : split(cfg.benchmark, ','))
      for (const Benchmark* b : match_benchmarks(sel))
        if (std::find(benches.begin(), benches.end(), b) == benches.end()) benches.push_back(b);
  }

  RunResult result;
  result.benchmarks.resize(benches.size());

  for (std::size_t bi = 0; bi < benches.size(); ++bi) {
    const Benchmark* bench = benches[bi];
    BenchmarkRun& br = result.benchmarks[bi];
    br.benchmark = bench ? bench->name : "Tyson-dX1";

    switch (cfg.mode) {
      case RunMode::FePySR:
      case RunMode::SrBaseline:
      case RunMode::OdeCase: {
        bool with_features = cfg.mode != RunMode::SrBaseline;
        br.trials.resize(static_cast<std::size_t>(cfg.trials));
        parallel_for(cfg.trials, cfg.num_workers, [&](int t) {
          br.trials[static_cast<std::size_t>(t)] =
              run_one_trial(cfg, TrialJob{bench, t, with_features});
        });
        break;
      }
      case RunMode::MinMse: {
        br.trials.resize(static_cast<std::size_t>(cfg.trials));
        br.baseline_trials.resize(static_cast<std::size_t>(cfg.trials));
        parallel_for(cfg.trials * 2, cfg.num_workers, [&](int k) {
          int t = k / 2;
          if (k % 2 == 0)
            br.trials[static_cast<std::size_t>(t)] = run_one_trial(cfg, TrialJob{bench, t, true});
          else
            br.baseline_trials[static_cast<std::size_t>(t)] =
                run_one_trial(cfg, TrialJob{bench, t, false});
        });
        break;
      }
      case RunMode::FmnExtract: {
        std::uint64_t ts = trial_seed(cfg.seed, bench->name, 0);
        Dataset data = generate(*bench, mix_seed(ts, fnv1a("data")));
        Stage1Config s1;
        s1.num_experiments = cfg.num_experiments;
        s1.num_workers = cfg.num_workers;
        s1.top_k = cfg.pysr_num;
        s1.base_seed = mix_seed(ts, fnv1a("fmn"));
        s1.fmn = resolved_fmn(cfg, data.dims());
        Stage1Result s1r = run_pipeline_stage1(s1, data);
        br.library = std::move(s1r.library);
        br.traces = std::move(s1r.traces);
        break;
      }
      case RunMode::NoiseSweep: {
        std::uint64_t ts = trial_seed(cfg.seed, bench->name, 0);
        Dataset clean = generate(*bench, mix_seed(ts, fnv1a("data")));
        for (std::size_t ai = 0; ai < cfg.noise_alphas.size(); ++ai) {
          double alpha = cfg.noise_alphas[ai];
          Dataset noisy = add_noise(clean, alpha, mix_seed(ts, fnv1a("noise"), ai));
          Stage1Config s1;
          s1.num_experiments = cfg.num_experiments;
          s1.num_workers = cfg.num_workers;
          s1.top_k = cfg.pysr_num;
          s1.base_seed = mix_seed(ts, fnv1a("fmn"), ai);
          s1.fmn = resolved_fmn(cfg, noisy.dims());
          Stage1Result s1r = run_pipeline_stage1(s1, noisy);
          RankedFeatures rf = rank_features(s1r.library, bench->truth, bench->domain());
          br.noise_grid.push_back({alpha, efr(rf), dcg1(rf), dcg2(rf)});
          if (write_reports) {
            std::filesystem::create_directories(cfg.output_dir);
            EvalDomain dom = bench->domain();
            export_library(s1r.library,
                           cfg.output_dir / ("library_" + bench->name + "_a" + fmt_short(alpha) +
                                             ".txt"),
                           &bench->truth, &dom);
          }
        }
        break;
      }
    }
  }

  if (write_reports) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);

    // Manifest: canonical config plus per-trial seeds and iteration counts.
    std::vector<std::string> lines = config_lines(cfg);
    for (const BenchmarkRun& br : result.benchmarks) {
      auto add_trials = [&](const std::vector<TrialRecord>& trials, const char* suffix) {
        for (std::size_t t = 0; t < trials.size(); ++t) {
          std::string key = "trial." + br.benchmark + "." + std::to_string(t) + suffix;
          lines.push_back(key + ".seed=" + std::to_string(trials[t].outcome.seed));
          lines.push_back(key + ".iterations=" +
                          std::to_string(trials[t].iterations_completed));
        }
      };
      add_trials(br.trials, "");
      if (!br.baseline_trials.empty()) add_trials(br.baseline_trials, ".baseline");
    }
    std::string blob;
    for (const std::string& l : config_lines(cfg)) blob += l + "\n";
    std::ofstream manifest(cfg.output_dir / "manifest.txt");
    for (const std::string& l : lines) manifest << l << "\n";
    manifest << "config_hash=" << fnv1a(blob) << "\n";

    // Outcomes and fronts.
    bool any_trials = false;
    for (const BenchmarkRun& br : result.benchmarks)
      if (!br.trials.empty()) any_trials = true;
    if (any_trials) {
      std::ofstream out(cfg.output_dir / "outcomes.tsv");
      out << "# benchmark\ttrial\tseed\trecovered\tbest_mse\texpression\tcertificate\twall_s\n";
      fs::create_directories(cfg.output_dir / "fronts");
      for (const BenchmarkRun& br : result.benchmarks) {
        auto dump = [&](const std::vector<TrialRecord>& trials, const std::string& tag) {
          for (std::size_t t = 0; t < trials.size(); ++t) {
            const TrialOutcome& o = trials[t].outcome;
            out << o.benchmark << tag << '\t' << t << '\t' << o.seed << '\t'
                << (o.recovered ? 1 : 0) << '\t' << fmt(o.best_mse) << '\t' << o.expression
                << '\t' << o.certificate << '\t' << fmt_short(o.wall_time_s) << '\n';
            write_front(cfg.output_dir / "fronts" /
                            (br.benchmark + tag + "_t" + std::to_string(t) + ".tsv"),
                        trials[t].front);
          }
        };
        dump(br.trials, "");
        dump(br.baseline_trials, ".baseline");
      }
    }

    // Mode-specific reports.
    std::ofstream summary(cfg.output_dir / "summary.txt");
    summary << "mode: " << name(cfg.mode) << "\n";
    for (const BenchmarkRun& br : result.benchmarks) {
      summary << "\nbenchmark: " << br.benchmark << "\n";
      if (!br.trials.empty()) {
        std::vector<TrialOutcome> outs;
        for (const TrialRecord& tr : br.trials) outs.push_back(tr.outcome);
        summary << "  trials: " << outs.size() << "\n";
        summary << "  recovery_rate: " << fmt_short(recovery_rate(outs)) << "\n";
        double best = std::numeric_limits<double>::infinity();
        for (const TrialOutcome& o : outs) best = std::min(best, o.best_mse);
        summary << "  best_mse: " << fmt_short(best) << "\n";
      }
      if (!br.baseline_trials.empty()) {
        std::vector<TrialOutcome> a, b;
        for (const TrialRecord& tr : br.trials) a.push_back(tr.outcome);
        for (const TrialRecord& tr : br.baseline_trials) b.push_back(tr.outcome);
        try {
          MinMseComparison cmp = min_mse_comparison(a, b);
          summary << "  min_mse feature/baseline: " << fmt(cmp.min_a) << " / " << fmt(cmp.min_b)
                  << "  ratio " << fmt_short(cmp.ratio) << "\n";
          std::ofstream mm(cfg.output_dir / "minmse.tsv", std::ios::app);
          mm << br.benchmark << '\t' << fmt(cmp.min_a) << '\t' << fmt(cmp.min_b) << '\t'
             << fmt(cmp.ratio) << '\n';
        } catch (const std::exception& e) {
          summary << "  min_mse: " << e.what() << "\n";
        }
      }
      if (!br.noise_grid.empty()) {
        std::ofstream grid(cfg.output_dir / ("noise_grid_" + br.benchmark + ".tsv"));
        grid << "# alpha\tefr\tdcg1\tdcg2\n";
        summary << "  alpha\tEFR\tDCG-1\tDCG-2\n";
        for (const auto& row : br.noise_grid) {
          grid << fmt_short(row[0]) << '\t' << fmt(row[1]) << '\t' << fmt(row[2]) << '\t'
               << fmt(row[3]) << '\n';
          summary << "  " << fmt_short(row[0]) << '\t' << fmt_short(row[1]) << '\t'
                  << fmt_short(row[2]) << '\t' << fmt_short(row[3]) << "\n";
        }
      }
      if (!br.library.entries.empty()) {
        const Benchmark* bench = cfg.mode == RunMode::OdeCase ? nullptr : &find_benchmark(br.benchmark);
        if (bench) {
          EvalDomain dom = bench->domain();
          export_library(br.library, cfg.output_dir / ("library_" + br.benchmark + ".txt"),
                         &bench->truth, &dom);
        }
        summary << "  library: " << br.library.entries.size() << " unique / "
                << br.library.total_extracted << " extracted\n";
        for (std::size_t i = 0; i < br.traces.size(); ++i)
          write_trace(cfg.output_dir / ("trace_" + br.benchmark + "_run" + std::to_string(i) +
                                        ".tsv"),
                      br.traces[i]);
      }
    }
  }
  return result;
}

}  // namespace fepysr
