#include "fepysr/features.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "fepysr/simplify.hpp"

namespace fepysr {

namespace {

UnaryOp unary_of(HauOp op) {
  switch (op) {
    case HauOp::Square: return UnaryOp::Square;
    case HauOp::Sin: return UnaryOp::Sin;
    case HauOp::Cos: return UnaryOp::Cos;
    case HauOp::Exp: return UnaryOp::Exp;
    default: throw std::logic_error("not a unary HAU op");
  }
}

std::size_t argmax_abs(const std::vector<double>& w) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    double a = std::fabs(w[i]);
    if (a > best_abs) {  // ties keep the lowest index
      best_abs = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<Expr> extract_run(const FmnModel& m, const std::vector<std::string>& var_names) {
  if (!m.trained) throw std::invalid_argument("extract_run requires a trained model");
  if (static_cast<int>(var_names.size()) != m.arity)
    throw std::invalid_argument("variable name count does not match model arity");
  std::vector<Expr> channel;  // cumulative feature per channel
  channel.reserve(static_cast<std::size_t>(m.width(static_cast<int>(m.layers.size()))));
  for (int i = 0; i < m.arity; ++i)
    channel.push_back(Expr::variable(i, var_names[static_cast<std::size_t>(i)]));

  std::vector<Expr> out;
  for (const auto& layer : m.layers) {
    std::vector<Expr> traced;
    for (const FmnUnit& u : layer) {
      if (is_binary(u.op)) {
        const Expr& a = channel[argmax_abs(u.w1)];
        const Expr& b = channel[argmax_abs(u.w2)];
        traced.push_back(Expr::binary(u.op == HauOp::Add ? BinaryOp::Add : BinaryOp::Mul, a, b));
      } else {
        traced.push_back(Expr::unary(unary_of(u.op), channel[argmax_abs(u.w1)]));
      }
    }
    for (const Expr& f : traced) {
      out.push_back(f);
      channel.push_back(f);
    }
  }
  return out;
}

FeatureLibrary aggregate(const std::vector<std::vector<Expr>>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate needs at least one run");
  FeatureLibrary lib;
  std::map<std::string, std::size_t> by_key;
  for (std::size_t run = 0; run < runs.size(); ++run) {
    for (const Expr& raw : runs[run]) {
      ++lib.total_extracted;
      Expr canon = simplify(raw);
      std::string key = canon.render();
      auto it = by_key.find(key);
      if (it == by_key.end()) {
        by_key.emplace(key, lib.entries.size());
        lib.entries.push_back({canon, 1, static_cast<int>(run)});
      } else {
        ++lib.entries[it->second].frequency;
      }
    }
  }
  std::sort(lib.entries.begin(), lib.entries.end(), [](const FeatureEntry& a, const FeatureEntry& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    if (a.expr.complexity() != b.expr.complexity())
      return a.expr.complexity() < b.expr.complexity();
    return canonical_compare(a.expr, b.expr) < 0;
  });
  return lib;
}

std::vector<Expr> select_top(const FeatureLibrary& lib, int k,
                             std::vector<std::string>* diagnostics) {
  if (lib.entries.empty()) throw std::invalid_argument("cannot select from an empty library");
  if (k < 1) throw std::invalid_argument("top-K needs K >= 1");
  std::vector<Expr> out;
  auto take = std::min<std::size_t>(static_cast<std::size_t>(k), lib.entries.size());
  for (std::size_t i = 0; i < take; ++i) out.push_back(lib.entries[i].expr);
  if (take < static_cast<std::size_t>(k) && diagnostics)
    diagnostics->push_back("library has only " + std::to_string(lib.entries.size()) +
                           " features; requested " + std::to_string(k));
  return out;
}

AugmentedDataset augment(const Dataset& ds, const std::vector<Expr>& features) {
  AugmentedDataset out;
  out.features = features;

  int n = ds.rows();
  int d = ds.dims();
  int k = static_cast<int>(features.size());
  std::vector<std::vector<double>> cols;
  cols.reserve(features.size());
  for (const Expr& f : features) {
    if (f.max_var_index() >= d)
      throw std::invalid_argument("feature '" + f.render() + "' is not evaluable over the dataset");
    cols.push_back(evaluate(f, ds.X));
  }

  out.finite_fraction.assign(features.size(), 1.0);
  std::vector<char> keep(static_cast<std::size_t>(n), 1);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    int finite = 0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(cols[j][static_cast<std::size_t>(i)]))
        ++finite;
      else
        keep[static_cast<std::size_t>(i)] = 0;
    }
    out.finite_fraction[j] = n > 0 ? static_cast<double>(finite) / n : 0.0;
    if (finite == 0)
      throw std::runtime_error("feature '" + features[j].render() + "' is NaN on every row");
  }

  int kept = 0;
  for (char c : keep) kept += c;
  out.rows_dropped = n - kept;
  if (out.rows_dropped > 0.1 * n) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (out.finite_fraction[j] < 0.9)
        out.diagnostics.push_back("feature '" + features[j].render() + "' finite on " +
                                  std::to_string(out.finite_fraction[j] * 100.0) + "% of rows");
    }
  }

  out.base = ds;
  out.base.X = Matrix(kept, d);
  out.base.y.resize(static_cast<std::size_t>(kept));
  out.X = Matrix(kept, d + k);
  out.y.resize(static_cast<std::size_t>(kept));
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    for (int j = 0; j < d; ++j) {
      out.base.X(r, j) = ds.X(i, j);
      out.X(r, j) = ds.X(i, j);
    }
    for (int j = 0; j < k; ++j) out.X(r, d + j) = cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    out.base.y[static_cast<std::size_t>(r)] = ds.y[static_cast<std::size_t>(i)];
    out.y[static_cast<std::size_t>(r)] = ds.y[static_cast<std::size_t>(i)];
    ++r;
  }
  return out;
}

Stage1Result run_pipeline_stage1(const Stage1Config& cfg, const Dataset& ds) {
  if (cfg.num_experiments < 1) throw std::invalid_argument("num_experiments must be >= 1");
  int workers = std::max(1, cfg.num_workers);

  std::vector<std::vector<Expr>> runs(static_cast<std::size_t>(cfg.num_experiments));
  std::vector<TrainTrace> traces(static_cast<std::size_t>(cfg.num_experiments));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.num_experiments));

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= cfg.num_experiments) return;
      try {
        FmnConfig fc = cfg.fmn;
        fc.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
        TrainResult tr = fmn_train(fc, ds);
        runs[static_cast<std::size_t>(i)] = extract_run(tr.model, ds.var_names);
        traces[static_cast<std::size_t>(i)] = std::move(tr.trace);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Stage1Result res;
  res.library = aggregate(runs);
  res.traces = std::move(traces);
  std::vector<std::string> diags;
  std::vector<Expr> top = select_top(res.library, cfg.top_k, &diags);
  res.augmented = augment(ds, top);
  for (auto& d : diags) res.augmented.diagnostics.push_back(std::move(d));
  return res;
}

bool is_valid_feature(const Expr& feature, const Expr& target, const EvalDomain& dom) {
  Expr t = simplify(target);
  Expr f = simplify(feature);
  if (contains_subtree(t, f)) return true;
  for (const Expr& s : all_subtrees(t)) {
    if (s.is_constant()) continue;
    if (s.complexity() == 1 && f.complexity() > 1) continue;  // cheap reject
    if (equivalent(f, s, dom, 1e-6) == Equivalence::Yes) return true;
  }
  return false;
}

void export_library(const FeatureLibrary& lib, const std::filesystem::path& path,
                    const Expr* target, const EvalDomain* dom) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# feature\tfrequency" << (target ? "\tvalid" : "") << "\n";
  for (const FeatureEntry& e : lib.entries) {
    out << e.expr.render() << '\t' << e.frequency;
    if (target && dom) out << '\t' << (is_valid_feature(e.expr, *target, *dom) ? 1 : 0);
    out << '\n';
  }
}

}  // namespace fepysr
