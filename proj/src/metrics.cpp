#include "fepysr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fepysr/simplify.hpp"

namespace fepysr {

double recovery_rate(const std::vector<TrialOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("no outcomes");
  std::size_t hits = 0;
  for (const TrialOutcome& o : outcomes) hits += o.recovered ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

RankedFeatures rank_features(const FeatureLibrary& lib, const Expr& target,
                             const EvalDomain& dom) {
  RankedFeatures r;
  Expr t = simplify(target);
  auto take = std::min<std::size_t>(10, lib.entries.size());
  for (std::size_t i = 0; i < take; ++i) {
    const FeatureEntry& e = lib.entries[i];
    r.top.emplace_back(e.expr, e.frequency);
    r.valid.push_back(is_valid_feature(e.expr, t, dom));
  }
  return r;
}

double efr(const RankedFeatures& r) {
  if (r.top.empty()) throw std::invalid_argument("empty ranking");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.top.size(); ++i) {
    auto f = static_cast<double>(r.top[i].second);
    den += f;
    if (r.valid[i]) num += f;
  }
  return den > 0.0 ? num / den : 0.0;
}

double dcg1(const RankedFeatures& r) {
  if (r.top.empty()) throw std::invalid_argument("empty ranking");
  double acc = 0.0;
  for (std::size_t i = 0; i < r.top.size(); ++i)
    if (r.valid[i]) acc += 1.0 / std::log2(static_cast<double>(i + 2));
  return acc;
}

double dcg2(const RankedFeatures& r) {
  if (r.top.empty()) throw std::invalid_argument("empty ranking");
  double acc = 0.0;
  for (std::size_t i = 0; i < r.top.size(); ++i)
    if (r.valid[i])
      acc += static_cast<double>(r.top[i].second) / std::log2(static_cast<double>(i + 2));
  return acc;
}

MinMseComparison min_mse_comparison(const std::vector<TrialOutcome>& a,
                                    const std::vector<TrialOutcome>& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("both outcome lists must be nonempty");
  if (a.front().benchmark != b.front().benchmark)
    throw std::invalid_argument("outcome lists are for different benchmarks");
  auto surviving_min = [](const std::vector<TrialOutcome>& v, const char* side) {
    double m = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const TrialOutcome& o : v) {
      if (o.recovered) continue;  // successful runs are excluded
      any = true;
      m = std::min(m, o.best_mse);
    }
    if (!any)
      throw std::invalid_argument(std::string("all trials of side ") + side +
                                  " recovered; nothing to compare");
    return m;
  };
  MinMseComparison r;
  r.min_a = surviving_min(a, "a");
  r.min_b = surviving_min(b, "b");
  r.ratio = r.min_a / r.min_b;
  return r;
}

JudgeResult judge_front(const std::vector<FrontEntry>& front, const Expr& truth,
                        const EvalDomain& dom, bool constant_tolerant) {
  Expr t = simplify(truth);
  for (const FrontEntry& fe : front) {
    if (!fe.inlined.valid()) continue;
    Expr cand = constant_tolerant ? simplify(fe.inlined) : simplify(snap_constants(fe.inlined));
    double tol = constant_tolerant ? 1e-6 : 1e-9;
    if (equivalent(cand, t, dom, tol) == Equivalence::Yes) {
      JudgeResult jr;
      jr.recovered = true;
      jr.matched = cand;
      jr.certificate = "equivalent to '" + t.render() + "' at rel_tol=" +
                       (constant_tolerant ? std::string("1e-6") : std::string("1e-9")) + " on " +
                       std::to_string(dom.probes) + " probes";
      return jr;
    }
  }
  return {};
}

JudgeResult judge_front(const std::vector<FrontEntry>& front, const Benchmark& bench) {
  return judge_front(front, bench.truth, bench.domain(), bench.constant_tolerant);
}

}  // namespace fepysr
