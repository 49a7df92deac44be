#include <cmath>
#include <filesystem>

#include <doctest.h>

#include "fepysr/benchmarks.hpp"
#include "fepysr/fmn.hpp"
#include "fepysr/rng.hpp"

using namespace fepysr;

namespace {

// Tiny configs keep the unit tests fast.
FmnConfig small_config(int depth = 2, std::uint64_t seed = 1) {
  FmnConfig c;
  c.depth = depth;
  c.units_per_op = 1;
  c.seed = seed;
  return c;
}

Dataset make_data(int n, int d, std::uint64_t seed, bool wide_domain = false) {
  Dataset ds;
  ds.X = Matrix(n, d);
  ds.y.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  double lo = wide_domain ? -3.0 : -1.0, hi = wide_domain ? 3.0 : 1.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.X(i, j) = rng.uniform(lo, hi);
    double x = ds.X(i, 0);
    ds.y[static_cast<std::size_t>(i)] = x * x + (d > 1 ? ds.X(i, 1) : 0.0);
  }
  for (int j = 0; j < d; ++j) ds.var_names.push_back("v" + std::to_string(j));
  return ds;
}

double total_loss(const FmnModel& m, const Matrix& X, std::span<const double> y) {
  ForwardCache c = fmn_forward(m, X);
  return fmn_loss(m, c, y).total;
}

std::vector<double>* weight_vector(FmnModel& m, int which, std::size_t li, std::size_t j) {
  if (which == 0) return &m.layers[li][j].w1;
  return &m.layers[li][j].w2;
}

}  // namespace

TEST_CASE("init: width recurrence and seeded determinism") {
  FmnConfig cfg = small_config(4, 7);
  cfg.units_per_op = 2;
  FmnModel m = fmn_init(cfg, 2);
  int expect = 2;
  for (int i = 0; i < cfg.depth; ++i) {
    CHECK(m.width(i) == expect);
    expect += 12;
  }
  CHECK(m.width(cfg.depth) == expect);
  CHECK(static_cast<int>(m.reg_weights.size()) == expect);

  FmnModel m2 = fmn_init(cfg, 2);
  for (std::size_t li = 0; li < m.layers.size(); ++li)
    for (std::size_t j = 0; j < m.layers[li].size(); ++j) {
      CHECK(m.layers[li][j].w1 == m2.layers[li][j].w1);
      CHECK(m.layers[li][j].w2 == m2.layers[li][j].w2);
    }
  CHECK(m.reg_weights == m2.reg_weights);
}

TEST_CASE("exp mask marks exactly the exp-output channels") {
  // Layer roster [square sin cos exp exp mul]: exp outputs land on channels
  // 5 and 6 of the width-8 boundary after layer 1 (d = 2).
  FmnConfig cfg;
  cfg.depth = 2;
  cfg.units_per_op = 1;
  cfg.fun_net = {HauOp::Square, HauOp::Sin, HauOp::Cos, HauOp::Exp, HauOp::Exp, HauOp::Mul};
  cfg.seed = 3;
  FmnModel m = fmn_init(cfg, 2);
  CHECK(m.width(1) == 8);

  auto mask = build_exp_mask(m);
  // Layer 1: no preceding exp outputs.
  for (const auto& unit_mask : mask[0])
    for (std::uint8_t f : unit_mask) CHECK(f == 0);
  // Layer 2 exp units: forbidden exactly {5, 6}.
  for (std::size_t j = 0; j < m.layers[1].size(); ++j) {
    const FmnUnit& u = m.layers[1][j];
    if (u.op == HauOp::Exp) {
      REQUIRE(mask[1][j].size() == 8);
      for (std::size_t h = 0; h < 8; ++h)
        CHECK(mask[1][j][h] == ((h == 5 || h == 6) ? 1 : 0));
      CHECK(u.w1[5] == 0.0);
      CHECK(u.w1[6] == 0.0);
    } else {
      CHECK(mask[1][j].empty());  // sin/cos/square/mul are unmasked
    }
  }
}

TEST_CASE("forward: hand-built single units") {
  // One square unit with W=[1,0] and regression [0,0,1]: x^2.
  FmnConfig cfg = small_config(1, 0);
  cfg.fun_net = {HauOp::Square};
  FmnModel m = fmn_init(cfg, 2);
  m.layers[0][0].w1 = {1.0, 0.0};
  m.reg_weights = {0.0, 0.0, 1.0};
  Matrix X(1, 2);
  X(0, 0) = 3.0;
  X(0, 1) = 5.0;
  ForwardCache c = fmn_forward(m, X);
  CHECK(c.yhat[0] == 9.0);
  CHECK(c.finite);

  // All-zero weights, sin unit: output sin(0) = 0.
  cfg.fun_net = {HauOp::Sin};
  FmnModel ms = fmn_init(cfg, 2);
  ms.layers[0][0].w1 = {0.0, 0.0};
  ms.reg_weights = {0.0, 0.0, 1.0};
  CHECK(fmn_forward(ms, X).yhat[0] == 0.0);

  // Add unit with W1=[1,0], W2=[0,1]: x + y.
  cfg.fun_net = {HauOp::Add};
  FmnModel ma = fmn_init(cfg, 2);
  ma.layers[0][0].w1 = {1.0, 0.0};
  ma.layers[0][0].w2 = {0.0, 1.0};
  ma.reg_weights = {0.0, 0.0, 1.0};
  Matrix X23(1, 2);
  X23(0, 0) = 2.0;
  X23(0, 1) = 3.0;
  CHECK(fmn_forward(ma, X23).yhat[0] == 5.0);
}

TEST_CASE("loss: term-by-term contracts") {
  FmnConfig cfg = small_config(1, 0);
  cfg.fun_net = {HauOp::Add};
  FmnModel m = fmn_init(cfg, 2);
  m.layers[0][0].w1 = {0.5, 0.0};
  m.layers[0][0].w2 = {0.5, 0.0};
  m.reg_weights = {0.0, 0.0, 1.0};
  Matrix X(1, 2);
  X(0, 0) = 2.0;
  X(0, 1) = 0.0;
  std::vector<double> y = {2.0};  // unit output = 0.5*2 + 0.5*2 = 2 = y
  ForwardCache c = fmn_forward(m, X);
  LossBreakdown lb = fmn_loss(m, c, y);
  CHECK(lb.l2 == 0.0);
  // Sum |w| = 0.5 + 0.5 + 1 = 2, lambda1 = 0.08 -> sparse = 0.16.
  CHECK(lb.sparse == doctest::Approx(0.16));
  // W1 = W2 != 0 -> cos = 1 -> contrast = lambda2 = 0.001.
  CHECK(lb.contrast == doctest::Approx(0.001));
  CHECK(lb.total == doctest::Approx(lb.l2 + lb.sparse + lb.contrast));
}

TEST_CASE("backward: gradients match central finite differences") {
  // Mixed roster exercising all six operator types at depth 2.
  FmnConfig cfg = small_config(2, 5);
  FmnModel m = fmn_init(cfg, 2);
  Dataset ds = make_data(8, 2, 99);

  ForwardCache cache = fmn_forward(m, ds.X);
  REQUIRE(cache.finite);
  Gradients g = fmn_backward(m, cache, ds.y);
  REQUIRE(g.finite);

  const double h = 1e-6;
  double max_rel = 0.0;
  auto check_vec = [&](std::vector<double>& w, const std::vector<double>& gw,
                       const std::vector<std::uint8_t>& forbidden) {
    for (std::size_t c = 0; c < w.size(); ++c) {
      if (!forbidden.empty() && forbidden[c]) {
        CHECK(gw[c] == 0.0);
        continue;
      }
      if (w[c] == 0.0) continue;  // |w| kink: sign subgradient is one-sided here
      double keep = w[c];
      w[c] = keep + h;
      double fp = total_loss(m, ds.X, ds.y);
      w[c] = keep - h;
      double fm = total_loss(m, ds.X, ds.y);
      w[c] = keep;
      double fd = (fp - fm) / (2.0 * h);
      double rel = std::fabs(fd - gw[c]) / std::max(1.0, std::fabs(fd));
      max_rel = std::max(max_rel, rel);
    }
  };
  for (std::size_t li = 0; li < m.layers.size(); ++li)
    for (std::size_t j = 0; j < m.layers[li].size(); ++j) {
      check_vec(m.layers[li][j].w1, g.g1[li][j], m.layers[li][j].forbidden);
      if (!m.layers[li][j].w2.empty()) check_vec(m.layers[li][j].w2, g.g2[li][j], {});
    }
  check_vec(m.reg_weights, g.greg, {});
  CHECK(max_rel < 1e-4);
}

TEST_CASE("step: normalization contract per mode") {
  FmnConfig cfg = small_config(1, 2);
  cfg.fun_net = {HauOp::Sin};
  cfg.norm_mode = NormMode::PerUnit;
  FmnModel m = fmn_init(cfg, 2);
  std::vector<double> before = m.layers[0][0].w1;

  Gradients g;
  g.g1 = {{{6.0, 8.0}}};  // norm 10
  g.g2 = {{{}}};
  g.greg = {0.0, 0.0, 0.0};
  fmn_step(m, g, 0.5, 1e-8);
  double dx = m.layers[0][0].w1[0] - before[0];
  double dy = m.layers[0][0].w1[1] - before[1];
  CHECK(std::sqrt(dx * dx + dy * dy) == doctest::Approx(0.5).epsilon(1e-6));

  // Zero gradient: no change (0 / (0 + eps) = 0).
  FmnModel m2 = fmn_init(cfg, 2);
  std::vector<double> keep = m2.layers[0][0].w1;
  Gradients gz;
  gz.g1 = {{{0.0, 0.0}}};
  gz.g2 = {{{}}};
  gz.greg = {0.0, 0.0, 0.0};
  fmn_step(m2, gz, 0.5, 1e-8);
  CHECK(m2.layers[0][0].w1 == keep);
}

TEST_CASE("step: masked entries stay exactly zero through training") {
  FmnConfig cfg = small_config(3, 11);
  FmnModel m = fmn_init(cfg, 2);
  Dataset ds = make_data(40, 2, 4);
  for (int it = 0; it < 25; ++it) {
    ForwardCache c = fmn_forward(m, ds.X);
    REQUIRE(c.finite);
    Gradients g = fmn_backward(m, c, ds.y);
    REQUIRE(g.finite);
    fmn_step(m, g, 0.5, 1e-8);
  }
  int masked = 0;
  for (const auto& layer : m.layers)
    for (const FmnUnit& u : layer)
      for (std::size_t h = 0; h < u.forbidden.size(); ++h)
        if (u.forbidden[h]) {
          CHECK(u.w1[h] == 0.0);
          ++masked;
        }
  CHECK(masked > 0);
}

TEST_CASE("train: loss decreases on a square target") {
  FmnConfig cfg = small_config(1, 21);
  cfg.epochs = 100;
  cfg.batch_size = 50;
  Dataset ds;  // y = x^2 on U(-1,1,100)
  ds.X = Matrix(100, 1);
  ds.y.resize(100);
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    ds.X(i, 0) = rng.uniform(-1.0, 1.0);
    ds.y[static_cast<std::size_t>(i)] = ds.X(i, 0) * ds.X(i, 0);
  }
  ds.var_names = {"x"};

  FmnModel init = fmn_init(cfg, 1);
  double initial_l2 = fmn_loss(init, fmn_forward(init, ds.X), ds.y).l2;
  TrainResult tr = fmn_train(cfg, ds);
  CHECK(tr.model.trained);
  CHECK(static_cast<int>(tr.trace.epochs.size()) == cfg.epochs);
  CHECK(tr.trace.epochs.back().l2 < initial_l2);
  for (const LossBreakdown& lb : tr.trace.epochs)
    CHECK(lb.total ==
          doctest::Approx(lb.l2 + lb.sparse + lb.contrast).epsilon(1e-12));
}

TEST_CASE("train: zero epochs returns the init model with an empty trace") {
  FmnConfig cfg = small_config(2, 8);
  cfg.epochs = 0;
  Dataset ds = make_data(20, 2, 6);
  TrainResult tr = fmn_train(cfg, ds);
  CHECK(tr.trace.epochs.empty());
  FmnModel init = fmn_init(cfg, 2);
  for (std::size_t li = 0; li < init.layers.size(); ++li)
    for (std::size_t j = 0; j < init.layers[li].size(); ++j)
      CHECK(tr.model.layers[li][j].w1 == init.layers[li][j].w1);
}

TEST_CASE("train: equal seeds give bit-identical traces") {
  FmnConfig cfg = small_config(2, 77);
  cfg.epochs = 12;
  Dataset ds = make_data(60, 2, 13);
  TrainResult a = fmn_train(cfg, ds);
  TrainResult b = fmn_train(cfg, ds);
  REQUIRE(a.trace.epochs.size() == b.trace.epochs.size());
  for (std::size_t i = 0; i < a.trace.epochs.size(); ++i) {
    CHECK(a.trace.epochs[i].total == b.trace.epochs[i].total);
    CHECK(a.trace.epochs[i].l2 == b.trace.epochs[i].l2);
  }
}

TEST_CASE("contrastive pressure separates branch weights") {
  // Single add-unit model: lambda2 on vs off, averaged over 20 seeds.
  Dataset ds;
  ds.X = Matrix(60, 2);
  ds.y.resize(60);
  Rng rng(5150);
  for (int i = 0; i < 60; ++i) {
    ds.X(i, 0) = rng.uniform(-1.0, 1.0);
    ds.X(i, 1) = rng.uniform(-1.0, 1.0);
    ds.y[static_cast<std::size_t>(i)] = ds.X(i, 0) + ds.X(i, 1);
  }
  ds.var_names = {"x", "y"};

  auto mean_abs_cos = [&](double lambda2) {
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      FmnConfig cfg = small_config(1, seed);
      cfg.fun_net = {HauOp::Add};
      cfg.epochs = 60;
      cfg.lambda2 = lambda2;
      TrainResult tr = fmn_train(cfg, ds);
      const FmnUnit& u = tr.model.layers[0][0];
      double n1 = 0, n2 = 0, dot = 0;
      for (std::size_t c = 0; c < u.w1.size(); ++c) {
        n1 += u.w1[c] * u.w1[c];
        n2 += u.w2[c] * u.w2[c];
        dot += u.w1[c] * u.w2[c];
      }
      acc += std::fabs(dot / (std::sqrt(n1) * std::sqrt(n2) + 1e-12));
    }
    return acc / 20.0;
  };
  CHECK(mean_abs_cos(0.001) < mean_abs_cos(0.0));
}

TEST_CASE("snapshot serialization round trip") {
  FmnConfig cfg = small_config(3, 123);
  cfg.norm_mode = NormMode::PerUnit;
  FmnModel m = fmn_init(cfg, 2);
  m.trained = true;
  auto bytes = serialize_model(m);
  FmnModel back = deserialize_model(bytes);
  CHECK(back.arity == m.arity);
  CHECK(back.trained == m.trained);
  CHECK(back.config.depth == m.config.depth);
  CHECK(back.config.norm_mode == m.config.norm_mode);
  CHECK(back.reg_weights == m.reg_weights);
  for (std::size_t li = 0; li < m.layers.size(); ++li)
    for (std::size_t j = 0; j < m.layers[li].size(); ++j) {
      CHECK(back.layers[li][j].op == m.layers[li][j].op);
      CHECK(back.layers[li][j].w1 == m.layers[li][j].w1);
      CHECK(back.layers[li][j].w2 == m.layers[li][j].w2);
      CHECK(back.layers[li][j].forbidden == m.layers[li][j].forbidden);
    }

  auto path = std::filesystem::temp_directory_path() / "fepysr_model_test.bin";
  save_model(m, path);
  FmnModel loaded = load_model(path);
  CHECK(loaded.reg_weights == m.reg_weights);
  std::filesystem::remove(path);
}

TEST_CASE("config validation rejects bad values") {
  FmnConfig c;
  c.depth = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = FmnConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = FmnConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
