#include "fepysr/fmn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "fepysr/rng.hpp"

namespace fepysr {

const char* name(HauOp op) {
  switch (op) {
    case HauOp::Square: return "square";
    case HauOp::Sin: return "sin";
    case HauOp::Cos: return "cos";
    case HauOp::Exp: return "exp";
    case HauOp::Add: return "add";
    case HauOp::Mul: return "mul";
  }
  return "?";
}

HauOp hau_from_name(const std::string& s) {
  if (s == "square") return HauOp::Square;
  if (s == "sin") return HauOp::Sin;
  if (s == "cos") return HauOp::Cos;
  if (s == "exp") return HauOp::Exp;
  if (s == "add") return HauOp::Add;
  if (s == "mul") return HauOp::Mul;
  throw std::invalid_argument("unknown HAU op '" + s + "'");
}

void FmnConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be > 0");
  if (lambda1 < 0 || lambda2 < 0) throw std::invalid_argument("lambda coefficients must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (units_per_op < 1) throw std::invalid_argument("units_per_op must be >= 1");
  if (fun_net.empty()) throw std::invalid_argument("fun-net must not be empty");
}

std::vector<std::vector<HauOp>> FmnConfig::roster() const {
  std::vector<HauOp> layer;
  for (HauOp op : fun_net)
    for (int k = 0; k < units_per_op; ++k) layer.push_back(op);
  return std::vector<std::vector<HauOp>>(static_cast<std::size_t>(depth), layer);
}

int FmnModel::width(int layers_done) const {
  int w = arity;
  for (int i = 0; i < layers_done; ++i) w += static_cast<int>(layers[static_cast<std::size_t>(i)].size());
  return w;
}

FmnModel fmn_init(const FmnConfig& cfg, int arity) {
  cfg.validate();
  if (arity < 1) throw std::invalid_argument("arity must be >= 1");
  FmnModel m;
  m.arity = arity;
  m.config = cfg;
  Rng rng(cfg.seed);
  int w = arity;
  for (const auto& ops : cfg.roster()) {
    std::vector<FmnUnit> layer;
    double scale = 1.0 / std::sqrt(static_cast<double>(w));
    for (HauOp op : ops) {
      FmnUnit u;
      u.op = op;
      u.w1.resize(static_cast<std::size_t>(w));
      for (double& v : u.w1) v = rng.uniform(-scale, scale);
      if (is_binary(op)) {
        u.w2.resize(static_cast<std::size_t>(w));
        for (double& v : u.w2) v = rng.uniform(-scale, scale);
      }
      layer.push_back(std::move(u));
    }
    w += static_cast<int>(layer.size());
    m.layers.push_back(std::move(layer));
  }
  m.reg_weights.resize(static_cast<std::size_t>(w));
  double scale = 1.0 / std::sqrt(static_cast<double>(w));
  for (double& v : m.reg_weights) v = rng.uniform(-scale, scale);
  apply_exp_mask(m);
  return m;
}

std::vector<std::vector<std::vector<std::uint8_t>>> build_exp_mask(const FmnModel& m) {
  std::vector<std::vector<std::vector<std::uint8_t>>> mask;
  std::vector<std::uint8_t> channel_is_exp(static_cast<std::size_t>(m.arity), 0);
  for (const auto& layer : m.layers) {
    std::vector<std::vector<std::uint8_t>> layer_mask;
    for (const FmnUnit& u : layer) {
      if (u.op == HauOp::Exp) {
        layer_mask.push_back(channel_is_exp);  // forbidden where input is an exp output
      } else {
        layer_mask.emplace_back();
      }
    }
    mask.push_back(std::move(layer_mask));
    for (const FmnUnit& u : layer) channel_is_exp.push_back(u.op == HauOp::Exp ? 1 : 0);
  }
  return mask;
}

void apply_exp_mask(FmnModel& m) {
  auto mask = build_exp_mask(m);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    for (std::size_t j = 0; j < m.layers[i].size(); ++j) {
      FmnUnit& u = m.layers[i][j];
      u.forbidden = mask[i][j];
      for (std::size_t h = 0; h < u.forbidden.size(); ++h)
        if (u.forbidden[h]) u.w1[h] = 0.0;
    }
  }
}

namespace {

std::vector<double> mat_vec(const Matrix& Y, const std::vector<double>& w) {
  std::vector<double> out(static_cast<std::size_t>(Y.rows), 0.0);
  for (int i = 0; i < Y.rows; ++i) {
    const double* row = Y.a.data() + static_cast<std::size_t>(i) * Y.cols;
    double acc = 0.0;
    for (int j = 0; j < Y.cols; ++j) acc += row[j] * w[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double activate(HauOp op, double z) {
  switch (op) {
    case HauOp::Square: return z * z;
    case HauOp::Sin: return std::sin(z);
    case HauOp::Cos: return std::cos(z);
    case HauOp::Exp: return std::exp(z);
    default: return z;  // binary ops never reach here
  }
}

double activate_grad(HauOp op, double z) {
  switch (op) {
    case HauOp::Square: return 2.0 * z;
    case HauOp::Sin: return std::cos(z);
    case HauOp::Cos: return -std::sin(z);
    case HauOp::Exp: return std::exp(z);
    default: return 1.0;
  }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

ForwardCache fmn_forward(const FmnModel& m, const Matrix& X) {
  if (X.cols != m.arity) throw std::invalid_argument("input arity mismatch");
  ForwardCache c;
  c.ys.push_back(X);
  c.z1.resize(m.layers.size());
  c.z2.resize(m.layers.size());
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Matrix& Y = c.ys.back();
    const auto& layer = m.layers[li];
    Matrix next(Y.rows, Y.cols + static_cast<int>(layer.size()));
    for (int i = 0; i < Y.rows; ++i)
      std::copy(Y.row(i).begin(), Y.row(i).end(), next.row(i).begin());
    for (std::size_t j = 0; j < layer.size(); ++j) {
      const FmnUnit& u = layer[j];
      std::vector<double> z1 = mat_vec(Y, u.w1);
      std::vector<double> out(static_cast<std::size_t>(Y.rows));
      if (is_binary(u.op)) {
        std::vector<double> z2 = mat_vec(Y, u.w2);
        for (int i = 0; i < Y.rows; ++i) {
          double a = u.op == HauOp::Add ? z1[static_cast<std::size_t>(i)] + z2[static_cast<std::size_t>(i)]
                                        : z1[static_cast<std::size_t>(i)] * z2[static_cast<std::size_t>(i)];
          out[static_cast<std::size_t>(i)] = a;
        }
        c.z2[li].push_back(std::move(z2));
      } else {
        for (int i = 0; i < Y.rows; ++i)
          out[static_cast<std::size_t>(i)] = activate(u.op, z1[static_cast<std::size_t>(i)]);
        c.z2[li].emplace_back();
      }
      if (!all_finite(out)) c.finite = false;
      for (int i = 0; i < Y.rows; ++i) next(i, Y.cols + static_cast<int>(j)) = out[static_cast<std::size_t>(i)];
      c.z1[li].push_back(std::move(z1));
    }
    c.ys.push_back(std::move(next));
  }
  c.yhat = mat_vec(c.ys.back(), m.reg_weights);
  if (!all_finite(c.yhat)) c.finite = false;
  return c;
}

LossBreakdown fmn_loss(const FmnModel& m, const ForwardCache& cache, std::span<const double> y) {
  LossBreakdown lb;
  auto n = static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = cache.yhat[i] - y[i];
    lb.l2 += d * d;
  }
  lb.l2 /= n;

  double abs_sum = 0.0;
  for (const auto& layer : m.layers) {
    for (const FmnUnit& u : layer) {
      for (double w : u.w1) abs_sum += std::fabs(w);
      for (double w : u.w2) abs_sum += std::fabs(w);
    }
  }
  for (double w : m.reg_weights) abs_sum += std::fabs(w);
  lb.sparse = m.config.lambda1 * abs_sum;

  double cos_sum = 0.0;
  for (const auto& layer : m.layers) {
    for (const FmnUnit& u : layer) {
      if (!is_binary(u.op)) continue;
      double n1 = norm2(u.w1), n2 = norm2(u.w2);
      if (n1 < m.config.epsilon || n2 < m.config.epsilon) continue;
      double dot = std::inner_product(u.w1.begin(), u.w1.end(), u.w2.begin(), 0.0);
      cos_sum += dot / (n1 * n2);
    }
  }
  lb.contrast = m.config.lambda2 * cos_sum;
  lb.total = lb.l2 + lb.sparse + lb.contrast;
  return lb;
}

Gradients fmn_backward(const FmnModel& m, const ForwardCache& cache, std::span<const double> y) {
  Gradients g;
  const std::size_t L = m.layers.size();
  g.g1.resize(L);
  g.g2.resize(L);

  auto n = static_cast<int>(y.size());
  std::vector<double> dyhat(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    dyhat[static_cast<std::size_t>(i)] = 2.0 / n * (cache.yhat[static_cast<std::size_t>(i)] - y[i]);

  const Matrix& YL = cache.ys.back();
  g.greg.resize(m.reg_weights.size());
  for (std::size_t c = 0; c < m.reg_weights.size(); ++c) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += YL(i, static_cast<int>(c)) * dyhat[static_cast<std::size_t>(i)];
    g.greg[c] = acc + m.config.lambda1 * sign(m.reg_weights[c]);
  }

  // dL2/dY at the current layer boundary, peeled backwards.
  Matrix G(n, YL.cols);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < YL.cols; ++c)
      G(i, c) = dyhat[static_cast<std::size_t>(i)] * m.reg_weights[static_cast<std::size_t>(c)];

  for (std::size_t li = L; li-- > 0;) {
    const Matrix& Yin = cache.ys[li];
    const auto& layer = m.layers[li];
    Matrix Gprev(n, Yin.cols);
    for (int i = 0; i < n; ++i)
      std::copy(G.row(i).begin(), G.row(i).begin() + Yin.cols, Gprev.row(i).begin());

    g.g1[li].resize(layer.size());
    g.g2[li].resize(layer.size());
    for (std::size_t j = 0; j < layer.size(); ++j) {
      const FmnUnit& u = layer[j];
      const std::vector<double>& z1 = cache.z1[li][j];
      int col = Yin.cols + static_cast<int>(j);

      auto accumulate = [&](const std::vector<double>& dz, const std::vector<double>& w,
                            std::vector<double>& gw) {
        gw.resize(w.size());
        for (std::size_t c = 0; c < w.size(); ++c) {
          double acc = 0.0;
          for (int i = 0; i < n; ++i) acc += Yin(i, static_cast<int>(c)) * dz[static_cast<std::size_t>(i)];
          gw[c] = acc + m.config.lambda1 * sign(w[c]);
        }
        for (int i = 0; i < n; ++i) {
          double dzi = dz[static_cast<std::size_t>(i)];
          double* grow = Gprev.a.data() + static_cast<std::size_t>(i) * Gprev.cols;
          for (std::size_t c = 0; c < w.size(); ++c) grow[c] += dzi * w[c];
        }
      };

      if (is_binary(u.op)) {
        const std::vector<double>& z2 = cache.z2[li][j];
        std::vector<double> d1(static_cast<std::size_t>(n)), d2(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          double up = G(i, col);
          if (u.op == HauOp::Add) {
            d1[static_cast<std::size_t>(i)] = up;
            d2[static_cast<std::size_t>(i)] = up;
          } else {
            d1[static_cast<std::size_t>(i)] = up * z2[static_cast<std::size_t>(i)];
            d2[static_cast<std::size_t>(i)] = up * z1[static_cast<std::size_t>(i)];
          }
        }
        accumulate(d1, u.w1, g.g1[li][j]);
        accumulate(d2, u.w2, g.g2[li][j]);
        // Contrastive term: d/dw1 cos(w1,w2) = w2/(|w1||w2|) - cos * w1/|w1|^2.
        double n1 = norm2(u.w1), n2 = norm2(u.w2);
        if (n1 >= m.config.epsilon && n2 >= m.config.epsilon) {
          double dot = std::inner_product(u.w1.begin(), u.w1.end(), u.w2.begin(), 0.0);
          double cosv = dot / (n1 * n2);
          for (std::size_t c = 0; c < u.w1.size(); ++c) {
            g.g1[li][j][c] += m.config.lambda2 * (u.w2[c] / (n1 * n2) - cosv * u.w1[c] / (n1 * n1));
            g.g2[li][j][c] += m.config.lambda2 * (u.w1[c] / (n1 * n2) - cosv * u.w2[c] / (n2 * n2));
          }
        }
      } else {
        std::vector<double> dz(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
          dz[static_cast<std::size_t>(i)] = G(i, col) * activate_grad(u.op, z1[static_cast<std::size_t>(i)]);
        accumulate(dz, u.w1, g.g1[li][j]);
        for (std::size_t h = 0; h < u.forbidden.size(); ++h)
          if (u.forbidden[h]) g.g1[li][j][h] = 0.0;  // mask contract
      }
      if (!all_finite(g.g1[li][j]) || !all_finite(g.g2[li][j])) g.finite = false;
    }
    G = std::move(Gprev);
  }
  if (!all_finite(g.greg)) g.finite = false;
  return g;
}

void fmn_step(FmnModel& m, const Gradients& g, double eta, double eps) {
  auto update = [&](std::vector<double>& w, const std::vector<double>& gw, double scale) {
    for (std::size_t c = 0; c < w.size(); ++c) w[c] -= scale * gw[c];
  };
  if (m.config.norm_mode == NormMode::Global) {
    double sq = 0.0;
    for (const auto& layer : g.g1)
      for (const auto& gw : layer)
        for (double v : gw) sq += v * v;
    for (const auto& layer : g.g2)
      for (const auto& gw : layer)
        for (double v : gw) sq += v * v;
    for (double v : g.greg) sq += v * v;
    double scale = eta / (std::sqrt(sq) + eps);
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      for (std::size_t j = 0; j < m.layers[li].size(); ++j) {
        update(m.layers[li][j].w1, g.g1[li][j], scale);
        if (!g.g2[li][j].empty()) update(m.layers[li][j].w2, g.g2[li][j], scale);
      }
    }
    update(m.reg_weights, g.greg, scale);
  } else {
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      for (std::size_t j = 0; j < m.layers[li].size(); ++j) {
        update(m.layers[li][j].w1, g.g1[li][j], eta / (norm2(g.g1[li][j]) + eps));
        if (!g.g2[li][j].empty())
          update(m.layers[li][j].w2, g.g2[li][j], eta / (norm2(g.g2[li][j]) + eps));
      }
    }
    update(m.reg_weights, g.greg, eta / (norm2(g.greg) + eps));
  }
  // Forbidden entries stay exactly zero after every update.
  for (auto& layer : m.layers)
    for (FmnUnit& u : layer)
      for (std::size_t h = 0; h < u.forbidden.size(); ++h)
        if (u.forbidden[h]) u.w1[h] = 0.0;
}

TrainResult fmn_train(const FmnConfig& cfg, const Dataset& ds) {
  if (ds.rows() < 1) throw std::invalid_argument("empty dataset");
  TrainResult r;
  r.model = fmn_init(cfg, ds.dims());
  Rng shuffler(mix_seed(cfg.seed, 0x0DDB1ED5));
  std::vector<int> order(static_cast<std::size_t>(ds.rows()));
  for (int i = 0; i < ds.rows(); ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffler.shuffle(order);
    int updates = 0, batches = 0;
    for (int start = 0; start < ds.rows(); start += cfg.batch_size) {
      int len = std::min(cfg.batch_size, ds.rows() - start);
      Matrix bx(len, ds.dims());
      std::vector<double> by(static_cast<std::size_t>(len));
      for (int i = 0; i < len; ++i) {
        int src = order[static_cast<std::size_t>(start + i)];
        std::copy(ds.X.row(src).begin(), ds.X.row(src).end(), bx.row(i).begin());
        by[static_cast<std::size_t>(i)] = ds.y[static_cast<std::size_t>(src)];
      }
      ++batches;
      ForwardCache cache = fmn_forward(r.model, bx);
      if (!cache.finite) {
        ++r.trace.skipped_batches;
        continue;
      }
      Gradients g = fmn_backward(r.model, cache, by);
      if (!g.finite) {
        ++r.trace.skipped_batches;
        continue;
      }
      fmn_step(r.model, g, cfg.learning_rate, cfg.epsilon);
      ++updates;
    }
    if (batches > 0 && updates == 0)
      throw TrainAbort("every batch of epoch " + std::to_string(epoch) +
                       " was non-finite; training aborted");
    ForwardCache full = fmn_forward(r.model, ds.X);
    r.trace.epochs.push_back(fmn_loss(r.model, full, ds.y));
  }
  r.model.trained = true;
  return r;
}

// ---------------------------------------------------------------------------
// Snapshot serialization (fixed little-endian layout)

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f64(std::vector<std::uint8_t>& b, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  put_u64(b, u);
}

struct Reader {
  std::span<const std::uint8_t> b;
  std::size_t i = 0;
  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(b[i++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[i++]) << (8 * k);
    return v;
  }
  double f64() {
    std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, 8);
    return v;
  }
  void require(std::size_t k) {
    if (i + k > b.size()) throw std::runtime_error("truncated model snapshot");
  }
};

constexpr std::uint32_t kMagic = 0x314E4D46;  // "FMN1"

void put_vec(std::vector<std::uint8_t>& b, const std::vector<double>& v) {
  put_u32(b, static_cast<std::uint32_t>(v.size()));
  for (double x : v) put_f64(b, x);
}

std::vector<double> get_vec(Reader& r) {
  std::uint32_t n = r.u32();
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const FmnModel& m) {
  std::vector<std::uint8_t> b;
  put_u32(b, kMagic);
  put_u32(b, 1);  // version
  put_u32(b, static_cast<std::uint32_t>(m.arity));
  put_u32(b, static_cast<std::uint32_t>(m.trained ? 1 : 0));
  const FmnConfig& c = m.config;
  put_u32(b, static_cast<std::uint32_t>(c.depth));
  put_u32(b, static_cast<std::uint32_t>(c.units_per_op));
  put_u32(b, static_cast<std::uint32_t>(c.fun_net.size()));
  for (HauOp op : c.fun_net) put_u32(b, static_cast<std::uint32_t>(op));
  put_f64(b, c.learning_rate);
  put_u32(b, static_cast<std::uint32_t>(c.epochs));
  put_u32(b, static_cast<std::uint32_t>(c.batch_size));
  put_f64(b, c.lambda1);
  put_f64(b, c.lambda2);
  put_f64(b, c.epsilon);
  put_u32(b, static_cast<std::uint32_t>(c.norm_mode));
  put_u64(b, c.seed);
  put_u32(b, static_cast<std::uint32_t>(m.layers.size()));
  for (const auto& layer : m.layers) {
    put_u32(b, static_cast<std::uint32_t>(layer.size()));
    for (const FmnUnit& u : layer) {
      put_u32(b, static_cast<std::uint32_t>(u.op));
      put_vec(b, u.w1);
      put_vec(b, u.w2);
      put_u32(b, static_cast<std::uint32_t>(u.forbidden.size()));
      for (std::uint8_t f : u.forbidden) b.push_back(f);
    }
  }
  put_vec(b, m.reg_weights);
  return b;
}

FmnModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r{bytes};
  if (r.u32() != kMagic) throw std::runtime_error("bad model snapshot magic");
  if (r.u32() != 1) throw std::runtime_error("unsupported model snapshot version");
  FmnModel m;
  m.arity = static_cast<int>(r.u32());
  m.trained = r.u32() != 0;
  FmnConfig& c = m.config;
  c.depth = static_cast<int>(r.u32());
  c.units_per_op = static_cast<int>(r.u32());
  c.fun_net.resize(r.u32());
  for (auto& op : c.fun_net) op = static_cast<HauOp>(r.u32());
  c.learning_rate = r.f64();
  c.epochs = static_cast<int>(r.u32());
  c.batch_size = static_cast<int>(r.u32());
  c.lambda1 = r.f64();
  c.lambda2 = r.f64();
  c.epsilon = r.f64();
  c.norm_mode = static_cast<NormMode>(r.u32());
  c.seed = r.u64();
  m.layers.resize(r.u32());
  for (auto& layer : m.layers) {
    layer.resize(r.u32());
    for (FmnUnit& u : layer) {
      u.op = static_cast<HauOp>(r.u32());
      u.w1 = get_vec(r);
      u.w2 = get_vec(r);
      u.forbidden.resize(r.u32());
      for (auto& f : u.forbidden) {
        r.require(1);
        f = r.b[r.i++];
      }
    }
  }
  m.reg_weights = get_vec(r);
  return m;
}

void save_model(const FmnModel& m, const std::filesystem::path& path) {
  auto bytes = serialize_model(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

FmnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace fepysr
