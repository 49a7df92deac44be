#include "fepysr/tyson.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fepysr/simplify.hpp"

namespace fepysr {

namespace {

struct State {
  double x1, x2;
};

State derivatives(const TysonConfig& c, double s, State st) {
  double a1 = std::exp(c.sigma * (s + c.a10 + c.a12 * st.x2));
  double b1 = std::exp(c.sigma * (c.b10 + c.b12 * st.x2));
  double a2 = std::exp(c.sigma * (c.a20 + c.a21 * st.x1));
  double b2 = std::exp(c.sigma * (c.b20 + c.b21 * st.x1));
  return {c.gamma1 * (a1 * (1.0 - st.x1) - b1 * st.x1) / (a1 + b1),
          c.gamma2 * (a2 * (1.0 - st.x2) - b2 * st.x2) / (a2 + b2)};
}

State rk4_step(const TysonConfig& c, double s, State st, double h) {
  State k1 = derivatives(c, s, st);
  State k2 = derivatives(c, s, {st.x1 + 0.5 * h * k1.x1, st.x2 + 0.5 * h * k1.x2});
  State k3 = derivatives(c, s, {st.x1 + 0.5 * h * k2.x1, st.x2 + 0.5 * h * k2.x2});
  State k4 = derivatives(c, s, {st.x1 + h * k3.x1, st.x2 + h * k3.x2});
  return {st.x1 + h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
          st.x2 + h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2)};
}

}  // namespace

Dataset tyson_generate(const TysonConfig& cfg) {
  if (cfg.schedule.empty()) throw std::invalid_argument("empty S-schedule");
  int total = 0;
  for (const TysonSegment& seg : cfg.schedule) {
    if (!(seg.duration > 0.0)) throw std::invalid_argument("segment durations must be > 0");
    if (seg.samples < 2) throw std::invalid_argument("segments need at least 2 samples");
    total += seg.samples;
  }

  Dataset ds;
  ds.var_names = {"S", "X1", "X2"};
  ds.benchmark = "Tyson-dX1";
  ds.X = Matrix(total, 3);
  ds.y.resize(static_cast<std::size_t>(total));

  State st{cfg.x1_init, cfg.x2_init};
  double t = 0.0;
  int row = 0;
  for (const TysonSegment& seg : cfg.schedule) {
    double h = cfg.step > 0.0 ? cfg.step : seg.duration / (50.0 * seg.samples);
    double sample_dt = seg.duration / seg.samples;
    int substeps = std::max(1, static_cast<int>(std::llround(sample_dt / h)));
    double hh = sample_dt / substeps;
    for (int k = 0; k < seg.samples; ++k) {
      ds.X(row, 0) = seg.s_value;
      ds.X(row, 1) = st.x1;
      ds.X(row, 2) = st.x2;
      ds.y[static_cast<std::size_t>(row)] = derivatives(cfg, seg.s_value, st).x1;
      ++row;
      for (int s = 0; s < substeps; ++s) {
        st = rk4_step(cfg, seg.s_value, st, hh);
        t += hh;
        if (!std::isfinite(st.x1) || !std::isfinite(st.x2))
          throw std::runtime_error("non-finite state at t=" + std::to_string(t));
      }
    }
  }
  return ds;
}

Expr tyson_dx1_truth(const TysonConfig& c) {
  Expr s = Expr::variable(0, "S");
  Expr x1 = Expr::variable(1, "X1");
  Expr x2 = Expr::variable(2, "X2");
  auto lin = [&](double c0, double cs, double c1v, double c2v) {
    Expr e = Expr::constant(c0);
    if (cs != 0.0) e = Expr::binary(BinaryOp::Add, e, Expr::binary(BinaryOp::Mul, Expr::constant(cs), s));
    if (c1v != 0.0)
      e = Expr::binary(BinaryOp::Add, e, Expr::binary(BinaryOp::Mul, Expr::constant(c1v), x1));
    if (c2v != 0.0)
      e = Expr::binary(BinaryOp::Add, e, Expr::binary(BinaryOp::Mul, Expr::constant(c2v), x2));
    return e;
  };
  Expr a1 = Expr::unary(UnaryOp::Exp,
                        Expr::binary(BinaryOp::Mul, Expr::constant(c.sigma), lin(c.a10, 1.0, 0.0, c.a12)));
  Expr b1 = Expr::unary(UnaryOp::Exp,
                        Expr::binary(BinaryOp::Mul, Expr::constant(c.sigma), lin(c.b10, 0.0, 0.0, c.b12)));
  Expr one_minus_x1 = Expr::binary(BinaryOp::Sub, Expr::constant(1.0), x1);
  Expr num = Expr::binary(BinaryOp::Sub, Expr::binary(BinaryOp::Mul, a1, one_minus_x1),
                          Expr::binary(BinaryOp::Mul, b1, x1));
  Expr den = Expr::binary(BinaryOp::Add, a1, b1);
  Expr rhs = Expr::binary(BinaryOp::Mul, Expr::constant(c.gamma1),
                          Expr::binary(BinaryOp::Div, num, den));
  return simplify(rhs);
}

}  // namespace fepysr
