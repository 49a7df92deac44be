#pragma once

#include <vector>

#include "fepysr/dataset.hpp"
#include "fepysr/expr.hpp"

namespace fepysr {

struct TysonSegment {
  double s_value;
  double duration;  // seconds
  int samples;
};

// Two-protein regulatory system driven by a piecewise-constant stimulus S.
// Rates are exponential in the states; states stay in [0,1] for the default
// parameterization.
struct TysonConfig {
  double sigma = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double a10 = -0.15, a12 = 0.0;
  double a20 = -0.15, a21 = 0.5;
  double b10 = -0.4, b12 = 1.0;
  double b20 = 0.0, b21 = 0.0;
  std::vector<TysonSegment> schedule = {{0.05, 20.0, 1000}, {0.5, 20.0, 1000}, {0.25, 20.0, 1000}};
  double x1_init = 0.0;
  double x2_init = 0.0;
  double step = 0.0;  // RK4 step; 0 selects duration / (50 * samples) per segment
};

// Rows are (S, X1, X2) at each sample instant; the target is dX1/dt evaluated
// from the closed-form right-hand side (not from differencing).
Dataset tyson_generate(const TysonConfig& cfg);

// The dX1/dt right-hand side as an expression over variables (S, X1, X2),
// with the configuration's parameter values folded in.
Expr tyson_dx1_truth(const TysonConfig& cfg);

}  // namespace fepysr
