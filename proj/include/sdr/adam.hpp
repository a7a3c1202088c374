#pragma once

#include "sdr/types.hpp"

namespace sdr {

/// Adam with the standard bias correction. The very first update moves
/// every coordinate by about lr regardless of gradient magnitude, which
/// makes the step size meaningful across objectives of very different
/// scales.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Matrix m, v;
  long t = 0;
};

AdamState make_adam(Index rows, Index cols, double lr);

/// One descent step in place: params -= lr * mhat / (sqrt(vhat) + eps).
void adam_step(AdamState& state, Matrix& params, const Matrix& grad);

}  // namespace sdr
