#include "sdr/adam.hpp"

#include <cmath>

namespace sdr {

AdamState make_adam(Index rows, Index cols, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = Matrix::Zero(rows, cols);
  s.v = Matrix::Zero(rows, cols);
  return s;
}

void adam_step(AdamState& state, Matrix& params, const Matrix& grad) {
  if (grad.rows() != params.rows() || grad.cols() != params.cols())
    throw data_error("adam_step: gradient shape does not match parameters");
  require_finite(grad, "adam_step gradient");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v +
            (1.0 - state.beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  Matrix mhat = state.m / c1;
  Matrix vhat = state.v / c2;
  params.array() -= state.lr * mhat.array() / (vhat.array().sqrt() + state.eps);
}

}  // namespace sdr
