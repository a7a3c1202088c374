#pragma once

#include <utility>

#include "sdr/types.hpp"

namespace sdr {

/// Exact GP regressor with a zero mean function and an ARD squared
/// exponential kernel. Hyperparameters live on the log scale; the
/// factorization of K + noise I is cached at fit time.
struct GPModel {
  Vector log_lengthscales;  // one per embedding dimension
  double log_signal_variance = 0.0;
  double log_noise_variance = 0.0;

  Matrix Z_train;
  Vector y_train;

  Matrix chol;         // lower Cholesky factor of K + (noise + jitter) I
  Vector weights;      // (K + noise I)^{-1} y
  double jitter = 0.0;  // diagonal boost the factorization needed
  double lml = 0.0;     // training log marginal likelihood

  Vector lengthscales() const {
    return log_lengthscales.array().exp().matrix();
  }
  double signal_variance() const { return std::exp(log_signal_variance); }
  double noise_variance() const { return std::exp(log_noise_variance); }
};

struct GPOptions {
  double lr = 0.1;
  int max_steps = 100;
};

/// ARD kernel Gram matrix between rows of A and rows of B under packed
/// log-hyperparameters theta = [log lengthscales..., log signal var].
Matrix ard_kernel(const Vector& theta_kernel, const Matrix& A,
                  const Matrix& B);

struct LmlEval {
  double value = 0.0;
  Vector grad;  // d LML / d theta, theta = [log ls..., log sf2, log sn2]
};

/// Log marginal likelihood and its analytic gradient at theta. The
/// factorization climbs a jitter ladder 1e-8 -> 1e-4 before giving up.
LmlEval lml_value_and_grad(const Vector& theta, const Matrix& Z,
                           const Vector& y);

/// LML of the model's hyperparameters on the given data.
double log_marginal_likelihood(const GPModel& model, const Matrix& Z,
                               const Vector& y);

/// Maximizes the LML over log-hyperparameters with Adam, keeping the
/// best iterate seen (the returned LML never falls below the starting
/// point). Initial lengthscales are per-dimension standard deviations;
/// signal and noise variances start at var(y) and var(y)/10.
GPModel gp_fit(const Matrix& Z_train, const Vector& y_train,
               const GPOptions& opts);

/// Posterior mean and marginal variance (including the noise term) per
/// row of Z_star. Variances are clamped at zero; a clamp larger than
/// 1e-8 is reported on stderr.
std::pair<Vector, Vector> gp_predict(const GPModel& model,
                                     const Matrix& Z_star);

/// Average Gaussian predictive log density of y under (means, stds).
double mean_log_likelihood(const Vector& y, const Vector& means,
                           const Vector& stds);

}  // namespace sdr
