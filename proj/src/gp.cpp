#include "sdr/gp.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include "sdr/adam.hpp"

namespace sdr {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct Factorized {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Cholesky with a jitter ladder: try the matrix as given, then add
// 1e-8, 1e-7, ..., 1e-4 to the diagonal.
Factorized factorize(const Matrix& A, const char* what) {
  Factorized f;
  f.llt.compute(A);
  if (f.llt.info() == Eigen::Success) return f;
  for (double jitter = 1e-8; jitter <= 1.0000001e-4; jitter *= 10.0) {
    Matrix Aj = A;
    Aj.diagonal().array() += jitter;
    f.llt.compute(Aj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw numerical_error(std::string(what) +
                        ": covariance factorization failed beyond jitter");
}

void check_theta(const Vector& theta, Index p) {
  if (theta.size() != p + 2)
    throw data_error("gp: expected " + std::to_string(p + 2) +
                     " log-hyperparameters, got " +
                     std::to_string(theta.size()));
  require_finite(Matrix(theta), "gp hyperparameters");
}

}  // namespace

Matrix ard_kernel(const Vector& theta_kernel, const Matrix& A,
                  const Matrix& B) {
  const Index p = A.cols();
  if (B.cols() != p || theta_kernel.size() != p + 1)
    throw data_error("ard_kernel: dimension mismatch");
  Vector inv2 = (-2.0 * theta_kernel.head(p).array()).exp();  // 1 / ls^2
  double sf2 = std::exp(theta_kernel(p));

  Matrix K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < B.rows(); ++j) {
      double q = 0.0;
      for (Index d = 0; d < p; ++d) {
        double diff = A(i, d) - B(j, d);
        q += diff * diff * inv2(d);
      }
      K(i, j) = sf2 * std::exp(-0.5 * q);
    }
  }
  return K;
}

LmlEval lml_value_and_grad(const Vector& theta, const Matrix& Z,
                           const Vector& y) {
  const Index n = Z.rows();
  const Index p = Z.cols();
  check_theta(theta, p);
  if (y.size() != n) throw data_error("gp: target length must match rows");

  Matrix K = ard_kernel(theta.head(p + 1), Z, Z);
  double sn2 = std::exp(theta(p + 1));
  Matrix A = K;
  A.diagonal().array() += sn2;

  Factorized f = factorize(A, "lml");
  Vector alpha = f.llt.solve(y);

  LmlEval out;
  out.value = -0.5 * y.dot(alpha) -
              f.llt.matrixLLT().diagonal().array().log().sum() -
              0.5 * double(n) * kLog2Pi;

  // dLML/dtheta_k = 0.5 tr((alpha alpha^T - A^{-1}) dA/dtheta_k)
  Matrix W = alpha * alpha.transpose() -
             f.llt.solve(Matrix::Identity(n, n));
  out.grad.resize(p + 2);
  Vector inv_ls2 = (-2.0 * theta.head(p).array()).exp();
  for (Index d = 0; d < p; ++d) {
    // dA/d(log ls_d) = K .* (z_id - z_jd)^2 / ls_d^2
    double acc = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        double diff = Z(i, d) - Z(j, d);
        acc += W(i, j) * K(i, j) * diff * diff * inv_ls2(d);
      }
    out.grad(d) = 0.5 * acc;
  }
  out.grad(p) = 0.5 * W.cwiseProduct(K).sum();  // dA/d(log sf2) = K
  out.grad(p + 1) = 0.5 * sn2 * W.trace();      // dA/d(log sn2) = sn2 I
  return out;
}

double log_marginal_likelihood(const GPModel& model, const Matrix& Z,
                               const Vector& y) {
  Vector theta(Z.cols() + 2);
  theta.head(Z.cols()) = model.log_lengthscales;
  theta(Z.cols()) = model.log_signal_variance;
  theta(Z.cols() + 1) = model.log_noise_variance;
  return lml_value_and_grad(theta, Z, y).value;
}

GPModel gp_fit(const Matrix& Z_train, const Vector& y_train,
               const GPOptions& opts) {
  const Index n = Z_train.rows();
  const Index p = Z_train.cols();
  if (n < 2) throw data_error("gp_fit: need at least two training points");
  if (y_train.size() != n)
    throw data_error("gp_fit: target length must match training rows");
  require_finite(Z_train, "gp_fit inputs");
  require_finite(Matrix(y_train), "gp_fit targets");

  Vector theta(p + 2);
  for (Index d = 0; d < p; ++d) {
    double mean = Z_train.col(d).mean();
    double sd =
        std::sqrt((Z_train.col(d).array() - mean).square().mean());
    theta(d) = std::log(std::max(sd, 1e-3));
  }
  double vy = (y_train.array() - y_train.mean()).square().mean();
  vy = std::max(vy, 1e-12);
  theta(p) = std::log(vy);
  theta(p + 1) = std::log(0.1 * vy);

  LmlEval eval;
  try {
    eval = lml_value_and_grad(theta, Z_train, y_train);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "gp_fit: marginal likelihood failed at init (" << e.what()
        << "); theta = [" << theta.transpose() << "]";
    throw numerical_error(msg.str());
  }
  if (!std::isfinite(eval.value)) {
    std::ostringstream msg;
    msg << "gp_fit: non-finite marginal likelihood at init; theta = ["
        << theta.transpose() << "]";
    throw numerical_error(msg.str());
  }

  Vector best_theta = theta;
  double best_lml = eval.value;

  AdamState adam = make_adam(p + 2, 1, opts.lr);
  Matrix params = theta;
  for (int step = 0; step < opts.max_steps; ++step) {
    // Adam minimizes, so feed the negated LML gradient.
    Matrix grad = -eval.grad;
    adam_step(adam, params, grad);
    try {
      eval = lml_value_and_grad(Vector(params), Z_train, y_train);
    } catch (const numerical_error&) {
      break;  // keep the best hyperparameters found so far
    }
    if (!std::isfinite(eval.value)) break;
    if (eval.value > best_lml) {
      best_lml = eval.value;
      best_theta = params;
    }
  }

  GPModel model;
  model.log_lengthscales = best_theta.head(p);
  model.log_signal_variance = best_theta(p);
  model.log_noise_variance = best_theta(p + 1);
  model.Z_train = Z_train;
  model.y_train = y_train;

  Matrix K = ard_kernel(best_theta.head(p + 1), Z_train, Z_train);
  Matrix A = K;
  A.diagonal().array() += model.noise_variance();
  Factorized f = factorize(A, "gp_fit");
  model.chol = f.llt.matrixL();
  model.weights = f.llt.solve(y_train);
  model.jitter = f.jitter;
  model.lml = best_lml;
  return model;
}

std::pair<Vector, Vector> gp_predict(const GPModel& model,
                                     const Matrix& Z_star) {
  const Index p = model.Z_train.cols();
  if (Z_star.cols() != p)
    throw data_error("gp_predict: embedding dimension mismatch");

  Vector theta_kernel(p + 1);
  theta_kernel.head(p) = model.log_lengthscales;
  theta_kernel(p) = model.log_signal_variance;

  Matrix Ks = ard_kernel(theta_kernel, Z_star, model.Z_train);
  Vector mean = Ks * model.weights;

  // var_i = sf2 + sn2 - || chol^{-1} k_i ||^2
  Matrix V = model.chol.triangularView<Eigen::Lower>().solve(
      Matrix(Ks.transpose()));
  double prior = model.signal_variance() + model.noise_variance();
  Vector var =
      (prior - V.colwise().squaredNorm().transpose().array()).matrix();

  double worst_clamp = 0.0;
  for (Index i = 0; i < var.size(); ++i) {
    if (var(i) < 0.0) {
      worst_clamp = std::max(worst_clamp, -var(i));
      var(i) = 0.0;
    }
  }
  if (worst_clamp > 1e-8)
    std::cerr << "gp_predict: clamped a variance of -" << worst_clamp
              << " to zero\n";
  return {std::move(mean), std::move(var)};
}

double mean_log_likelihood(const Vector& y, const Vector& means,
                           const Vector& stds) {
  if (y.size() != means.size() || y.size() != stds.size() || y.size() == 0)
    throw data_error("mean_log_likelihood: inputs must be equal-length");
  if (stds.minCoeff() <= 0.0)
    throw data_error("mean_log_likelihood: stds must be positive");
  double acc = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    double zscore = (y(i) - means(i)) / stds(i);
    acc += -std::log(stds(i)) - 0.5 * kLog2Pi - 0.5 * zscore * zscore;
  }
  return acc / double(y.size());
}

}  // namespace sdr
