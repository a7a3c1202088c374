#include "sdr/oos.hpp"

#include <cmath>

namespace sdr {

namespace {

// Symmetric solve with a single jitter retry: factorization failure adds
// 1e-10 * mean(diag) to the diagonal once, then gives up.
Matrix sym_solve(Matrix A, const Matrix& B, const char* what) {
  Eigen::LDLT<Matrix> fac(A);
  if (fac.info() == Eigen::Success) {
    Matrix X = fac.solve(B);
    if ((A * X - B).norm() <= 1e-6 * std::max(1.0, B.norm())) return X;
  }
  double jitter = 1e-10 * A.trace() / double(A.rows());
  A.diagonal().array() += std::max(jitter, 1e-300);
  fac.compute(A);
  if (fac.info() != Eigen::Success)
    throw numerical_error(std::string(what) +
                          ": linear system is singular beyond jitter");
  Matrix X = fac.solve(B);
  if (!X.allFinite())
    throw numerical_error(std::string(what) +
                          ": linear system is singular beyond jitter");
  return X;
}

}  // namespace

Matrix row_normalized(const Matrix& T) {
  Matrix That = T;
  for (Index i = 0; i < T.rows(); ++i) {
    double s = T.row(i).sum();
    if (s <= 0.0)
      throw data_error("row_normalized: plan row " + std::to_string(i) +
                       " has no mass");
    That.row(i) /= s;
  }
  return That;
}

Matrix solve_L(const Matrix& K, const Coupling& T, const Matrix& Z,
               double lambda, double mu, bool normalize_plan) {
  if (lambda <= 0.0) throw data_error("solve_L: lambda must be positive");
  if (K.rows() != K.cols() || K.rows() != T.T.rows())
    throw data_error("solve_L: K must be square over the training rows");
  if (T.T.cols() != Z.rows())
    throw data_error("solve_L: plan columns must match embedding rows");
  check_symmetric(K, "solve_L kernel");

  Matrix That = normalize_plan ? row_normalized(T.T) : T.T;
  Matrix A = mu * K;
  A.diagonal().array() += lambda;
  return sym_solve(std::move(A), mu * (That * Z), "solve_L");
}

Matrix solve_L_ridge(const Matrix& K, const Matrix& Z, double lambda) {
  if (lambda <= 0.0)
    throw data_error("solve_L_ridge: lambda must be positive");
  if (K.rows() != K.cols() || K.rows() != Z.rows())
    throw data_error("solve_L_ridge: K must be square over embedding rows");
  check_symmetric(K, "solve_L_ridge kernel");

  Matrix A = K;
  A.diagonal().array() += lambda;
  return sym_solve(std::move(A), Z, "solve_L_ridge");
}

Matrix soft_update(const Matrix& Z, const Matrix& K, const Matrix& L,
                   double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw data_error("soft_update: beta must lie in [0, 1]");
  if (K.rows() != Z.rows() || K.cols() != L.rows() || L.cols() != Z.cols())
    throw data_error("soft_update: shape mismatch");
  if (beta == 0.0) return Z;
  return (1.0 - beta) * Z + beta * (K * L);
}

Matrix soft_update(const Matrix& Z, const Matrix& K, const Matrix& L,
                   double beta, const Matrix& That) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw data_error("soft_update: beta must lie in [0, 1]");
  if (That.rows() != K.rows() || That.cols() != Z.rows() ||
      K.cols() != L.rows() || L.cols() != Z.cols())
    throw data_error("soft_update: shape mismatch");
  if (beta == 0.0) return Z;
  Matrix A = beta * (That.transpose() * That);
  A.diagonal().array() += 1.0;
  Matrix B = Z + beta * (That.transpose() * (K * L));
  return sym_solve(std::move(A), B, "soft_update");
}

Matrix project(const OOSMap& map, const Matrix& X_new) {
  if (X_new.cols() != map.X_train.cols())
    throw data_error("project: feature dimension does not match training");
  return eval_kernel(map.kernel, X_new, map.X_train) * map.L;
}

}  // namespace sdr
