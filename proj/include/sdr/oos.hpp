#pragma once

#include <optional>

#include "sdr/kernels.hpp"
#include "sdr/ot.hpp"
#include "sdr/types.hpp"

namespace sdr {

/// Rows rescaled to sum to one, turning a transport plan into the
/// barycentric assignment matrix used throughout the projection terms.
Matrix row_normalized(const Matrix& T);

/// Coefficients of the kernel map that regresses the plan-averaged
/// embeddings onto the RKHS of K:
///   L = (mu K + lambda I)^{-1} mu That Z,   That = row_normalized(T).
/// This is the stationary point of the K-weighted quadratic
///   mu/2 ||K L - That Z||_F^2 + lambda/2 tr(L^T K L),
/// whose gradient K (mu(KL - That Z) + lambda L) vanishes exactly.
/// Set normalize_plan = false to use the raw plan instead.
Matrix solve_L(const Matrix& K, const Coupling& T, const Matrix& Z,
               double lambda, double mu = 1.0, bool normalize_plan = true);

/// Kernel ridge solution (K + lambda I)^{-1} Z for the m = n case where
/// the assignment matrix drops out.
Matrix solve_L_ridge(const Matrix& K, const Matrix& Z, double lambda);

/// Pulls the embeddings toward their kernel reconstruction.
/// Without a plan (m = n): Z' = (1 - beta) Z + beta K L.
/// With a plan: the proximal point of beta/2 ||That Z' - K L||_F^2,
///   Z' = (I + beta That^T That)^{-1} (Z + beta That^T K L).
Matrix soft_update(const Matrix& Z, const Matrix& K, const Matrix& L,
                   double beta);
Matrix soft_update(const Matrix& Z, const Matrix& K, const Matrix& L,
                   double beta, const Matrix& That);

/// Immutable projection map for unseen points.
struct OOSMap {
  Matrix L;        // n x p coefficients
  Matrix X_train;  // inputs the kernel was fitted on (post-standardize)
  KernelSpec kernel;
  double lambda = 1e-2;
  double beta = 0.5;
  double mu = 1.0;
};

/// z(x) = K(x, X_train) L for every row of X_new.
Matrix project(const OOSMap& map, const Matrix& X_new);

}  // namespace sdr
