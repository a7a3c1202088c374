#pragma once

#include <functional>
#include <vector>

#include "sdr/adam.hpp"
#include "sdr/kernels.hpp"
#include "sdr/ot.hpp"
#include "sdr/types.hpp"

namespace sdr {

/// How embedding-side pairwise structure is built for the GW term:
/// a jointly normalized Student-t affinity matched with an entropic
/// affinity on the input side, or raw squared distances on both sides.
enum class SimilarityMode { affinity, sq_dist };

/// Coupling-induced target kernel on prototypes, T^T K_Y T.
Matrix projected_target_kernel(const Matrix& K_Y, const Matrix& T);

/// Centered kernel alignment <HK1H, HK2H> / (||HK1H|| ||HK2H||).
/// Ranges over [0, 1] for PSD kernels; raises numerical_error when a
/// centered kernel vanishes (constant kernel, degenerate input).
double cka(const Matrix& K1, const Matrix& K2);

/// Embedding objective with the plan held fixed:
///   alpha * GW(C, C(Z); T) - eta * CKA(K_Z(Z), T^T K_Y T).
/// The supervised transport term does not depend on Z and is excluded.
/// C's tag must match the requested similarity mode.
double z_objective(const Matrix& Z, const Coupling& T,
                   const SimilarityMatrix& C, const Matrix& K_Y,
                   const KernelSpec& z_kernel, SimilarityMode mode,
                   double alpha, double eta);

/// Analytic gradient of z_objective in Z. Chains through the Student-t
/// (or raw squared-distance) construction for the GW part and through
/// the embedding kernel for the CKA part. Columns sum to zero: the
/// objective only sees pairwise differences.
Matrix z_gradient(const Matrix& Z, const Coupling& T,
                  const SimilarityMatrix& C, const Matrix& K_Y,
                  const KernelSpec& z_kernel, SimilarityMode mode,
                  double alpha, double eta);

struct ZLoopOptions {
  double lr = 1e-3;
  int max_steps = 1000;
  // Stop when the objective changes by less than tol (relative) over
  // a trailing window of steps.
  double tol = 1e-7;
  int window = 10;
};

struct EmbeddingState {
  Matrix Z;                   // best-objective iterate seen
  std::vector<double> trace;  // objective after every Adam step
  double best_objective = 0.0;
};

/// Adam descent on z_objective from Z0. Heavy T-dependent quantities
/// (the cross term T^T C T, target marginal, centered target kernel)
/// are computed once up front, so each step costs O(m^2 (p + 1)).
/// Returns the lowest-objective iterate, never worse than Z0.
EmbeddingState run_z_loop(const Matrix& Z0, const Coupling& T,
                          const SimilarityMatrix& C, const Matrix& K_Y,
                          const KernelSpec& z_kernel, SimilarityMode mode,
                          double alpha, double eta, const ZLoopOptions& opts);

/// Same loop driven by an arbitrary objective/gradient pair; the SDR
/// objective above is one binding. Exposed so optimizer behavior can be
/// exercised on closed-form surrogates.
EmbeddingState run_z_loop_custom(
    const Matrix& Z0, const std::function<double(const Matrix&)>& objective,
    const std::function<Matrix(const Matrix&)>& gradient,
    const ZLoopOptions& opts);

}  // namespace sdr
