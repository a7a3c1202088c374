#pragma once

#include <vector>

#include "sdr/kernels.hpp"
#include "sdr/types.hpp"

namespace sdr {

/// Transport plan between n source points and m target prototypes. Only
/// the source marginal is prescribed: admissible plans satisfy T >= 0
/// and T 1 = h_source, while the target marginal h_Z = T^T 1 is free.
struct Coupling {
  Matrix T;         // n x m
  Vector h_source;  // length n, nonnegative, sums to 1

  Vector target_marginal() const { return T.colwise().sum(); }
};

/// Throws unless T is entrywise nonnegative with row sums equal to
/// h_source within tol.
void check_coupling(const Coupling& c, double tol = 1e-8);

/// Convex generator for the prototype (barycenter) subproblem.
///   l2           phi(u) = 0.5 ||u||^2
///   neg_entropy  phi(u) = sum_k u_k log u_k - u_k
enum class BregmanGenerator { l2, neg_entropy };

/// primal: g_j minimizes sum_i T_ij D_phi(y_i, g); the weighted mean.
/// dual:   g_j minimizes sum_i T_ij D_phi(g, y_i); the mirror average
///         (inverse gradient map of the averaged gradients).
enum class PrototypeForm { primal, dual };

enum class SupervisedLossKind { squared, modified_cross_entropy };

struct PrototypeTargets {
  Matrix G;                          // m x c, one prototype per column of T
  std::vector<Index> empty_columns;  // zero-mass columns, filled with the
                                     // global mean of Y
};

/// Closed-form prototypes for every column of the plan. For l2 both
/// forms coincide with the weighted arithmetic mean. For neg_entropy the
/// primal form is the weighted mean (the minimizer matched with the
/// modified cross-entropy loss) and the dual form is the weighted
/// geometric mean, which requires strictly positive Y.
PrototypeTargets prototype_targets(const Matrix& T, const Matrix& Y,
                                   BregmanGenerator gen, PrototypeForm form);

/// Pointwise supervised loss between a target row y and a prototype g.
///   squared                 0.5 ||y - g||^2
///   modified_cross_entropy  sum_k y_k log(y_k / g_k) + g_k - y_k,
///                           with 0 log 0 = 0; needs y >= 0 and g > 0.
double supervised_loss(const Vector& y, const Vector& g,
                       SupervisedLossKind kind);

/// Generator paired with a supervised loss: squared <-> l2, modified
/// cross-entropy <-> neg_entropy with the primal (mean) prototypes.
BregmanGenerator paired_generator(SupervisedLossKind kind);

/// sum_ij T_ij L(y_i, g_j) with the prototypes implied by the loss
/// pairing. Terms with T_ij = 0 contribute nothing, which keeps the
/// cross-entropy barrier out of unused pairs.
double supervised_cost(const Coupling& c, const Matrix& Y,
                       SupervisedLossKind kind);
double supervised_cost_at(const Coupling& c, const Matrix& Y, const Matrix& G,
                          SupervisedLossKind kind);

/// Gromov-Wasserstein discrepancy with squared loss,
///   sum_ijkl (C_ij - Cbar_kl)^2 T_ik T_jl,
/// computed through the O(n^2 m + n m^2) factorization. Both similarity
/// matrices must be symmetric.
double gw_cost(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
               const Coupling& c);

/// Gradient of gw_cost in the plan, 2 * (L(C, Cbar) tensor T), same
/// factorized complexity.
Matrix gw_grad_T(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
                 const Coupling& c);

/// Gradient of the barycentric-supervised objective
///   (1-alpha) sum_ij L_s(y_i, g*_j(T)) T_ij + alpha GW(T)
/// at the envelope point: prototypes are re-solved for T and then held
/// fixed, so the supervised block is simply the loss table L_s(y_i, g*_j).
Matrix srbsfgw_gradient(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
                        const Matrix& Y, const Coupling& c, double alpha,
                        SupervisedLossKind loss);

/// Linear minimization oracle over {T >= 0 : T 1 = h}: all of row i's
/// mass goes to the column with the smallest gradient entry, ties to the
/// smallest index.
Matrix semi_relaxed_lmo(const Matrix& grad, const Vector& h);

struct SolveOptions {
  double alpha = 0.2;
  SupervisedLossKind loss = SupervisedLossKind::squared;
  double tol = 1e-9;  // relative objective decrease per iteration
  int max_iters = 1000;
};

struct SolveResult {
  Coupling coupling;
  PrototypeTargets prototypes;
  std::vector<double> objective_trace;  // objective at init, then after
                                        // each iteration's refresh
  int iterations = 0;
  bool converged = false;
};

/// Conditional-gradient solver for the semi-relaxed problem. Each
/// iteration freezes the prototypes, takes the LMO direction, minimizes
/// the frozen objective exactly over the step length (it is quadratic in
/// gamma), and then refreshes the prototypes, which cannot increase the
/// objective. The trace is therefore non-increasing.
SolveResult srbsfgw_solve(const SimilarityMatrix& C,
                          const SimilarityMatrix& Cbar, const Matrix& Y,
                          const Coupling& T_init, const SolveOptions& opts);

}  // namespace sdr
