#pragma once

#include <utility>

#include "sdr/types.hpp"

namespace sdr {

/// Positive-definite kernel families used across the project.
///   rbf                  k(a,b) = s2 * exp(-||a-b||^2 / (2 l^2))
///   ard_rbf              k(a,b) = s2 * exp(-0.5 * sum_d ((a_d-b_d)/l_d)^2)
///   rational_quadratic   k(a,b) = s2 * (1 + ||a-b||^2 / (2 alpha l^2))^(-alpha)
///   delta                k(a,b) = 1 if the integer-coded labels match, else 0
enum class KernelKind { rbf, ard_rbf, rational_quadratic, delta };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  // lengthscales[0] for isotropic kernels; one per column for ard_rbf.
  Vector lengthscales = Vector::Ones(1);
  double rq_alpha = 1.0;
  double signal_variance = 1.0;
};

/// Pairwise similarity matrix tagged with how it was built, so that
/// downstream transport code can verify that the two sides of a
/// Gromov-Wasserstein term use matching constructions.
enum class SimilarityKind { sq_dist, entropic_affinity, student_t, custom };

struct SimilarityMatrix {
  Matrix values;
  SimilarityKind kind = SimilarityKind::custom;
};

/// All pairwise squared Euclidean distances between rows of X.
/// Symmetric, zero diagonal, entries clamped at zero.
Matrix pairwise_sq_dists(const Matrix& X);

/// Gram matrix of the kernel between rows of A and rows of B.
/// For the delta kernel both arguments must hold integer-coded labels
/// (each entry within 1e-9 of an integer); rows match when every column
/// matches.
Matrix eval_kernel(const KernelSpec& spec, const Matrix& A, const Matrix& B);

/// Double centering H K H with H = I - (1/n) 1 1^T.
Matrix center_kernel(const Matrix& K);

/// Row-stochastic entropic affinities before symmetrization: row i is
/// softmax(-beta_i * D(i,:)) over j != i, with beta_i found by bisection
/// so the row entropy equals log(perplexity) within 1e-5. The bracket is
/// [1e-12, 1e12] in log space with at most 200 halvings; a row that
/// cannot be calibrated raises numerical_error naming the worst row.
/// Rows with a single neighbor (n = 2) are entropy-constant in beta and
/// are returned as-is.
Matrix entropic_affinity_rows(const Matrix& D, double perplexity);

/// Symmetrized, jointly normalized entropic affinity: (P + P^T)/2 scaled
/// to total sum 1, zero diagonal. D must be a square symmetric matrix of
/// squared distances and perplexity must lie in (1, n).
SimilarityMatrix entropic_affinity(const Matrix& D, double perplexity);

/// Heavy-tailed affinity q_ij proportional to (1 + ||z_i - z_j||^2)^(-1)
/// off the diagonal, jointly normalized to total sum 1.
SimilarityMatrix student_t_affinity(const Matrix& Z);

struct PcaResult {
  Matrix coords;              // n x k projections
  Matrix components;          // d x k, orthonormal columns
  Vector mean;                // column means of X
  Vector explained_variance;  // top-k eigenvalues of the sample covariance
};

/// Principal component projection onto the top k directions of the
/// sample covariance (1/(n-1) normalization). Component signs are fixed
/// by making each column's largest-magnitude entry positive.
PcaResult pca_reduce(const Matrix& X, Index k);

struct ColumnStats {
  Vector mean;
  Vector std;  // population standard deviation; 0 marks a constant column
};

ColumnStats fit_standardize(const Matrix& X);

/// (X - mean) / std per column; constant columns map to zeros.
Matrix apply_standardize(const Matrix& X, const ColumnStats& stats);

std::pair<Matrix, ColumnStats> standardize(const Matrix& X);

/// Median of pairwise Euclidean distances between rows, the usual
/// bandwidth heuristic. Falls back to 1 when fewer than two rows or all
/// rows coincide.
double median_lengthscale(const Matrix& X);

}  // namespace sdr
