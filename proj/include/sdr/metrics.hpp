#pragma once

#include <utility>
#include <vector>

#include "sdr/ot.hpp"
#include "sdr/types.hpp"

namespace sdr {

/// Lloyd's algorithm with k-means++ seeding, best inertia over
/// `restarts` independent starts. Clusters emptied during an update are
/// respawned at the point farthest from its assigned center. Fully
/// deterministic in (points, k, restarts, seed).
struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;  // k x d
  double inertia = 0.0;
};
KMeansResult kmeans(const Matrix& points, int k, int restarts,
                    std::uint64_t seed);

/// 1 - H(classes | clusters) / H(classes), in [0, 1]. Equals 1 when the
/// class labels are already constant (H(classes) = 0).
double homogeneity(const std::vector<int>& true_labels,
                   const std::vector<int>& cluster_labels);

/// Mutual information normalized by the arithmetic mean of the two label
/// entropies, in [0, 1]. Two constant labelings count as identical
/// partitions and score 1.
double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

/// Mean silhouette coefficient in [-1, 1]. Points alone in their cluster
/// contribute 0. With weights, both the per-point neighbor distances and
/// the final mean are weighted; uniform weights recover the plain score.
/// Requires at least two clusters.
double silhouette(const Matrix& points, const std::vector<int>& labels);
double silhouette(const Matrix& points, const std::vector<int>& labels,
                  const Vector& weights);

/// Mean of the k nearest training targets under Euclidean distance in
/// the embedding, distance ties resolved toward the smaller training
/// index. Multi-column targets are averaged per column.
Matrix knn_regress(const Matrix& Z_train, const Matrix& y_train,
                   const Matrix& Z_test, int k);

/// RBF kernel ridge regression,
///   predictions = K(test, train) (K(train, train) + ridge I)^{-1} y.
Matrix krr_regress(const Matrix& Z_train, const Matrix& y_train,
                   const Matrix& Z_test, double lengthscale, double ridge);

/// 1 - SS_res / SS_tot. A constant y_true has no variance to explain and
/// raises data_error.
double r2(const Vector& y_true, const Vector& y_pred);

/// Quantile function of the standard normal distribution.
double inverse_normal_cdf(double p);

/// Symmetric-interval calibration curve: level k of n_bins is
/// alpha_k = k / (n_bins + 1), and its coverage is the fraction of
/// y_true falling inside [mean - z sigma, mean + z sigma] with
/// z = Phi^{-1}((1 + alpha_k) / 2). Coverages are non-decreasing because
/// the bands nest.
std::pair<Vector, Vector> calibration_curve(const Vector& means,
                                            const Vector& stds,
                                            const Vector& y_true, int n_bins);

/// Mean absolute gap between nominal levels and observed coverages.
double mace(const Vector& levels, const Vector& coverages);

struct PrototypeLabelResult {
  std::vector<int> labels;
  bool had_empty_columns = false;
};

/// Majority class per plan column: label(j) = argmax_c sum_{i: y_i = c}
/// T_ij, ties toward the smaller class id. Zero-mass columns fall back
/// to the globally most frequent class and are flagged.
PrototypeLabelResult prototype_labels(const Coupling& c,
                                      const std::vector<int>& y_labels);

}  // namespace sdr
