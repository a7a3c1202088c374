#include "sdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "sdr/rng.hpp"

namespace sdr {

namespace {

double sq_dist_rows(const Matrix& A, Index i, const Matrix& B, Index j) {
  return (A.row(i) - B.row(j)).squaredNorm();
}

// Single Lloyd run from k-means++ seeds; returns labels/centers/inertia.
KMeansResult lloyd_once(const Matrix& X, int k, Rng& rng) {
  const Index n = X.rows();
  const Index d = X.cols();
  Matrix centers(k, d);

  // k-means++: first center uniform, the rest proportional to the
  // squared distance to the nearest chosen center.
  centers.row(0) = X.row(static_cast<Index>(rng.below(n)));
  Vector dist2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (Index i = 0; i < n; ++i)
      dist2(i) = std::min(dist2(i), sq_dist_rows(X, i, centers, c - 1));
    double total = dist2.sum();
    Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += dist2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Index>(rng.below(n));
    }
    centers.row(c) = X.row(pick);
  }

  std::vector<int> labels(n, 0);
  double inertia = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    inertia = 0.0;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist_rows(X, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        double dd = sq_dist_rows(X, i, centers, c);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      if (labels[i] != best) {
        labels[i] = best;
        changed = true;
      }
      inertia += best_d;
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, d);
    std::vector<Index> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[i]) += X.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / double(counts[c]);
      } else {
        // Respawn an emptied cluster at the point worst served by its
        // current assignment.
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          double dd = sq_dist_rows(X, i, centers, labels[i]);
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        centers.row(c) = X.row(far);
      }
    }
  }
  return {std::move(labels), std::move(centers), inertia};
}

double entropy_of_counts(const std::map<int, Index>& counts, double n) {
  double h = 0.0;
  for (const auto& [label, cnt] : counts) {
    (void)label;
    if (cnt > 0) {
      double p = double(cnt) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, int restarts,
                    std::uint64_t seed) {
  const Index n = points.rows();
  if (k < 1 || Index(k) > n)
    throw data_error("kmeans: k must lie in [1, point count]");
  if (restarts < 1) throw data_error("kmeans: restarts must be positive");
  require_finite(points, "kmeans points");

  Rng base(seed, stream::kmeans);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = base.split(static_cast<std::uint64_t>(r));
    KMeansResult run = lloyd_once(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

double homogeneity(const std::vector<int>& true_labels,
                   const std::vector<int>& cluster_labels) {
  if (true_labels.size() != cluster_labels.size())
    throw data_error("homogeneity: label vectors differ in length");
  if (true_labels.empty()) throw data_error("homogeneity: empty labels");
  const double n = double(true_labels.size());

  std::map<int, Index> class_counts, cluster_counts;
  std::map<std::pair<int, int>, Index> joint;
  for (size_t i = 0; i < true_labels.size(); ++i) {
    ++class_counts[true_labels[i]];
    ++cluster_counts[cluster_labels[i]];
    ++joint[{true_labels[i], cluster_labels[i]}];
  }

  double h_c = entropy_of_counts(class_counts, n);
  if (h_c == 0.0) return 1.0;

  // H(C | K) = -sum_{c,k} p(c,k) log(p(c,k) / p(k))
  double h_ck = 0.0;
  for (const auto& [ck, cnt] : joint) {
    double p = double(cnt) / n;
    double pk = double(cluster_counts.at(ck.second)) / n;
    h_ck -= p * std::log(p / pk);
  }
  return std::clamp(1.0 - h_ck / h_c, 0.0, 1.0);
}

double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw data_error("nmi: label vectors differ in length");
  if (labels_a.empty()) throw data_error("nmi: empty labels");
  const double n = double(labels_a.size());

  std::map<int, Index> counts_a, counts_b;
  std::map<std::pair<int, int>, Index> joint;
  for (size_t i = 0; i < labels_a.size(); ++i) {
    ++counts_a[labels_a[i]];
    ++counts_b[labels_b[i]];
    ++joint[{labels_a[i], labels_b[i]}];
  }

  double h_a = entropy_of_counts(counts_a, n);
  double h_b = entropy_of_counts(counts_b, n);
  if (h_a == 0.0 && h_b == 0.0) return 1.0;  // both partitions trivial

  double mi = 0.0;
  for (const auto& [ab, cnt] : joint) {
    double p = double(cnt) / n;
    double pa = double(counts_a.at(ab.first)) / n;
    double pb = double(counts_b.at(ab.second)) / n;
    mi += p * std::log(p / (pa * pb));
  }
  double norm = 0.5 * (h_a + h_b);
  return std::clamp(mi / norm, 0.0, 1.0);
}

double silhouette(const Matrix& points, const std::vector<int>& labels) {
  return silhouette(points, labels, Vector::Ones(points.rows()));
}

double silhouette(const Matrix& points, const std::vector<int>& labels,
                  const Vector& weights) {
  const Index n = points.rows();
  if (Index(labels.size()) != n || weights.size() != n)
    throw data_error("silhouette: labels/weights must match point count");
  if (weights.minCoeff() < 0.0 || weights.sum() <= 0.0)
    throw data_error("silhouette: weights must be nonnegative, not all zero");

  std::map<int, double> cluster_weight;
  for (Index i = 0; i < n; ++i) cluster_weight[labels[i]] += weights(i);
  if (cluster_weight.size() < 2)
    throw data_error("silhouette: needs at least two clusters");

  Matrix D(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      D(i, j) = (points.row(i) - points.row(j)).norm();

  double acc = 0.0, wtot = 0.0;
  for (Index i = 0; i < n; ++i) {
    // Weighted mean distance to every cluster, excluding the point
    // itself from its own cluster.
    std::map<int, double> sum_d, sum_w;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_d[labels[j]] += weights(j) * D(i, j);
      sum_w[labels[j]] += weights(j);
    }
    double own_w = sum_w.count(labels[i]) ? sum_w[labels[i]] : 0.0;
    double s = 0.0;
    if (own_w > 0.0) {
      double a = sum_d[labels[i]] / own_w;
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [lab, w] : sum_w) {
        if (lab == labels[i] || w <= 0.0) continue;
        b = std::min(b, sum_d[lab] / w);
      }
      s = (b - a) / std::max(a, b);
      if (a == 0.0 && b == 0.0) s = 0.0;
    }
    acc += weights(i) * s;
    wtot += weights(i);
  }
  return acc / wtot;
}

Matrix knn_regress(const Matrix& Z_train, const Matrix& y_train,
                   const Matrix& Z_test, int k) {
  const Index n = Z_train.rows();
  if (y_train.rows() != n)
    throw data_error("knn_regress: target rows must match training rows");
  if (k < 1 || Index(k) > n)
    throw data_error("knn_regress: k must lie in [1, training size]");
  if (Z_test.cols() != Z_train.cols())
    throw data_error("knn_regress: embedding dims differ");

  Matrix pred(Z_test.rows(), y_train.cols());
  std::vector<std::pair<double, Index>> order(n);
  for (Index t = 0; t < Z_test.rows(); ++t) {
    for (Index i = 0; i < n; ++i)
      order[i] = {(Z_train.row(i) - Z_test.row(t)).squaredNorm(), i};
    // Sorting by (distance, index) makes ties go to the smaller index.
    std::sort(order.begin(), order.end());
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(y_train.cols());
    for (int j = 0; j < k; ++j) mean += y_train.row(order[j].second);
    pred.row(t) = mean / double(k);
  }
  return pred;
}

Matrix krr_regress(const Matrix& Z_train, const Matrix& y_train,
                   const Matrix& Z_test, double lengthscale, double ridge) {
  if (ridge <= 0.0) throw data_error("krr_regress: ridge must be positive");
  if (lengthscale <= 0.0)
    throw data_error("krr_regress: lengthscale must be positive");
  if (y_train.rows() != Z_train.rows())
    throw data_error("krr_regress: target rows must match training rows");
  if (Z_test.cols() != Z_train.cols())
    throw data_error("krr_regress: embedding dims differ");

  KernelSpec spec;
  spec.lengthscales = Vector::Constant(1, lengthscale);
  Matrix K = eval_kernel(spec, Z_train, Z_train);
  K.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> fac(K);
  if (fac.info() != Eigen::Success)
    throw numerical_error("krr_regress: kernel factorization failed");
  Matrix coef = fac.solve(y_train);
  return eval_kernel(spec, Z_test, Z_train) * coef;
}

double r2(const Vector& y_true, const Vector& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw data_error("r2: inputs must be equal-length and nonempty");
  double mean = y_true.mean();
  double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot == 0.0) throw data_error("r2: y_true is constant");
  double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw data_error("inverse_normal_cdf: p must lie in (0, 1)");

  // Rational approximation (central and tail pieces), then one Halley
  // refinement against the erfc-based CDF; accurate well below 1e-12.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

std::pair<Vector, Vector> calibration_curve(const Vector& means,
                                            const Vector& stds,
                                            const Vector& y_true, int n_bins) {
  const Index n = y_true.size();
  if (means.size() != n || stds.size() != n || n == 0)
    throw data_error("calibration_curve: inputs must be equal-length");
  if (n_bins < 1) throw data_error("calibration_curve: n_bins must be >= 1");
  if (stds.minCoeff() <= 0.0)
    throw data_error("calibration_curve: stds must be positive");

  Vector levels(n_bins), coverages(n_bins);
  for (int k = 1; k <= n_bins; ++k) {
    double alpha = double(k) / double(n_bins + 1);
    double z = inverse_normal_cdf(0.5 * (1.0 + alpha));
    Index inside = 0;
    for (Index i = 0; i < n; ++i)
      if (std::abs(y_true(i) - means(i)) <= z * stds(i)) ++inside;
    levels(k - 1) = alpha;
    coverages(k - 1) = double(inside) / double(n);
  }
  return {levels, coverages};
}

double mace(const Vector& levels, const Vector& coverages) {
  if (levels.size() != coverages.size() || levels.size() == 0)
    throw data_error("mace: inputs must be equal-length and nonempty");
  return (levels - coverages).cwiseAbs().mean();
}

PrototypeLabelResult prototype_labels(const Coupling& c,
                                      const std::vector<int>& y_labels) {
  const Index n = c.T.rows();
  const Index m = c.T.cols();
  if (Index(y_labels.size()) != n)
    throw data_error("prototype_labels: label count must match plan rows");

  std::map<int, Index> class_counts;
  for (int y : y_labels) ++class_counts[y];
  int majority = class_counts.begin()->first;
  for (const auto& [cls, cnt] : class_counts)
    if (cnt > class_counts[majority]) majority = cls;

  PrototypeLabelResult out;
  out.labels.resize(m);
  for (Index j = 0; j < m; ++j) {
    std::map<int, double> mass;
    for (Index i = 0; i < n; ++i) mass[y_labels[i]] += c.T(i, j);
    int best = mass.begin()->first;
    double best_mass = 0.0;
    bool any = false;
    for (const auto& [cls, w] : mass) {
      if (w > best_mass) {
        best_mass = w;
        best = cls;
        any = true;
      }
    }
    if (!any || best_mass <= 0.0) {
      out.labels[j] = majority;
      out.had_empty_columns = true;
    } else {
      out.labels[j] = best;
    }
  }
  return out;
}

}  // namespace sdr
