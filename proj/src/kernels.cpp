#include "sdr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sdr {
namespace {

Matrix cross_sq_dists(const Matrix& A, const Matrix& B) {
  Vector a2 = A.rowwise().squaredNorm();
  Vector b2 = B.rowwise().squaredNorm();
  Matrix D = (-2.0 * A * B.transpose());
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  return D.cwiseMax(0.0);
}

void check_integer_labels(const Matrix& M, const char* side) {
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j)
      if (std::abs(M(i, j) - std::round(M(i, j))) > 1e-9)
        throw data_error(std::string("delta kernel requires integer-coded "
                                     "labels; found fractional value in ") +
                         side);
}

// Entropy in nats of softmax(-beta * d) together with its normalizer,
// evaluated stably by shifting out the smallest distance.
double row_entropy(const Vector& d, double beta) {
  double dmin = d.minCoeff();
  double sum = 0.0, wsum = 0.0;
  for (Index j = 0; j < d.size(); ++j) {
    double w = std::exp(-beta * (d(j) - dmin));
    sum += w;
    wsum += w * (d(j) - dmin);
  }
  return std::log(sum) + beta * wsum / sum;
}

}  // namespace

Matrix pairwise_sq_dists(const Matrix& X) {
  if (X.rows() < 1) throw data_error("pairwise_sq_dists: empty input");
  Matrix D = cross_sq_dists(X, X);
  D = ((D + D.transpose()) * 0.5).eval();
  D.diagonal().setZero();
  return D;
}

Matrix eval_kernel(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols())
    throw data_error("eval_kernel: column counts differ");
  const double s2 = spec.signal_variance;

  switch (spec.kind) {
    case KernelKind::rbf: {
      double l = spec.lengthscales(0);
      if (l <= 0.0) throw data_error("eval_kernel: lengthscale must be > 0");
      return s2 * (cross_sq_dists(A, B) / (-2.0 * l * l)).array().exp();
    }
    case KernelKind::ard_rbf: {
      if (spec.lengthscales.size() != A.cols())
        throw data_error("eval_kernel: ard_rbf needs one lengthscale per column");
      if ((spec.lengthscales.array() <= 0.0).any())
        throw data_error("eval_kernel: lengthscale must be > 0");
      Matrix As = A.array().rowwise() / spec.lengthscales.transpose().array();
      Matrix Bs = B.array().rowwise() / spec.lengthscales.transpose().array();
      return s2 * (cross_sq_dists(As, Bs) * -0.5).array().exp();
    }
    case KernelKind::rational_quadratic: {
      double l = spec.lengthscales(0);
      if (l <= 0.0) throw data_error("eval_kernel: lengthscale must be > 0");
      if (spec.rq_alpha <= 0.0)
        throw data_error("eval_kernel: rq_alpha must be > 0");
      Matrix base =
          1.0 + (cross_sq_dists(A, B) / (2.0 * spec.rq_alpha * l * l)).array();
      return s2 * base.array().pow(-spec.rq_alpha);
    }
    case KernelKind::delta: {
      check_integer_labels(A, "first argument");
      check_integer_labels(B, "second argument");
      Matrix K(A.rows(), B.rows());
      for (Index i = 0; i < A.rows(); ++i)
        for (Index j = 0; j < B.rows(); ++j) {
          bool eq = true;
          for (Index c = 0; c < A.cols() && eq; ++c)
            eq = std::llround(A(i, c)) == std::llround(B(j, c));
          K(i, j) = eq ? 1.0 : 0.0;
        }
      return K;
    }
  }
  throw data_error("eval_kernel: unknown kernel kind");
}

Matrix center_kernel(const Matrix& K) {
  if (K.rows() != K.cols()) throw data_error("center_kernel: K must be square");
  Vector rm = K.rowwise().mean();
  Vector cm = K.colwise().mean();
  double tm = K.mean();
  Matrix C = K;
  C.colwise() -= rm;
  C.rowwise() -= cm.transpose();
  C.array() += tm;
  return C;
}

Matrix entropic_affinity_rows(const Matrix& D, double perplexity) {
  const Index n = D.rows();
  if (D.cols() != n) throw data_error("entropic_affinity: D must be square");
  if (!(perplexity > 1.0 && perplexity < static_cast<double>(n)))
    throw data_error("entropic_affinity: perplexity must lie in (1, n)");

  const double target = std::log(perplexity);
  const double tol = 1e-5;
  const int max_iter = 200;
  const double log_lo = std::log(1e-12), log_hi = std::log(1e12);

  Matrix P = Matrix::Zero(n, n);
  double worst_gap = 0.0;
  Index worst_row = -1;

  for (Index i = 0; i < n; ++i) {
    Vector d(n - 1);
    std::vector<Index> idx(n - 1);
    Index t = 0;
    for (Index j = 0; j < n; ++j)
      if (j != i) {
        idx[t] = j;
        d(t++) = D(i, j);
      }

    if (n - 1 == 1) {
      // A single neighbor carries all mass for every bandwidth; the row
      // entropy is identically zero and no calibration is possible.
      P(i, idx[0]) = 1.0;
      continue;
    }

    double lo = log_lo, hi = log_hi, beta = 0.0;
    double h = 0.0;
    bool ok = false;
    for (int it = 0; it < max_iter; ++it) {
      double mid = 0.5 * (lo + hi);
      beta = std::exp(mid);
      h = row_entropy(d, beta);
      if (std::abs(h - target) <= tol) {
        ok = true;
        break;
      }
      // Entropy decreases as beta grows.
      if (h > target)
        lo = mid;
      else
        hi = mid;
    }
    if (!ok) {
      double gap = std::abs(h - target);
      if (gap > worst_gap) {
        worst_gap = gap;
        worst_row = i;
      }
      continue;
    }

    double dmin = d.minCoeff();
    Vector w = (-beta * (d.array() - dmin)).exp();
    w /= w.sum();
    for (Index k = 0; k < n - 1; ++k) P(i, idx[k]) = w(k);
  }

  if (worst_row >= 0)
    throw numerical_error(
        "entropic_affinity: bisection did not reach the target entropy; "
        "worst row " +
        std::to_string(worst_row) + " missed by " + std::to_string(worst_gap));
  return P;
}

SimilarityMatrix entropic_affinity(const Matrix& D, double perplexity) {
  Matrix P = entropic_affinity_rows(D, perplexity);
  Matrix S = 0.5 * (P + P.transpose());
  S /= S.sum();
  S.diagonal().setZero();
  return {std::move(S), SimilarityKind::entropic_affinity};
}

SimilarityMatrix student_t_affinity(const Matrix& Z) {
  const Index m = Z.rows();
  if (m < 2) throw data_error("student_t_affinity: need at least two rows");
  Matrix Q = (1.0 + pairwise_sq_dists(Z).array()).inverse();
  Q.diagonal().setZero();
  Q /= Q.sum();
  return {std::move(Q), SimilarityKind::student_t};
}

PcaResult pca_reduce(const Matrix& X, Index k) {
  const Index n = X.rows(), d = X.cols();
  if (k < 1 || k > std::min(n, d))
    throw data_error("pca_reduce: k must lie in [1, min(n, d)]");
  if (n < 2) throw data_error("pca_reduce: need at least two rows");

  PcaResult r;
  r.mean = X.colwise().mean();
  Matrix Xc = X.rowwise() - r.mean.transpose();
  Matrix C = (Xc.transpose() * Xc) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  if (es.info() != Eigen::Success)
    throw numerical_error("pca_reduce: eigendecomposition failed");

  r.components.resize(d, k);
  r.explained_variance.resize(k);
  for (Index c = 0; c < k; ++c) {
    Vector v = es.eigenvectors().col(d - 1 - c);
    Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    r.components.col(c) = v;
    r.explained_variance(c) = std::max(0.0, es.eigenvalues()(d - 1 - c));
  }
  r.coords = Xc * r.components;
  return r;
}

ColumnStats fit_standardize(const Matrix& X) {
  if (X.rows() < 1) throw data_error("standardize: empty input");
  ColumnStats s;
  s.mean = X.colwise().mean();
  Matrix Xc = X.rowwise() - s.mean.transpose();
  s.std = (Xc.array().square().colwise().mean()).sqrt();
  // Cancellation can leave a tiny residual std on a constant column;
  // detect constancy exactly so those columns map to zero.
  for (Index c = 0; c < X.cols(); ++c)
    if (X.col(c).maxCoeff() == X.col(c).minCoeff()) s.std(c) = 0.0;
  return s;
}

Matrix apply_standardize(const Matrix& X, const ColumnStats& stats) {
  if (X.cols() != stats.mean.size())
    throw data_error("standardize: column count does not match stats");
  Matrix Xs = X.rowwise() - stats.mean.transpose();
  for (Index c = 0; c < X.cols(); ++c) {
    if (stats.std(c) > 0.0)
      Xs.col(c) /= stats.std(c);
    else
      Xs.col(c).setZero();
  }
  return Xs;
}

std::pair<Matrix, ColumnStats> standardize(const Matrix& X) {
  ColumnStats s = fit_standardize(X);
  return {apply_standardize(X, s), s};
}

double median_lengthscale(const Matrix& X) {
  const Index n = X.rows();
  if (n < 2) return 1.0;
  std::vector<double> d;
  d.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      d.push_back((X.row(i) - X.row(j)).norm());
  auto mid = d.begin() + d.size() / 2;
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  return med > 1e-300 ? med : 1.0;
}

}  // namespace sdr
