#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdr/kernels.hpp"
#include "sdr/rng.hpp"

using namespace sdr;

namespace {

double min_eigenvalue(const Matrix& K) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("pairwise squared distances match the direct double loop") {
  Rng rng(11, stream::test);
  Matrix X = oracle::rand_normal(rng, 9, 4);
  Matrix D = pairwise_sq_dists(X);
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.rows(); ++j)
      CHECK(D(i, j) ==
            doctest::Approx((X.row(i) - X.row(j)).squaredNorm()).epsilon(1e-12));
  CHECK((D - D.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(D.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(D.minCoeff() >= 0.0);
}

TEST_CASE("two points at distance d give the exact 2x2 table") {
  Matrix X(2, 1);
  X << 0.0, 3.0;
  Matrix D = pairwise_sq_dists(X);
  CHECK(D(0, 1) == 9.0);
  CHECK(D(1, 0) == 9.0);
  CHECK(D(0, 0) == 0.0);
}

TEST_CASE("rbf kernel values, diagonal, and positive semi-definiteness") {
  KernelSpec spec;
  spec.kind = KernelKind::rbf;
  spec.lengthscales = Vector::Constant(1, 2.0);
  spec.signal_variance = 1.5;

  Matrix A(2, 1);
  A << 0.0, 2.0;
  Matrix K = eval_kernel(spec, A, A);
  CHECK(K(0, 1) == doctest::Approx(1.5 * std::exp(-4.0 / 8.0)).epsilon(1e-14));
  CHECK(K(0, 0) == doctest::Approx(1.5).epsilon(1e-14));

  Rng rng(5, stream::test);
  Matrix X = oracle::rand_normal(rng, 40, 3);
  CHECK(min_eigenvalue(eval_kernel(spec, X, X)) >= -1e-8);
}

TEST_CASE("ard kernel with equal lengthscales reduces to isotropic rbf") {
  Rng rng(7, stream::test);
  Matrix X = oracle::rand_normal(rng, 15, 4);
  KernelSpec iso;
  iso.lengthscales = Vector::Constant(1, 0.8);
  KernelSpec ard;
  ard.kind = KernelKind::ard_rbf;
  ard.lengthscales = Vector::Constant(4, 0.8);
  Matrix K1 = eval_kernel(iso, X, X);
  Matrix K2 = eval_kernel(ard, X, X);
  CHECK((K1 - K2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("rational quadratic kernel: closed form, rbf limit, psd") {
  KernelSpec rq;
  rq.kind = KernelKind::rational_quadratic;
  rq.lengthscales = Vector::Constant(1, 1.3);
  rq.rq_alpha = 0.7;

  Matrix A(2, 2);
  A << 0.0, 0.0, 1.0, 2.0;
  double d2 = 5.0;
  Matrix K = eval_kernel(rq, A, A);
  double expected = std::pow(1.0 + d2 / (2.0 * 0.7 * 1.3 * 1.3), -0.7);
  CHECK(K(0, 1) == doctest::Approx(expected).epsilon(1e-14));

  // Large alpha approaches the rbf value at a probe distance.
  rq.rq_alpha = 1e6;
  Matrix Krq = eval_kernel(rq, A, A);
  KernelSpec rbf;
  rbf.lengthscales = Vector::Constant(1, 1.3);
  Matrix Krbf = eval_kernel(rbf, A, A);
  CHECK(std::abs(Krq(0, 1) - Krbf(0, 1)) < 1e-3);

  Rng rng(13, stream::test);
  Matrix X = oracle::rand_normal(rng, 35, 2);
  rq.rq_alpha = 0.5;
  CHECK(min_eigenvalue(eval_kernel(rq, X, X)) >= -1e-8);
}

TEST_CASE("delta kernel compares integer-coded labels") {
  KernelSpec delta;
  delta.kind = KernelKind::delta;
  Matrix L(4, 1);
  L << 0.0, 1.0, 1.0, 2.0;
  Matrix K = eval_kernel(delta, L, L);
  CHECK(K(1, 2) == 1.0);
  CHECK(K(0, 1) == 0.0);
  CHECK(K(3, 3) == 1.0);
  CHECK(min_eigenvalue(K) >= -1e-12);

  Matrix bad(1, 1);
  bad << 0.5;
  CHECK_THROWS_AS(eval_kernel(delta, bad, L), data_error);
}

TEST_CASE("kernel domain errors") {
  KernelSpec spec;
  spec.lengthscales = Vector::Constant(1, -1.0);
  Matrix X = Matrix::Zero(2, 1);
  CHECK_THROWS_AS(eval_kernel(spec, X, X), data_error);

  KernelSpec ard;
  ard.kind = KernelKind::ard_rbf;
  ard.lengthscales = Vector::Constant(3, 1.0);
  CHECK_THROWS_AS(eval_kernel(ard, X, X), data_error);
}

TEST_CASE("double centering zeroes row and column sums and is idempotent") {
  Rng rng(3, stream::test);
  Matrix K = oracle::rand_sym(rng, 12, 0.0, 2.0);
  Matrix C = center_kernel(K);
  CHECK(C.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(C.colwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((center_kernel(C) - C).cwiseAbs().maxCoeff() <= 1e-12);

  Matrix ones = Matrix::Constant(6, 6, 3.7);
  CHECK(center_kernel(ones).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("entropic affinity rows hit the target entropy") {
  Rng rng(21, stream::test);
  Matrix X = oracle::rand_normal(rng, 25, 3);
  Matrix D = pairwise_sq_dists(X);
  double perplexity = 8.0;
  Matrix P = entropic_affinity_rows(D, perplexity);

  for (Index i = 0; i < P.rows(); ++i) {
    Vector row = P.row(i).transpose();
    CHECK(std::abs(row.sum() - 1.0) <= 1e-12);
    CHECK(P(i, i) == 0.0);
    CHECK(std::abs(oracle::entropy(row) - std::log(perplexity)) <= 1e-5);
  }

  // Closer neighbors receive at least as much affinity.
  for (Index i = 0; i < P.rows(); ++i)
    for (Index j = 0; j < P.rows(); ++j)
      for (Index k = 0; k < P.rows(); ++k) {
        if (j == i || k == i) continue;
        if (D(i, j) < D(i, k)) CHECK(P(i, j) >= P(i, k));
      }
}

TEST_CASE("symmetrized entropic affinity is a zero-diagonal joint distribution") {
  Rng rng(22, stream::test);
  Matrix X = oracle::rand_normal(rng, 30, 4);
  SimilarityMatrix S = entropic_affinity(pairwise_sq_dists(X), 12.0);
  CHECK(S.kind == SimilarityKind::entropic_affinity);
  CHECK(std::abs(S.values.sum() - 1.0) <= 1e-12);
  CHECK((S.values - S.values.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(S.values.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(S.values.minCoeff() >= 0.0);
}

TEST_CASE("two-point entropic affinity is the exact half-half table") {
  Matrix X(2, 1);
  X << 0.0, 1.0;
  SimilarityMatrix S = entropic_affinity(pairwise_sq_dists(X), 1.5);
  CHECK(S.values(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(S.values(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(S.values(0, 0) == 0.0);
}

TEST_CASE("entropic affinity rejects out-of-range perplexity and reports "
          "uncalibratable rows") {
  Matrix X(3, 2);
  X << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;  // equilateral
  Matrix D = pairwise_sq_dists(X);
  CHECK_THROWS_AS(entropic_affinity(D, 0.5), data_error);
  CHECK_THROWS_AS(entropic_affinity(D, 3.0), data_error);
  // Equidistant neighbors pin the row entropy at log 2 for every
  // bandwidth, so a target of log 1.2 cannot be reached.
  CHECK_THROWS_AS(entropic_affinity(D, 1.2), numerical_error);
}

TEST_CASE("student-t affinity matches the direct formula") {
  Rng rng(31, stream::test);
  Matrix Z = oracle::rand_normal(rng, 8, 2);
  SimilarityMatrix S = student_t_affinity(Z);
  CHECK(S.kind == SimilarityKind::student_t);

  Matrix expected(8, 8);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 8; ++j)
      expected(i, j) =
          i == j ? 0.0
                 : 1.0 / (1.0 + (Z.row(i) - Z.row(j)).squaredNorm());
  expected /= expected.sum();
  CHECK((S.values - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(std::abs(S.values.sum() - 1.0) <= 1e-12);
}

TEST_CASE("student-t affinity of two identical rows is half-half") {
  Matrix Z = Matrix::Zero(2, 3);
  SimilarityMatrix S = student_t_affinity(Z);
  CHECK(S.values(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(S.values(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("pca retains the top eigenvalue of the sample covariance") {
  Rng rng(41, stream::test);
  // Anisotropic 2-D Gaussian.
  Matrix X(200, 2);
  for (Index i = 0; i < X.rows(); ++i) {
    X(i, 0) = 3.0 * rng.normal();
    X(i, 1) = 0.5 * rng.normal() + 0.3 * X(i, 0);
  }
  PcaResult r = pca_reduce(X, 1);

  Matrix Xc = X.rowwise() - X.colwise().mean();
  Matrix C = Xc.transpose() * Xc / double(X.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(C);
  double top = es.eigenvalues().maxCoeff();

  Vector coords = r.coords.col(0);
  double var = coords.squaredNorm() / double(X.rows() - 1) -
               std::pow(coords.mean(), 2) * double(X.rows()) /
                   double(X.rows() - 1);
  CHECK(std::abs(var - top) <= 1e-8);
  CHECK(std::abs(r.explained_variance(0) - top) <= 1e-10);
}

TEST_CASE("pca reconstruction error is non-increasing in k") {
  Rng rng(43, stream::test);
  Matrix X = oracle::rand_normal(rng, 40, 5);
  double prev = -1.0;
  for (Index k = 1; k <= 5; ++k) {
    PcaResult r = pca_reduce(X, k);
    Matrix Xc = X.rowwise() - r.mean.transpose();
    double err = (Xc - r.coords * r.components.transpose()).squaredNorm();
    if (prev >= 0.0) CHECK(err <= prev + 1e-10);
    prev = err;
  }
  CHECK_THROWS_AS(pca_reduce(X, 0), data_error);
  CHECK_THROWS_AS(pca_reduce(X, 6), data_error);
}

TEST_CASE("standardize self-fit gives zero mean and unit variance") {
  Rng rng(47, stream::test);
  Matrix X = oracle::rand_matrix(rng, 60, 4, -3.0, 9.0);
  X.col(2).setConstant(4.2);  // constant column
  auto [Xs, stats] = standardize(X);

  CHECK(Xs.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
  for (Index c = 0; c < 4; ++c) {
    double sd = std::sqrt(Xs.col(c).squaredNorm() / double(X.rows()) -
                          std::pow(Xs.col(c).mean(), 2));
    if (c == 2) {
      CHECK(stats.std(c) == 0.0);
      CHECK(Xs.col(c).cwiseAbs().maxCoeff() == 0.0);
    } else {
      CHECK(std::abs(sd - 1.0) <= 1e-10);
    }
  }

  // New data is transformed with the fitted statistics, not its own.
  Matrix X2 = oracle::rand_matrix(rng, 5, 4, -1.0, 1.0);
  Matrix X2s = apply_standardize(X2, stats);
  for (Index c = 0; c < 4; ++c) {
    double expect = stats.std(c) > 0.0
                        ? (X2(0, c) - stats.mean(c)) / stats.std(c)
                        : 0.0;
    CHECK(X2s(0, c) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("median lengthscale on a hand-computed configuration") {
  Matrix X(3, 1);
  X << 0.0, 1.0, 3.0;  // pairwise distances 1, 2, 3
  CHECK(median_lengthscale(X) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(median_lengthscale(Matrix::Zero(4, 2)) == 1.0);
}
