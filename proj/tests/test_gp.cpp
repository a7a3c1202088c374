#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sdr/gp.hpp"
#include "sdr/rng.hpp"

using namespace sdr;

namespace {

// ARD squared-exponential kernel written as an explicit loop.
Matrix naive_ard(const Vector& ls, double sf2, const Matrix& A,
                 const Matrix& B) {
  Matrix K(A.rows(), B.rows());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < B.rows(); ++j) {
      double q = 0.0;
      for (Index d = 0; d < A.cols(); ++d) {
        double diff = (A(i, d) - B(j, d)) / ls(d);
        q += diff * diff;
      }
      K(i, j) = sf2 * std::exp(-0.5 * q);
    }
  return K;
}

Vector pack_theta(const Vector& ls, double sf2, double sn2) {
  Vector theta(ls.size() + 2);
  theta.head(ls.size()) = ls.array().log().matrix();
  theta(ls.size()) = std::log(sf2);
  theta(ls.size() + 1) = std::log(sn2);
  return theta;
}

GPModel model_from_theta(const Vector& theta, const Matrix& Z,
                         const Vector& y) {
  GPModel m;
  m.log_lengthscales = theta.head(theta.size() - 2);
  m.log_signal_variance = theta(theta.size() - 2);
  m.log_noise_variance = theta(theta.size() - 1);
  m.Z_train = Z;
  m.y_train = y;
  return m;
}

// Draw a noisy sample from a GP prior with the given hyperparameters.
Vector sample_from_prior(Rng& rng, const Matrix& Z, const Vector& ls,
                         double sf2, double sn2) {
  Matrix K = naive_ard(ls, sf2, Z, Z);
  K.diagonal().array() += 1e-10;
  Eigen::LLT<Matrix> llt(K);
  Vector eps(Z.rows());
  for (Index i = 0; i < eps.size(); ++i) eps(i) = rng.normal();
  Vector f = llt.matrixL() * eps;
  for (Index i = 0; i < f.size(); ++i) f(i) += std::sqrt(sn2) * rng.normal();
  return f;
}

}  // namespace

TEST_CASE("ard kernel matches the explicit loop") {
  Rng rng(21, stream::test);
  Matrix A = oracle::rand_normal(rng, 6, 3);
  Matrix B = oracle::rand_normal(rng, 4, 3);
  Vector ls(3);
  ls << 0.7, 1.3, 2.1;
  double sf2 = 1.9;
  Vector theta = pack_theta(ls, sf2, 0.1);
  Matrix K = ard_kernel(theta.head(4), A, B);
  CHECK((K - naive_ard(ls, sf2, A, B)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("single-point marginal likelihood has the scalar closed form") {
  Matrix Z(1, 1);
  Z << 0.3;
  Vector y(1);
  y << 0.0;
  double sf2 = 1.7, sn2 = 0.4;
  GPModel m = model_from_theta(pack_theta(Vector::Constant(1, 1.0), sf2, sn2),
                               Z, y);
  double expect = -0.5 * std::log(sf2 + sn2) -
                  0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(log_marginal_likelihood(m, Z, y) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("three-point marginal likelihood matches the dense formula") {
  Matrix Z(3, 2);
  Z << 0.0, 0.1, 1.0, -0.4, -0.7, 0.9;
  Vector y(3);
  y << 0.5, -1.2, 0.3;
  Vector ls(2);
  ls << 0.8, 1.4;
  double sf2 = 1.3, sn2 = 0.25;

  Matrix A = naive_ard(ls, sf2, Z, Z);
  A.diagonal().array() += sn2;
  double expect = -0.5 * y.dot(A.inverse() * y) -
                  0.5 * std::log(A.determinant()) -
                  1.5 * std::log(2.0 * std::numbers::pi);

  GPModel m = model_from_theta(pack_theta(ls, sf2, sn2), Z, y);
  CHECK(log_marginal_likelihood(m, Z, y) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("marginal likelihood is invariant to permuting the points") {
  Rng rng(22, stream::test);
  Matrix Z = oracle::rand_normal(rng, 8, 2);
  Vector y = oracle::rand_normal(rng, 8, 1).col(0);
  Vector theta = pack_theta(Vector::Constant(2, 0.9), 1.1, 0.3);
  GPModel m = model_from_theta(theta, Z, y);
  double base = log_marginal_likelihood(m, Z, y);

  Matrix Zp(8, 2);
  Vector yp(8);
  std::vector<int> perm = {5, 2, 7, 0, 4, 1, 6, 3};
  for (Index i = 0; i < 8; ++i) {
    Zp.row(i) = Z.row(perm[i]);
    yp(i) = y(perm[i]);
  }
  CHECK(log_marginal_likelihood(m, Zp, yp) ==
        doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("analytic likelihood gradient agrees with central differences") {
  Rng rng(23, stream::test);
  for (int trial = 0; trial < 6; ++trial) {
    Index n = 5 + Index(rng.below(20));
    Index p = 1 + Index(rng.below(3));
    Matrix Z = oracle::rand_normal(rng, n, p);
    Vector y = oracle::rand_normal(rng, n, 1).col(0);
    Vector theta(p + 2);
    for (Index i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-1.0, 1.0);

    LmlEval eval = lml_value_and_grad(theta, Z, y);
    const double h = 1e-5;
    for (Index i = 0; i < theta.size(); ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      double fd = (lml_value_and_grad(tp, Z, y).value -
                   lml_value_and_grad(tm, Z, y).value) /
                  (2.0 * h);
      double scale = std::max({1.0, std::abs(fd), std::abs(eval.grad(i))});
      CHECK(std::abs(eval.grad(i) - fd) / scale <= 1e-4);
    }
  }
}

TEST_CASE("fitting recovers the noise scale of a known generator") {
  const double true_sn2 = 0.05;
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed, stream::test);
    Matrix Z = oracle::rand_matrix(rng, 60, 1, -2.0, 2.0);
    Vector y =
        sample_from_prior(rng, Z, Vector::Constant(1, 0.6), 1.0, true_sn2);
    GPOptions opts;
    opts.max_steps = 200;
    GPModel m = gp_fit(Z, y, opts);
    double ratio = m.noise_variance() / true_sn2;
    if (ratio >= 0.5 && ratio <= 2.0) ++within;
  }
  CHECK(within == 5);
}

TEST_CASE("fit never ends below the starting marginal likelihood") {
  Rng rng(24, stream::test);
  for (int trial = 0; trial < 4; ++trial) {
    Matrix Z = oracle::rand_normal(rng, 25, 2);
    Vector y = (Z.col(0).array().sin() + 0.1 * Z.col(1).array()).matrix();
    GPOptions opts;
    GPModel m = gp_fit(Z, y, opts);

    // Rebuild the initial hyperparameters the same way the fitter does.
    Vector init_ls(2);
    for (Index d = 0; d < 2; ++d) {
      double mu = Z.col(d).mean();
      double var = (Z.col(d).array() - mu).square().sum() / double(Z.rows());
      init_ls(d) = std::max(std::sqrt(var), 1e-3);
    }
    double ymu = y.mean();
    double yvar = (y.array() - ymu).square().sum() / double(y.size());
    GPModel init = model_from_theta(
        pack_theta(init_ls, yvar, 0.1 * yvar), Z, y);
    CHECK(m.lml >= log_marginal_likelihood(init, Z, y) - 1e-9);
  }
}

TEST_CASE("near-zero noise turns prediction into interpolation") {
  Rng rng(25, stream::test);
  Matrix Z = oracle::rand_matrix(rng, 12, 1, -1.0, 1.0);
  Vector y = Z.col(0).array().cos().matrix();
  GPModel m = model_from_theta(
      pack_theta(Vector::Constant(1, 0.8), 1.0, 1e-10), Z, y);
  Matrix K = naive_ard(Vector::Constant(1, 0.8), 1.0, Z, Z);
  K.diagonal().array() += 1e-10;
  Eigen::LLT<Matrix> llt(K);
  m.chol = llt.matrixL();
  m.weights = llt.solve(y);
  auto [mean, var] = gp_predict(m, Z);
  CHECK((mean - y).cwiseAbs().maxCoeff() <= 1e-4);
  CHECK(var.minCoeff() >= 0.0);
}

TEST_CASE("prediction reverts to the prior far from the data") {
  Rng rng(26, stream::test);
  Matrix Z = oracle::rand_matrix(rng, 10, 1, -1.0, 1.0);
  Vector y = oracle::rand_normal(rng, 10, 1).col(0);
  double sf2 = 1.6, sn2 = 0.2;
  GPModel m = model_from_theta(
      pack_theta(Vector::Constant(1, 0.5), sf2, sn2), Z, y);
  Matrix K = naive_ard(Vector::Constant(1, 0.5), sf2, Z, Z);
  K.diagonal().array() += sn2;
  Eigen::LLT<Matrix> llt(K);
  m.chol = llt.matrixL();
  m.weights = llt.solve(y);

  Matrix far(1, 1);
  far << 50.0;
  auto [mean, var] = gp_predict(m, far);
  CHECK(std::abs(mean(0)) <= 1e-6);
  CHECK(var(0) == doctest::Approx(sf2 + sn2).epsilon(1e-6));
}

TEST_CASE("three-point posterior matches the dense textbook formula") {
  Matrix Z(3, 1);
  Z << -0.5, 0.2, 0.9;
  Vector y(3);
  y << 1.0, -0.3, 0.4;
  Vector ls = Vector::Constant(1, 0.7);
  double sf2 = 1.2, sn2 = 0.3;
  GPModel m = model_from_theta(pack_theta(ls, sf2, sn2), Z, y);
  Matrix K = naive_ard(ls, sf2, Z, Z);
  K.diagonal().array() += sn2;
  Eigen::LLT<Matrix> llt(K);
  m.chol = llt.matrixL();
  m.weights = llt.solve(y);

  Matrix Zs(2, 1);
  Zs << 0.0, 1.5;
  Matrix Ks = naive_ard(ls, sf2, Zs, Z);
  Matrix Kinv = K.inverse();
  Vector want_mean = Ks * Kinv * y;
  auto [mean, var] = gp_predict(m, Zs);
  CHECK((mean - want_mean).cwiseAbs().maxCoeff() <= 1e-10);
  for (Index i = 0; i < 2; ++i) {
    double want_var =
        sf2 + sn2 - (Ks.row(i) * Kinv * Ks.row(i).transpose())(0, 0);
    CHECK(var(i) == doctest::Approx(want_var).epsilon(1e-10));
    CHECK(var(i) <= sf2 + sn2 + 1e-8);
  }
}

TEST_CASE("prediction is invariant to permuting the training set") {
  Rng rng(27, stream::test);
  Matrix Z = oracle::rand_normal(rng, 15, 2);
  Vector y = oracle::rand_normal(rng, 15, 1).col(0);
  GPOptions opts;
  opts.max_steps = 30;
  GPModel m1 = gp_fit(Z, y, opts);

  std::vector<int> perm(15);
  for (int i = 0; i < 15; ++i) perm[i] = (i * 7 + 3) % 15;
  Matrix Zp(15, 2);
  Vector yp(15);
  for (Index i = 0; i < 15; ++i) {
    Zp.row(i) = Z.row(perm[i]);
    yp(i) = y(perm[i]);
  }
  GPModel m2 = gp_fit(Zp, yp, opts);

  Matrix Zs = oracle::rand_normal(rng, 5, 2);
  auto [mean1, var1] = gp_predict(m1, Zs);
  auto [mean2, var2] = gp_predict(m2, Zs);
  CHECK((mean1 - mean2).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((var1 - var2).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("predict rejects stars with the wrong embedding width") {
  Rng rng(28, stream::test);
  Matrix Z = oracle::rand_normal(rng, 10, 2);
  Vector y = oracle::rand_normal(rng, 10, 1).col(0);
  GPOptions opts;
  opts.max_steps = 5;
  GPModel m = gp_fit(Z, y, opts);
  Matrix bad = oracle::rand_normal(rng, 3, 3);
  CHECK_THROWS_AS(gp_predict(m, bad), data_error);
}

TEST_CASE("average predictive log density has the gaussian closed form") {
  Vector y(2), mu(2), sd(2);
  y << 1.0, -0.5;
  mu << 0.8, -0.5;
  sd << 0.5, 2.0;
  double l1 = -0.5 * std::log(2.0 * std::numbers::pi * 0.25) -
              0.5 * 0.04 / 0.25;
  double l2 = -0.5 * std::log(2.0 * std::numbers::pi * 4.0);
  CHECK(mean_log_likelihood(y, mu, sd) ==
        doctest::Approx(0.5 * (l1 + l2)).epsilon(1e-12));
}
