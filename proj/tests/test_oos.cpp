#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sdr/kernels.hpp"
#include "sdr/oos.hpp"
#include "sdr/rng.hpp"

using namespace sdr;

namespace {

// Strictly positive definite kernel matrix: RBF on distinct points.
Matrix pd_kernel(Rng& rng, Index n, Index d, double lengthscale = 1.5) {
  Matrix X = oracle::rand_normal(rng, n, d);
  KernelSpec spec;
  spec.lengthscales = Vector::Constant(1, lengthscale);
  return eval_kernel(spec, X, X);
}

Coupling rand_coupling(Rng& rng, Index n, Index m) {
  Coupling c;
  c.h_source = oracle::rand_marginal(rng, n);
  c.T = oracle::rand_plan(rng, n, m, c.h_source);
  return c;
}

// The quadratic the map coefficients minimize:
//   mu/2 ||K L - That Z||_F^2 + lambda/2 tr(L^T K L).
double map_objective(const Matrix& K, const Matrix& That, const Matrix& Z,
                     const Matrix& L, double lambda, double mu) {
  return 0.5 * mu * (K * L - That * Z).squaredNorm() +
         0.5 * lambda * (L.transpose() * K * L).trace();
}

Matrix map_gradient(const Matrix& K, const Matrix& That, const Matrix& Z,
                    const Matrix& L, double lambda, double mu) {
  return mu * K.transpose() * (K * L - That * Z) + lambda * K * L;
}

}  // namespace

TEST_CASE("row_normalized rescales every row to unit sum") {
  Rng rng(3, stream::test);
  Coupling c = rand_coupling(rng, 7, 4);
  Matrix That = row_normalized(c.T);
  for (Index i = 0; i < That.rows(); ++i)
    CHECK(That.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  Matrix zero_row = c.T;
  zero_row.row(2).setZero();
  CHECK_THROWS_AS(row_normalized(zero_row), data_error);
}

TEST_CASE("huge ridge strength shrinks the map coefficients to zero") {
  Rng rng(5, stream::test);
  Matrix K = pd_kernel(rng, 8, 3);
  Coupling c = rand_coupling(rng, 8, 4);
  Matrix Z = oracle::rand_normal(rng, 4, 2);
  Matrix L = solve_L(K, c, Z, 1e12);
  CHECK(L.norm() <= 1e-6);
}

TEST_CASE("identity kernel and identity plan give the scalar resolvent") {
  Rng rng(6, stream::test);
  Index n = 5;
  Matrix K = Matrix::Identity(n, n);
  Coupling c;
  c.T = Matrix::Identity(n, n);
  c.h_source = Vector::Constant(n, 1.0 / double(n));
  // Rows of the identity already sum to one, so normalization keeps it.
  Matrix Z = oracle::rand_normal(rng, n, 3);
  double lambda = 0.37;
  Matrix L = solve_L(K, c, Z, lambda);
  CHECK((L - Z / (1.0 + lambda)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("map coefficients match a numeric minimizer of the quadratic") {
  Rng rng(7, stream::test);
  Index n = 6, m = 3, p = 2;
  // Short lengthscale keeps the quadratic well conditioned, so plain
  // gradient descent actually reaches the agreement tolerance.
  Matrix K = pd_kernel(rng, n, 2, 0.4);
  Coupling c = rand_coupling(rng, n, m);
  Matrix Z = oracle::rand_normal(rng, m, p);
  Matrix That = row_normalized(c.T);
  double lambda = 0.05, mu = 1.0;

  Matrix L = solve_L(K, c, Z, lambda, mu);

  auto unvec = [&](const Vector& v) {
    Matrix M(n, p);
    for (Index j = 0; j < p; ++j) M.col(j) = v.segment(j * n, n);
    return M;
  };
  auto f = [&](const Vector& v) {
    return map_objective(K, That, Z, unvec(v), lambda, mu);
  };
  auto g = [&](const Vector& v) {
    Matrix G = map_gradient(K, That, Z, unvec(v), lambda, mu);
    Vector out(n * p);
    for (Index j = 0; j < p; ++j) out.segment(j * n, n) = G.col(j);
    return out;
  };
  Vector x0 = Vector::Zero(n * p);
  Matrix L_num = unvec(oracle::minimize_gd(f, g, x0, 200000, 1e-13));
  CHECK((L - L_num).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("stationarity: the quadratic's gradient vanishes at the solution") {
  Rng rng(8, stream::test);
  for (int trial = 0; trial < 10; ++trial) {
    Index n = 4 + Index(rng.below(5));
    Index m = 2 + Index(rng.below(3));
    Matrix K = pd_kernel(rng, n, 3);
    Coupling c = rand_coupling(rng, n, m);
    Matrix Z = oracle::rand_normal(rng, m, 2);
    double lambda = rng.uniform(1e-3, 1.0);
    Matrix L = solve_L(K, c, Z, lambda);
    Matrix G = map_gradient(K, row_normalized(c.T), Z, L, lambda, 1.0);
    CHECK(G.norm() <= 1e-8 * double(n * 2));
  }
}

TEST_CASE("ridge form recovers planted coefficients as the ridge vanishes") {
  Rng rng(9, stream::test);
  Matrix K = pd_kernel(rng, 7, 2);
  Matrix c = oracle::rand_normal(rng, 7, 2);
  Matrix Z = K * c;
  Matrix L = solve_L_ridge(K, Z, 1e-10);
  CHECK((L - c).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("ridge form with identity kernel and unit ridge halves the target") {
  Rng rng(10, stream::test);
  Matrix Z = oracle::rand_normal(rng, 5, 3);
  Matrix L = solve_L_ridge(Matrix::Identity(5, 5), Z, 1.0);
  CHECK((L - Z / 2.0).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("plan solve and ridge solve agree when the plan is a permutation") {
  Rng rng(11, stream::test);
  Index n = 6;
  Matrix K = pd_kernel(rng, n, 2);
  // Reversal permutation with uniform mass 1/n per row.
  Matrix P = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) P(i, n - 1 - i) = 1.0 / double(n);
  Coupling c;
  c.T = P;
  c.h_source = Vector::Constant(n, 1.0 / double(n));
  Matrix Z = oracle::rand_normal(rng, n, 2);
  double lambda = 0.2;
  // Row normalization turns the scaled permutation into a 0/1 permutation,
  // so the plan solve must equal the ridge solve on the permuted targets.
  Matrix L_plan = solve_L(K, c, Z, lambda);
  Matrix Zp(n, 2);
  for (Index i = 0; i < n; ++i) Zp.row(i) = Z.row(n - 1 - i);
  Matrix L_ridge = solve_L_ridge(K, Zp, lambda);
  CHECK((L_plan - L_ridge).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("soft update limits: beta 0 is the identity, beta 1 lands on KL") {
  Rng rng(12, stream::test);
  Index n = 6, p = 2;
  Matrix K = pd_kernel(rng, n, 2);
  Matrix Z = oracle::rand_normal(rng, n, p);
  Matrix L = oracle::rand_normal(rng, n, p);
  CHECK((soft_update(Z, K, L, 0.0) - Z).cwiseAbs().maxCoeff() == 0.0);
  CHECK((soft_update(Z, K, L, 1.0) - K * L).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("general soft update with identity plan matches the direct solve") {
  Rng rng(13, stream::test);
  Index n = 5, p = 3;
  Matrix K = pd_kernel(rng, n, 2);
  Matrix Z = oracle::rand_normal(rng, n, p);
  Matrix L = oracle::rand_normal(rng, n, p);
  double beta = 0.7;
  Matrix That = Matrix::Identity(n, n);
  Matrix got = soft_update(Z, K, L, beta, That);
  CHECK((got - (Z + beta * K * L) / (1.0 + beta)).cwiseAbs().maxCoeff() <=
        1e-12);

  // Rectangular plan: verify against an explicit dense solve of
  // (I + beta That^T That) Z' = Z + beta That^T K L.
  Index m = 7;
  Coupling c = rand_coupling(rng, m, n);
  Matrix Tr = row_normalized(c.T);
  Matrix Zm = oracle::rand_normal(rng, n, p);
  Matrix Km = pd_kernel(rng, m, 2);
  Matrix Lm = oracle::rand_normal(rng, m, p);
  Matrix A = Matrix::Identity(n, n) + beta * Tr.transpose() * Tr;
  Matrix expect = A.fullPivLu().solve(Zm + beta * Tr.transpose() * Km * Lm);
  Matrix got2 = soft_update(Zm, Km, Lm, beta, Tr);
  CHECK((got2 - expect).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("soft update contracts toward the kernel reconstruction") {
  Rng rng(14, stream::test);
  Index n = 8, p = 2;
  Matrix K = pd_kernel(rng, n, 3);
  Matrix Z = oracle::rand_normal(rng, n, p);
  Matrix L = oracle::rand_normal(rng, n, p);
  for (double beta : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    Matrix Zp = soft_update(Z, K, L, beta);
    CHECK((Zp - K * L).norm() ==
          doctest::Approx((1.0 - beta) * (Z - K * L).norm()).epsilon(1e-12));
  }
}

TEST_CASE("projection of a training row reproduces that row of KL") {
  Rng rng(15, stream::test);
  Index n = 9, p = 2;
  OOSMap map;
  map.X_train = oracle::rand_normal(rng, n, 3);
  map.kernel.lengthscales = Vector::Constant(1, 1.2);
  map.L = oracle::rand_normal(rng, n, p);
  Matrix K = eval_kernel(map.kernel, map.X_train, map.X_train);
  Matrix Z = project(map, map.X_train.row(4));
  CHECK((Z.row(0) - (K * map.L).row(4)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection decays to zero far from every training point") {
  Rng rng(16, stream::test);
  OOSMap map;
  map.X_train = oracle::rand_normal(rng, 10, 2);
  map.kernel.lengthscales = Vector::Constant(1, 0.5);
  map.L = oracle::rand_normal(rng, 10, 2);
  Matrix far(1, 2);
  far << 100.0, -100.0;
  CHECK(project(map, far).norm() <= 1e-6);
}

TEST_CASE("projection matches the per-row kernel evaluation loop") {
  Rng rng(17, stream::test);
  Index n = 8, q = 3, d = 3, p = 2;
  OOSMap map;
  map.X_train = oracle::rand_normal(rng, n, d);
  map.kernel.lengthscales = Vector::Constant(1, 0.9);
  map.L = oracle::rand_normal(rng, n, p);
  Matrix X_new = oracle::rand_normal(rng, q, d);
  Matrix Z = project(map, X_new);
  for (Index r = 0; r < q; ++r) {
    Vector z = Vector::Zero(p);
    for (Index i = 0; i < n; ++i) {
      double k = std::exp(-(X_new.row(r) - map.X_train.row(i)).squaredNorm() /
                          (2.0 * 0.9 * 0.9));
      z += k * map.L.row(i).transpose();
    }
    CHECK((Z.row(r).transpose() - z).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("projection is linear in the coefficient matrix") {
  Rng rng(18, stream::test);
  OOSMap a;
  a.X_train = oracle::rand_normal(rng, 7, 2);
  a.kernel.lengthscales = Vector::Constant(1, 1.0);
  a.L = oracle::rand_normal(rng, 7, 3);
  OOSMap b = a;
  b.L = oracle::rand_normal(rng, 7, 3);
  OOSMap sum = a;
  sum.L = 2.0 * a.L + 3.0 * b.L;
  Matrix X_new = oracle::rand_normal(rng, 4, 2);
  Matrix combo = 2.0 * project(a, X_new) + 3.0 * project(b, X_new);
  CHECK((project(sum, X_new) - combo).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projection rejects inputs whose width differs from training") {
  Rng rng(19, stream::test);
  OOSMap map;
  map.X_train = oracle::rand_normal(rng, 5, 3);
  map.kernel.lengthscales = Vector::Constant(1, 1.0);
  map.L = oracle::rand_normal(rng, 5, 2);
  Matrix bad = oracle::rand_normal(rng, 2, 4);
  CHECK_THROWS_AS(project(map, bad), data_error);
}
