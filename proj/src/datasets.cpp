#include "sdr/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdr/rng.hpp"

namespace sdr {

namespace {

void check_gen_args(Index n, double noise, const char* name) {
  if (n < 1) throw data_error(std::string(name) + ": n must be positive");
  if (noise < 0.0)
    throw data_error(std::string(name) + ": noise must be nonnegative");
}

}  // namespace

Dataset gen_scurve(Index n, double noise, std::uint64_t seed) {
  check_gen_args(n, noise, "gen_scurve");
  Rng rng(seed, stream::dataset);
  Dataset d;
  d.X.resize(n, 3);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double t = rng.uniform(-1.5 * M_PI, 1.5 * M_PI);
    double u = rng.uniform(0.0, 2.0);
    double sign = t < 0.0 ? -1.0 : 1.0;
    d.X(i, 0) = std::sin(t);
    d.X(i, 1) = u;
    d.X(i, 2) = sign * (std::cos(t) - 1.0);
    if (noise > 0.0)
      for (Index c = 0; c < 3; ++c) d.X(i, c) += noise * rng.normal();
    d.y(i) = t;
  }
  return d;
}

Dataset gen_swissroll(Index n, double noise, std::uint64_t seed) {
  check_gen_args(n, noise, "gen_swissroll");
  Rng rng(seed, stream::dataset);
  Dataset d;
  d.X.resize(n, 3);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double t = rng.uniform(1.5 * M_PI, 4.5 * M_PI);
    double u = rng.uniform(0.0, 21.0);
    d.X(i, 0) = t * std::cos(t);
    d.X(i, 1) = u;
    d.X(i, 2) = t * std::sin(t);
    if (noise > 0.0)
      for (Index c = 0; c < 3; ++c) d.X(i, c) += noise * rng.normal();
    d.y(i) = t;
  }
  return d;
}

Dataset gen_friedman(Index n, double noise_std, std::uint64_t seed) {
  check_gen_args(n, noise_std, "gen_friedman");
  Rng rng(seed, stream::dataset);
  Dataset d;
  d.X.resize(n, 10);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < 10; ++c) d.X(i, c) = rng.uniform();
    d.y(i) = 10.0 * std::sin(M_PI * d.X(i, 0) * d.X(i, 1)) +
             20.0 * std::pow(d.X(i, 2) - 0.5, 2) + 10.0 * d.X(i, 3) +
             5.0 * d.X(i, 4);
    if (noise_std > 0.0) d.y(i) += noise_std * rng.normal();
  }
  return d;
}

Dataset gen_piecewise(Index n, double noise_std, std::uint64_t seed) {
  check_gen_args(n, noise_std, "gen_piecewise");
  Rng rng(seed, stream::dataset);
  Dataset d;
  d.X.resize(n, 1);
  d.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    double x = rng.uniform();
    d.X(i, 0) = x;
    d.y(i) = x <= 0.5 ? std::sin(2.0 * M_PI * x) : std::sin(16.0 * M_PI * x);
    if (noise_std > 0.0) d.y(i) += noise_std * rng.normal();
  }
  return d;
}

TrainTestSplit train_test_split(const Matrix& X, const Matrix& Y,
                                double test_fraction, std::uint64_t seed) {
  const Index n = X.rows();
  if (Y.rows() != n)
    throw data_error("train_test_split: X and Y row counts differ");
  if (n < 2) throw data_error("train_test_split: need at least two rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw data_error("train_test_split: test_fraction must be in (0, 1)");

  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index(0));
  Rng rng(seed, stream::split);
  for (Index i = n - 1; i > 0; --i) {
    Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(idx[i], idx[j]);
  }

  Index n_test = static_cast<Index>(std::llround(test_fraction * double(n)));
  n_test = std::clamp(n_test, Index(1), n - 1);

  TrainTestSplit s;
  s.test_index.assign(idx.begin(), idx.begin() + n_test);
  s.train_index.assign(idx.begin() + n_test, idx.end());
  s.X_train.resize(s.train_index.size(), X.cols());
  s.Y_train.resize(s.train_index.size(), Y.cols());
  s.X_test.resize(n_test, X.cols());
  s.Y_test.resize(n_test, Y.cols());
  for (size_t i = 0; i < s.train_index.size(); ++i) {
    s.X_train.row(i) = X.row(s.train_index[i]);
    s.Y_train.row(i) = Y.row(s.train_index[i]);
  }
  for (Index i = 0; i < n_test; ++i) {
    s.X_test.row(i) = X.row(s.test_index[i]);
    s.Y_test.row(i) = Y.row(s.test_index[i]);
  }
  return s;
}

}  // namespace sdr
