#pragma once

#include <cstdint>
#include <vector>

#include "sdr/types.hpp"

namespace sdr {

struct Dataset {
  Matrix X;
  Vector y;
};

/// S-curve in R^3: t ~ U(-3pi/2, 3pi/2), u ~ U(0, 2),
/// X = (sin t, u, sign(t)(cos t - 1)) + noise * N(0, 1); y = t.
Dataset gen_scurve(Index n, double noise, std::uint64_t seed);

/// Swiss roll in R^3: t ~ U(1.5pi, 4.5pi), u ~ U(0, 21),
/// X = (t cos t, u, t sin t) + noise * N(0, 1); y = t.
Dataset gen_swissroll(Index n, double noise, std::uint64_t seed);

/// Friedman #1: x ~ U(0,1)^10,
/// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + e,
/// e ~ N(0, noise_std^2). Columns 6-10 carry no signal.
Dataset gen_friedman(Index n, double noise_std, std::uint64_t seed);

/// One-dimensional frequency split: x ~ U(0,1),
/// y = sin(2 pi x) on [0, 0.5] and sin(16 pi x) on (0.5, 1], plus
/// N(0, noise_std^2) noise. The pieces agree at x = 0.5.
Dataset gen_piecewise(Index n, double noise_std, std::uint64_t seed);

struct TrainTestSplit {
  std::vector<Index> train_index;
  std::vector<Index> test_index;
  Matrix X_train, X_test;
  Matrix Y_train, Y_test;
};

/// Seeded shuffle split. The test side gets round(n * test_fraction)
/// rows, clamped so both sides are nonempty.
TrainTestSplit train_test_split(const Matrix& X, const Matrix& Y,
                                double test_fraction, std::uint64_t seed);

}  // namespace sdr
