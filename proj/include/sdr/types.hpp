#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for malformed or inconsistent inputs: bad shapes, domain
/// violations, unreadable files. The CLI maps this to exit code 3.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when a computation fails numerically: non-finite values,
/// factorization failures past jitter recovery, non-convergent
/// bisection. The CLI maps this to exit code 4.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Throws numerical_error if any entry of m is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);
void require_finite(double v, const std::string& what);

/// Throws data_error unless M equals its transpose within 1e-12 relative
/// to the largest entry magnitude.
void check_symmetric(const Matrix& M, const char* what);

}  // namespace sdr
