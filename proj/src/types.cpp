#include "sdr/types.hpp"

#include <cmath>

namespace sdr {

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite())
    throw numerical_error("non-finite values in " + what);
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v))
    throw numerical_error("non-finite value in " + what);
}

void check_symmetric(const Matrix& M, const char* what) {
  double scale = 1.0 + M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw data_error(std::string(what) + " must be symmetric");
}

}  // namespace sdr
