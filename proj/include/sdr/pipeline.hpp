#pragma once

#include "sdr/driver.hpp"
#include "sdr/gp.hpp"

namespace sdr {

struct GpPipelineResult {
  SDRModel sdr;
  GPModel gp;        // fitted on standardized targets
  Matrix Z_train;    // kernel-map projections used for the GP
  Matrix Z_test;
  Vector mean;       // test predictions on the original target scale
  Vector std;
  double test_mll = 0.0;  // average predictive log density on the test set
  double test_mse = 0.0;
  double train_lml = 0.0;  // GP training marginal likelihood
};

/// Fits the reduction on the training set, projects both splits through
/// the kernel map, and trains an exact GP on the projected training
/// embeddings. Targets are standardized with training statistics for
/// the GP (zero-mean assumption) and predictions are mapped back.
/// Requires the config to have OOS enabled with m equal to the training
/// size (m = 0 is filled in automatically).
GpPipelineResult sdr_gp_pipeline(const Matrix& X_train, const Vector& y_train,
                                 const Matrix& X_test, const Vector& y_test,
                                 SDRConfig config, const GPOptions& gp_opts);

struct GpBaselineResult {
  GPModel gp;
  Vector mean;
  Vector std;
  double test_mll = 0.0;
  double test_mse = 0.0;
  double train_lml = 0.0;
};

/// Plain ARD GP on standardized raw inputs, the reference the pipeline
/// is compared against.
GpBaselineResult raw_gp_baseline(const Matrix& X_train, const Vector& y_train,
                                 const Matrix& X_test, const Vector& y_test,
                                 const GPOptions& gp_opts);

}  // namespace sdr
