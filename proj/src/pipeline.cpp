#include "sdr/pipeline.hpp"

#include <cmath>

namespace sdr {

namespace {

struct TargetScale {
  double mean = 0.0;
  double stdev = 1.0;
};

TargetScale fit_target_scale(const Vector& y) {
  TargetScale s;
  s.mean = y.mean();
  s.stdev = std::sqrt((y.array() - s.mean).square().mean());
  if (s.stdev <= 0.0)
    throw data_error("gp pipeline: training target is constant");
  return s;
}

// Back-transforms standardized GP predictions and scores them.
void score_predictions(const Vector& mean_s, const Vector& var_s,
                       const TargetScale& scale, const Vector& y_test,
                       Vector& mean, Vector& std_out, double& mll,
                       double& mse) {
  mean = (scale.mean + scale.stdev * mean_s.array()).matrix();
  std_out = (scale.stdev * var_s.array().max(1e-18).sqrt()).matrix();
  mll = mean_log_likelihood(y_test, mean, std_out);
  mse = (y_test - mean).squaredNorm() / double(y_test.size());
}

}  // namespace

GpPipelineResult sdr_gp_pipeline(const Matrix& X_train, const Vector& y_train,
                                 const Matrix& X_test, const Vector& y_test,
                                 SDRConfig config, const GPOptions& gp_opts) {
  const Index n = X_train.rows();
  if (y_train.size() != n)
    throw data_error("gp pipeline: training target length mismatch");
  if (y_test.size() != X_test.rows())
    throw data_error("gp pipeline: test target length mismatch");
  if (!config.oos)
    throw data_error("gp pipeline: config must have OOS enabled");
  if (config.m == 0) config.m = n;
  if (config.m != n)
    throw data_error("gp pipeline: requires m equal to the training size");

  TargetScale scale = fit_target_scale(y_train);
  Vector ys = ((y_train.array() - scale.mean) / scale.stdev).matrix();

  GpPipelineResult out;
  out.sdr = fit(X_train, Matrix(ys), config);
  out.Z_train = project(out.sdr, X_train);
  out.Z_test = project(out.sdr, X_test);

  out.gp = gp_fit(out.Z_train, ys, gp_opts);
  out.train_lml = out.gp.lml;
  auto [mean_s, var_s] = gp_predict(out.gp, out.Z_test);
  score_predictions(mean_s, var_s, scale, y_test, out.mean, out.std,
                    out.test_mll, out.test_mse);
  return out;
}

GpBaselineResult raw_gp_baseline(const Matrix& X_train, const Vector& y_train,
                                 const Matrix& X_test, const Vector& y_test,
                                 const GPOptions& gp_opts) {
  if (y_train.size() != X_train.rows())
    throw data_error("gp baseline: training target length mismatch");
  if (y_test.size() != X_test.rows())
    throw data_error("gp baseline: test target length mismatch");

  ColumnStats stats = fit_standardize(X_train);
  Matrix Xs_train = apply_standardize(X_train, stats);
  Matrix Xs_test = apply_standardize(X_test, stats);

  TargetScale scale = fit_target_scale(y_train);
  Vector ys = ((y_train.array() - scale.mean) / scale.stdev).matrix();

  GpBaselineResult out;
  out.gp = gp_fit(Xs_train, ys, gp_opts);
  out.train_lml = out.gp.lml;
  auto [mean_s, var_s] = gp_predict(out.gp, Xs_test);
  score_predictions(mean_s, var_s, scale, y_test, out.mean, out.std,
                    out.test_mll, out.test_mse);
  return out;
}

}  // namespace sdr
