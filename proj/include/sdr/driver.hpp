#pragma once

#include <optional>
#include <vector>

#include "sdr/kernels.hpp"
#include "sdr/oos.hpp"
#include "sdr/ot.hpp"
#include "sdr/zstep.hpp"

namespace sdr {

enum class InitMode { spectral, random };

struct OOSConfig {
  double lambda = 1e-2;
  double mu = 1.0;
  double beta = 0.5;
  // RBF by default; when lengthscale_auto is set, the lengthscale is the
  // median pairwise distance of the (standardized) inputs.
  KernelSpec kernel;
  bool lengthscale_auto = true;
  // When positive, convergence stopping is disabled, exactly outer_max
  // iterations run, and beta ramps linearly to 1 over the final
  // `beta_ramp_final` of them. Ending at beta = 1 leaves Z = K L, so
  // projecting the training inputs reproduces the stored embeddings.
  int beta_ramp_final = 0;
  bool normalize_plan = true;
};

struct SDRConfig {
  double alpha = 0.2;
  double eta = 1000.0;
  Index m = 0;  // prototype count; required
  Index p = 2;  // embedding dimension
  double perplexity = 20.0;
  SupervisedLossKind loss = SupervisedLossKind::squared;
  SimilarityMode similarity = SimilarityMode::affinity;
  // Kernel on the embeddings for the alignment term; a heavy-tailed
  // rational quadratic tracks the Student-t affinity geometry.
  KernelSpec z_kernel{KernelKind::rational_quadratic, Vector::Ones(1), 1.0,
                      1.0};
  // Target kernel: delta for integer-coded labels, otherwise RBF with
  // the median-distance lengthscale. Set y_kernel_auto = false to
  // supply one explicitly.
  KernelSpec y_kernel;
  bool y_kernel_auto = true;
  InitMode init = InitMode::spectral;
  int outer_max = 30;
  int inner_max = 1000;
  double outer_tol = 1e-6;
  double lr = 1e-3;
  bool standardize_x = true;
  std::optional<OOSConfig> oos;
  std::uint64_t seed = 0;
};

struct SDRModel {
  SDRConfig config;
  KernelSpec y_kernel_used;
  ColumnStats x_stats;  // applied to inputs before everything else

  Matrix Z;           // m x p embeddings
  Coupling coupling;  // optimal plan and its source marginal
  Vector h_Z;         // learned prototype weights (plan column sums)
  Matrix G;           // prototype targets for the final plan
  std::optional<OOSMap> oos;

  std::vector<double> outer_objective;  // value at init, then per outer step
  std::vector<double> cka_trace;
  std::vector<std::vector<double>> z_traces;
  std::vector<std::vector<double>> t_traces;
  int t_step_rejections = 0;

  // Which input columns fed the model; empty when it was built directly
  // from matrices rather than a named table.
  std::vector<std::string> feature_names;
  std::vector<std::string> target_names;
};

/// Initial transport plan. Spectral mode embeds the affinity graph
/// (normalized Laplacian), k-means the spectral coordinates into m
/// groups, and routes each point's mass to its group. Random mode
/// spreads each row's mass with uniform(0.5, 1.5) draws. When m = n the
/// spectral route degenerates to singleton groups, giving the identity
/// assignment.
Coupling init_coupling(const Matrix& X, Index m, InitMode mode,
                       double perplexity, std::uint64_t seed);

/// Full block-coordinate fit. Each outer iteration runs the embedding
/// step, then (when configured) the kernel-map solve plus soft update,
/// then the transport step warm-started from the current plan. A
/// transport candidate that would raise the full objective (the
/// transport subproblem ignores the alignment term, so this can happen)
/// is rejected, keeping the recorded objective non-increasing in the
/// plain setting.
SDRModel fit(const Matrix& X, const Matrix& Y, const SDRConfig& config);

/// Standardizes with the training statistics and applies the stored
/// kernel map. The model must have been fitted with OOS enabled.
Matrix project(const SDRModel& model, const Matrix& X_new);

/// Full objective (supervised + geometric - alignment) of a fitted
/// state, recomputed from the raw inputs.
double sdr_objective(const SDRModel& model, const Matrix& X, const Matrix& Y);

struct BottleneckReport {
  // Norm of the alignment term's gradient on Z, eta * ||grad CKA||.
  double cka_grad_norm = 0.0;
  // Scaled finite-difference estimate of the supervised signal that
  // reaches Z only through the re-solved plan,
  // (1 - alpha) * ||grad_Z S(T*(Z))||.
  double supervised_grad_norm_fd = 0.0;
  int directions = 0;
  double epsilon = 0.0;
};

/// Contrasts the direct supervision channel (alignment gradient) with
/// the indirect one routed through the transport solver, by perturbing
/// Z along random directions and re-solving the plan.
BottleneckReport bottleneck_diagnostic(const SDRModel& model, const Matrix& X,
                                       const Matrix& Y, int directions = 6);

}  // namespace sdr
