#include "sdr/driver.hpp"

#include <algorithm>
#include <cmath>

#include "sdr/metrics.hpp"
#include "sdr/rng.hpp"

namespace sdr {

namespace {

SimilarityMatrix input_similarity(const Matrix& X, const SDRConfig& cfg) {
  Matrix D = pairwise_sq_dists(X);
  if (cfg.similarity == SimilarityMode::affinity)
    return entropic_affinity(D, cfg.perplexity);
  return SimilarityMatrix{std::move(D), SimilarityKind::sq_dist};
}

SimilarityMatrix embedding_similarity(const Matrix& Z, SimilarityMode mode) {
  if (mode == SimilarityMode::affinity) return student_t_affinity(Z);
  return SimilarityMatrix{pairwise_sq_dists(Z), SimilarityKind::sq_dist};
}

bool integer_labels(const Matrix& Y) {
  if (Y.cols() != 1) return false;
  for (Index i = 0; i < Y.rows(); ++i)
    if (std::abs(Y(i, 0) - std::llround(Y(i, 0))) > 1e-9) return false;
  return true;
}

KernelSpec resolve_y_kernel(const Matrix& Y, const SDRConfig& cfg) {
  if (!cfg.y_kernel_auto) return cfg.y_kernel;
  KernelSpec spec;
  if (integer_labels(Y)) {
    spec.kind = KernelKind::delta;
  } else {
    spec.kind = KernelKind::rbf;
    spec.lengthscales = Vector::Constant(1, median_lengthscale(Y));
  }
  return spec;
}

PrototypeTargets prototypes_for(const Coupling& c, const Matrix& Y,
                                SupervisedLossKind loss) {
  return prototype_targets(c.T, Y, paired_generator(loss),
                           PrototypeForm::primal);
}

struct ObjectiveParts {
  double supervised = 0.0;
  double gw = 0.0;
  double cka_value = 0.0;
  double total(double alpha, double eta) const {
    return (1.0 - alpha) * supervised + alpha * gw - eta * cka_value;
  }
};

ObjectiveParts objective_parts(const Matrix& Z, const Coupling& c,
                               const SimilarityMatrix& C, const Matrix& K_Y,
                               const Matrix& Y, const SDRConfig& cfg) {
  ObjectiveParts parts;
  parts.supervised = supervised_cost(c, Y, cfg.loss);
  SimilarityMatrix Cbar = embedding_similarity(Z, cfg.similarity);
  parts.gw = gw_cost(C, Cbar, c);
  Matrix K_Z = eval_kernel(cfg.z_kernel, Z, Z);
  parts.cka_value = cka(K_Z, projected_target_kernel(K_Y, c.T));
  return parts;
}

// Mass-weighted positions of each plan column in the principal
// component coordinates, plus a small seeded jitter so coincident
// prototypes never produce a degenerate alignment kernel. Dimensions
// past the available principal components start at jitter scale.
Matrix initial_embeddings(const Matrix& X, const Coupling& c, Index p,
                          std::uint64_t seed) {
  const Index m = c.T.cols();
  Index avail = std::min({p, X.cols(), X.rows()});
  Matrix Z = Matrix::Zero(m, p);
  if (avail > 0) {
    PcaResult pca = pca_reduce(X, avail);
    Vector mass = c.T.colwise().sum();
    Matrix weighted = c.T.transpose() * pca.coords;  // m x avail
    Vector global = pca.coords.colwise().mean();
    for (Index j = 0; j < m; ++j) {
      if (mass(j) > 0.0)
        Z.block(j, 0, 1, avail) = weighted.row(j) / mass(j);
      else
        Z.block(j, 0, 1, avail) = global.transpose();
    }
  }
  Rng rng(seed, stream::z_init);
  for (Index j = 0; j < m; ++j)
    for (Index d = 0; d < p; ++d) Z(j, d) += 0.01 * rng.normal();
  return Z;
}

void validate(const Matrix& X, const Matrix& Y, const SDRConfig& cfg) {
  const Index n = X.rows();
  if (n < 2) throw data_error("fit: need at least two samples");
  if (Y.rows() != n) throw data_error("fit: X and Y row counts differ");
  if (cfg.m < 1 || cfg.m > n)
    throw data_error("fit: m must lie in [1, sample count]");
  if (cfg.p < 1) throw data_error("fit: p must be positive");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
    throw data_error("fit: alpha must lie in [0, 1]");
  if (cfg.eta < 0.0) throw data_error("fit: eta must be nonnegative");
  if (cfg.outer_max < 1 || cfg.inner_max < 1)
    throw data_error("fit: iteration limits must be positive");
  if (cfg.lr <= 0.0) throw data_error("fit: lr must be positive");
  if (cfg.similarity == SimilarityMode::affinity &&
      !(cfg.perplexity > 1.0 && cfg.perplexity < double(n)))
    throw data_error("fit: perplexity must lie in (1, n)");
  if (cfg.oos) {
    if (cfg.oos->lambda <= 0.0)
      throw data_error("fit: oos lambda must be positive");
    if (!(cfg.oos->beta >= 0.0 && cfg.oos->beta <= 1.0))
      throw data_error("fit: oos beta must lie in [0, 1]");
    if (cfg.oos->beta_ramp_final < 0 ||
        cfg.oos->beta_ramp_final > cfg.outer_max)
      throw data_error("fit: beta_ramp_final must lie in [0, outer_max]");
  }
  require_finite(X, "fit inputs");
  require_finite(Y, "fit targets");
}

}  // namespace

Coupling init_coupling(const Matrix& X, Index m, InitMode mode,
                       double perplexity, std::uint64_t seed) {
  const Index n = X.rows();
  if (m < 1 || m > n)
    throw data_error("init_coupling: m must lie in [1, sample count]");
  Vector h = Vector::Constant(n, 1.0 / double(n));

  Coupling c;
  c.h_source = h;
  c.T = Matrix::Zero(n, m);

  if (mode == InitMode::random) {
    Rng rng(seed, stream::coupling_init);
    for (Index i = 0; i < n; ++i) {
      double row_sum = 0.0;
      for (Index j = 0; j < m; ++j) {
        c.T(i, j) = rng.uniform(0.5, 1.5);
        row_sum += c.T(i, j);
      }
      c.T.row(i) *= h(i) / row_sum;
    }
    return c;
  }

  // Spectral route. With m = n every point is its own group, so skip
  // the eigendecomposition and assign directly.
  std::vector<int> groups(n);
  if (m == n) {
    for (Index i = 0; i < n; ++i) groups[i] = int(i);
  } else {
    SimilarityMatrix aff = entropic_affinity(pairwise_sq_dists(X), perplexity);
    Vector deg = aff.values.rowwise().sum();
    Vector inv_sqrt = deg.array().max(1e-300).rsqrt();
    Matrix norm_adj =
        inv_sqrt.asDiagonal() * aff.values * inv_sqrt.asDiagonal();
    // Smallest eigenvectors of the normalized Laplacian are the largest
    // of the normalized adjacency.
    Eigen::SelfAdjointEigenSolver<Matrix> es(norm_adj);
    if (es.info() != Eigen::Success)
      throw numerical_error("init_coupling: spectral decomposition failed");
    Matrix emb = es.eigenvectors().rightCols(m);
    for (Index i = 0; i < n; ++i) {
      double len = emb.row(i).norm();
      if (len > 0.0) emb.row(i) /= len;
    }
    KMeansResult km = kmeans(emb, int(m), 50, seed);
    std::vector<bool> used(m, false);
    for (int g : km.labels) used[g] = true;
    if (std::find(used.begin(), used.end(), false) != used.end())
      throw numerical_error(
          "init_coupling: spectral clustering left an empty group");
    groups = km.labels;
  }
  for (Index i = 0; i < n; ++i) c.T(i, groups[i]) = h(i);
  return c;
}

SDRModel fit(const Matrix& X_raw, const Matrix& Y, const SDRConfig& cfg) {
  validate(X_raw, Y, cfg);

  SDRModel model;
  model.config = cfg;
  model.x_stats = cfg.standardize_x
                      ? fit_standardize(X_raw)
                      : ColumnStats{Vector::Zero(X_raw.cols()),
                                    Vector::Ones(X_raw.cols())};
  Matrix X = apply_standardize(X_raw, model.x_stats);

  SimilarityMatrix C = input_similarity(X, cfg);
  model.y_kernel_used = resolve_y_kernel(Y, cfg);
  Matrix K_Y = eval_kernel(model.y_kernel_used, Y, Y);

  Coupling T = init_coupling(X, cfg.m, cfg.init, cfg.perplexity, cfg.seed);
  Matrix Z = initial_embeddings(X, T, cfg.p, cfg.seed);

  Matrix K;  // OOS kernel Gram matrix over the training inputs
  KernelSpec oos_kernel;
  if (cfg.oos) {
    oos_kernel = cfg.oos->kernel;
    if (cfg.oos->lengthscale_auto)
      oos_kernel.lengthscales = Vector::Constant(1, median_lengthscale(X));
    K = eval_kernel(oos_kernel, X, X);
  }

  ZLoopOptions zopts;
  zopts.lr = cfg.lr;
  zopts.max_steps = cfg.inner_max;

  SolveOptions topts;
  topts.alpha = cfg.alpha;
  topts.loss = cfg.loss;
  topts.max_iters = cfg.inner_max;

  double current = objective_parts(Z, T, C, K_Y, Y, cfg).total(cfg.alpha,
                                                               cfg.eta);
  require_finite(current, "fit: initial objective");
  model.outer_objective.push_back(current);

  const bool ramp = cfg.oos && cfg.oos->beta_ramp_final > 0;
  Matrix L;
  for (int outer = 0; outer < cfg.outer_max; ++outer) {
    EmbeddingState zs = run_z_loop(Z, T, C, K_Y, cfg.z_kernel, cfg.similarity,
                                   cfg.alpha, cfg.eta, zopts);
    Z = zs.Z;
    model.z_traces.push_back(std::move(zs.trace));

    if (cfg.oos) {
      double beta = cfg.oos->beta;
      if (ramp) {
        int start = cfg.outer_max - cfg.oos->beta_ramp_final;
        if (outer >= start)
          beta += (1.0 - beta) * double(outer - start + 1) /
                  double(cfg.oos->beta_ramp_final);
      }
      L = solve_L(K, T, Z, cfg.oos->lambda, cfg.oos->mu,
                  cfg.oos->normalize_plan);
      if (cfg.m == X.rows()) {
        Z = soft_update(Z, K, L, beta);
      } else {
        Matrix That =
            cfg.oos->normalize_plan ? row_normalized(T.T) : T.T;
        Z = soft_update(Z, K, L, beta, That);
      }
    }

    SimilarityMatrix Cbar = embedding_similarity(Z, cfg.similarity);
    SolveResult ts = srbsfgw_solve(C, Cbar, Y, T, topts);
    model.t_traces.push_back(std::move(ts.objective_trace));

    // The transport step ignores the alignment term; accept its plan
    // only if the full objective does not get worse. The Z-dependent
    // pieces are shared between the two evaluations.
    Matrix K_Z = eval_kernel(cfg.z_kernel, Z, Z);
    auto parts_for = [&](const Coupling& plan) {
      ObjectiveParts parts;
      parts.supervised = supervised_cost(plan, Y, cfg.loss);
      parts.gw = gw_cost(C, Cbar, plan);
      parts.cka_value = cka(K_Z, projected_target_kernel(K_Y, plan.T));
      return parts;
    };
    ObjectiveParts with_old = parts_for(T);
    ObjectiveParts with_new = parts_for(ts.coupling);
    if (with_new.total(cfg.alpha, cfg.eta) <=
        with_old.total(cfg.alpha, cfg.eta)) {
      T = ts.coupling;
      current = with_new.total(cfg.alpha, cfg.eta);
      model.cka_trace.push_back(with_new.cka_value);
    } else {
      ++model.t_step_rejections;
      current = with_old.total(cfg.alpha, cfg.eta);
      model.cka_trace.push_back(with_old.cka_value);
    }
    require_finite(current, "fit: outer objective");
    model.outer_objective.push_back(current);

    double prev = model.outer_objective[model.outer_objective.size() - 2];
    bool settled =
        std::abs(prev - current) <= cfg.outer_tol * std::max(1.0, std::abs(prev));
    if (settled && !ramp) break;
  }

  model.Z = Z;
  model.coupling = T;
  model.h_Z = T.target_marginal();
  model.G = prototypes_for(T, Y, cfg.loss).G;
  if (cfg.oos) {
    OOSMap map;
    // The in-loop solve predates the last soft update and transport
    // step, so refresh the coefficients against the final plan and
    // embeddings. Under the beta ramp the last update already left
    // Z = K L exactly; keep that L so the reconstruction stays exact.
    map.L = ramp ? L
                 : solve_L(K, T, Z, cfg.oos->lambda, cfg.oos->mu,
                           cfg.oos->normalize_plan);
    map.X_train = X;
    map.kernel = oos_kernel;
    map.lambda = cfg.oos->lambda;
    map.beta = cfg.oos->beta;
    map.mu = cfg.oos->mu;
    model.oos = std::move(map);
  }
  return model;
}

Matrix project(const SDRModel& model, const Matrix& X_new) {
  if (!model.oos)
    throw data_error("project: model was fitted without an OOS map");
  return project(*model.oos, apply_standardize(X_new, model.x_stats));
}

double sdr_objective(const SDRModel& model, const Matrix& X, const Matrix& Y) {
  Matrix Xs = apply_standardize(X, model.x_stats);
  SimilarityMatrix C = input_similarity(Xs, model.config);
  Matrix K_Y = eval_kernel(model.y_kernel_used, Y, Y);
  return objective_parts(model.Z, model.coupling, C, K_Y, Y, model.config)
      .total(model.config.alpha, model.config.eta);
}

BottleneckReport bottleneck_diagnostic(const SDRModel& model, const Matrix& X,
                                       const Matrix& Y, int directions) {
  const SDRConfig& cfg = model.config;
  Matrix Xs = apply_standardize(X, model.x_stats);
  SimilarityMatrix C = input_similarity(Xs, cfg);
  Matrix K_Y = eval_kernel(model.y_kernel_used, Y, Y);

  BottleneckReport report;
  report.directions = directions;

  // Direct channel: gradient of the alignment term alone.
  Matrix g_cka = z_gradient(model.Z, model.coupling, C, K_Y, cfg.z_kernel,
                            cfg.similarity, 0.0, cfg.eta);
  report.cka_grad_norm = g_cka.norm();

  // Indirect channel: S(T*(Z)) probed along random directions. For unit
  // directions U on the Frobenius sphere, E[(grad . U)^2] = ||grad||^2 /
  // (m p), so the squared norm is estimated by the scaled mean square of
  // the directional derivatives.
  const Index m = model.Z.rows();
  const Index p = model.Z.cols();
  double eps = 1e-4 * (1.0 + model.Z.cwiseAbs().maxCoeff());
  report.epsilon = eps;

  SolveOptions topts;
  topts.alpha = cfg.alpha;
  topts.loss = cfg.loss;
  topts.max_iters = cfg.inner_max;

  auto supervised_at = [&](const Matrix& Z) {
    SimilarityMatrix Cbar = embedding_similarity(Z, cfg.similarity);
    SolveResult sr = srbsfgw_solve(C, Cbar, Y, model.coupling, topts);
    return supervised_cost(sr.coupling, Y, cfg.loss);
  };

  Rng rng(cfg.seed, stream::diagnostic);
  double sum_sq = 0.0;
  for (int k = 0; k < directions; ++k) {
    Matrix U(m, p);
    for (Index i = 0; i < m; ++i)
      for (Index d = 0; d < p; ++d) U(i, d) = rng.normal();
    U /= U.norm();
    double forward = supervised_at(model.Z + eps * U);
    double backward = supervised_at(model.Z - eps * U);
    double deriv = (forward - backward) / (2.0 * eps);
    sum_sq += deriv * deriv;
  }
  double norm_sq = double(m * p) * sum_sq / double(directions);
  report.supervised_grad_norm_fd = (1.0 - cfg.alpha) * std::sqrt(norm_sq);
  return report;
}

}  // namespace sdr
