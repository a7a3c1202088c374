#include "sdr/zstep.hpp"

#include <cmath>
#include <string>

namespace sdr {
namespace {

struct ZContext {
  Matrix W;         // T^T C T, the only T-coupled term the GW part needs
  Vector hZ;        // target marginal
  double constP;    // r^T (C o C) r with r the plan's row sums
  Matrix V;         // centered projected target kernel
  double Vnorm = 0.0;
  double alpha = 0.0, eta = 0.0;
  SimilarityMode mode = SimilarityMode::affinity;
  KernelSpec z_kernel;
};

void check_mode_tag(const SimilarityMatrix& C, SimilarityMode mode) {
  if (C.kind == SimilarityKind::custom) return;
  bool ok = mode == SimilarityMode::sq_dist
                ? C.kind == SimilarityKind::sq_dist
                : C.kind != SimilarityKind::sq_dist;
  if (!ok)
    throw data_error(
        "z_step: similarity matrix construction does not match the "
        "requested mode");
}

ZContext make_context(const Coupling& T, const SimilarityMatrix& C,
                      const Matrix& K_Y, const KernelSpec& z_kernel,
                      SimilarityMode mode, double alpha, double eta) {
  const Matrix& P = C.values;
  const Index n = T.T.rows();
  if (P.rows() != n || P.cols() != n)
    throw data_error("z_step: similarity matrix must be n x n");
  check_mode_tag(C, mode);

  ZContext c;
  c.alpha = alpha;
  c.eta = eta;
  c.mode = mode;
  c.z_kernel = z_kernel;
  c.hZ = T.target_marginal();
  if (alpha != 0.0) {
    c.W = T.T.transpose() * (P * T.T);
    Vector r = T.T.rowwise().sum();
    c.constP = r.dot(P.cwiseProduct(P) * r);
  } else {
    c.W = Matrix::Zero(T.T.cols(), T.T.cols());
    c.constP = 0.0;
  }
  if (eta != 0.0) {
    if (K_Y.rows() != n || K_Y.cols() != n)
      throw data_error("z_step: K_Y must be n x n");
    c.V = center_kernel(projected_target_kernel(K_Y, T.T));
    c.Vnorm = c.V.norm();
    if (c.Vnorm < 1e-30)
      throw numerical_error(
          "z_step: centered target kernel vanishes; targets are degenerate");
  }
  return c;
}

struct ZEval {
  double obj = 0.0;
  Matrix grad;
};

// Shared evaluation. All matrices here are m x m and symmetric; the
// final chain to Z uses grad = 4 (diag(B 1) - B) Z, the derivative of
// any symmetric function of pairwise squared distances.
ZEval evaluate(const Matrix& Z, const ZContext& c, bool want_grad) {
  const Index m = Z.rows();
  if (c.W.rows() != m && c.alpha != 0.0)
    throw data_error("z_step: Z rows must match plan columns");
  Matrix D = pairwise_sq_dists(Z);
  Matrix B = Matrix::Zero(m, m);
  ZEval e;

  if (c.alpha != 0.0) {
    Matrix Q, A;
    double e_gw = 0.0;
    if (c.mode == SimilarityMode::sq_dist) {
      Q = D;
      e_gw = c.constP + c.hZ.dot(Q.cwiseProduct(Q) * c.hZ) -
             2.0 * c.W.cwiseProduct(Q).sum();
      if (want_grad) {
        A = 2.0 * (Q.cwiseProduct(c.hZ * c.hZ.transpose()) - c.W);
        B += c.alpha * A;
      }
    } else {
      Matrix q = (1.0 + D.array()).inverse();
      q.diagonal().setZero();
      double s = q.sum();
      if (s <= 0.0)
        throw numerical_error("z_step: degenerate Student-t affinity");
      Q = q / s;
      e_gw = c.constP + c.hZ.dot(Q.cwiseProduct(Q) * c.hZ) -
             2.0 * c.W.cwiseProduct(Q).sum();
      if (want_grad) {
        A = 2.0 * (Q.cwiseProduct(c.hZ * c.hZ.transpose()) - c.W);
        A.diagonal().setZero();  // Q's diagonal is pinned at zero
        double aq = A.cwiseProduct(Q).sum();
        // dE/dd = -q^2 o (A - <A,Q>) / s through the normalized affinity
        Matrix dq = (A.array() - aq) / s;
        B += c.alpha * (-q.array().square() * dq.array()).matrix();
      }
    }
    e.obj += c.alpha * e_gw;
  }

  if (c.eta != 0.0) {
    Matrix KZ = eval_kernel(c.z_kernel, Z, Z);
    Matrix U = center_kernel(KZ);
    double Un = U.norm();
    if (Un < 1e-30)
      throw numerical_error("z_step: centered embedding kernel vanishes");
    double ip = U.cwiseProduct(c.V).sum();
    double alignment = ip / (Un * c.Vnorm);
    e.obj -= c.eta * alignment;
    if (want_grad) {
      Matrix dK = c.V / (Un * c.Vnorm) - (ip / (Un * Un * Un * c.Vnorm)) * U;
      Matrix dKdd;
      const double l = c.z_kernel.lengthscales(0);
      if (c.z_kernel.kind == KernelKind::rational_quadratic) {
        const double a = c.z_kernel.rq_alpha;
        Matrix base = 1.0 + (D / (2.0 * a * l * l)).array();
        dKdd = -c.z_kernel.signal_variance / (2.0 * l * l) *
               base.array().pow(-a - 1.0);
      } else if (c.z_kernel.kind == KernelKind::rbf) {
        dKdd = -KZ / (2.0 * l * l);
      } else {
        throw data_error(
            "z_step: embedding kernel must be rbf or rational_quadratic");
      }
      B -= c.eta * dK.cwiseProduct(dKdd);
    }
  }

  if (want_grad) {
    Vector brow = B.rowwise().sum();
    e.grad = 4.0 * (brow.asDiagonal() * Z - B * Z);
  }
  return e;
}

}  // namespace

Matrix projected_target_kernel(const Matrix& K_Y, const Matrix& T) {
  if (K_Y.rows() != T.rows() || K_Y.cols() != T.rows())
    throw data_error("projected_target_kernel: K_Y must be n x n");
  return T.transpose() * K_Y * T;
}

double cka(const Matrix& K1, const Matrix& K2) {
  if (K1.rows() != K1.cols() || K2.rows() != K2.cols() ||
      K1.rows() != K2.rows())
    throw data_error("cka: kernels must be square and equally sized");
  Matrix U = center_kernel(K1);
  Matrix V = center_kernel(K2);
  double un = U.norm(), vn = V.norm();
  if (un < 1e-30 || vn < 1e-30)
    throw numerical_error("cka: centered kernel vanishes");
  return U.cwiseProduct(V).sum() / (un * vn);
}

double z_objective(const Matrix& Z, const Coupling& T,
                   const SimilarityMatrix& C, const Matrix& K_Y,
                   const KernelSpec& z_kernel, SimilarityMode mode,
                   double alpha, double eta) {
  ZContext ctx = make_context(T, C, K_Y, z_kernel, mode, alpha, eta);
  double obj = evaluate(Z, ctx, false).obj;
  require_finite(obj, "z_objective");
  return obj;
}

Matrix z_gradient(const Matrix& Z, const Coupling& T,
                  const SimilarityMatrix& C, const Matrix& K_Y,
                  const KernelSpec& z_kernel, SimilarityMode mode,
                  double alpha, double eta) {
  ZContext ctx = make_context(T, C, K_Y, z_kernel, mode, alpha, eta);
  Matrix g = evaluate(Z, ctx, true).grad;
  require_finite(g, "z_gradient");
  return g;
}

EmbeddingState run_z_loop_custom(
    const Matrix& Z0, const std::function<double(const Matrix&)>& objective,
    const std::function<Matrix(const Matrix&)>& gradient,
    const ZLoopOptions& opts) {
  if (opts.max_steps < 1)
    throw data_error("run_z_loop: max_steps must be at least 1");
  EmbeddingState st;
  st.Z = Z0;
  st.best_objective = objective(Z0);
  require_finite(st.best_objective, "z objective at init");

  Matrix Z = Z0;
  AdamState adam = make_adam(Z.rows(), Z.cols(), opts.lr);
  for (int t = 0; t < opts.max_steps; ++t) {
    adam_step(adam, Z, gradient(Z));
    double obj = objective(Z);
    require_finite(obj, "z objective");
    st.trace.push_back(obj);
    if (obj < st.best_objective) {
      st.best_objective = obj;
      st.Z = Z;
    }
    if (static_cast<int>(st.trace.size()) > opts.window) {
      double prev = st.trace[st.trace.size() - 1 - opts.window];
      if (std::abs(prev - obj) <= opts.tol * std::max(1.0, std::abs(prev)))
        break;
    }
  }
  return st;
}

EmbeddingState run_z_loop(const Matrix& Z0, const Coupling& T,
                          const SimilarityMatrix& C, const Matrix& K_Y,
                          const KernelSpec& z_kernel, SimilarityMode mode,
                          double alpha, double eta, const ZLoopOptions& opts) {
  ZContext ctx = make_context(T, C, K_Y, z_kernel, mode, alpha, eta);
  auto obj = [&ctx](const Matrix& Z) { return evaluate(Z, ctx, false).obj; };
  auto grad = [&ctx](const Matrix& Z) { return evaluate(Z, ctx, true).grad; };
  return run_z_loop_custom(Z0, obj, grad, opts);
}

}  // namespace sdr
