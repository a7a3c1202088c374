#include "sdr/ot.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sdr {
namespace {

// Floor applied to prototype entries when building cross-entropy loss
// tables. Pairs with T_ij = 0 may face a zero prototype coordinate; the
// floor keeps those table entries large but finite so that linear
// algebra over the table stays well defined. Pairs that actually carry
// mass always sit far above the floor (g_jk >= T_ij y_ik / pi_j > 0).
constexpr double kProtoFloor = 1e-12;

double quadratic_min_on_unit(double a, double b) {
  // Minimizes a g^2 + b g over [0, 1].
  if (a > 0.0) return std::clamp(-b / (2.0 * a), 0.0, 1.0);
  return (a + b < 0.0) ? 1.0 : 0.0;
}

Matrix loss_table(const Matrix& Y, const Matrix& G, SupervisedLossKind kind) {
  if (kind == SupervisedLossKind::squared) {
    Vector y2 = Y.rowwise().squaredNorm();
    Vector g2 = G.rowwise().squaredNorm();
    Matrix L = -Y * G.transpose();
    L.colwise() += 0.5 * y2;
    L.rowwise() += 0.5 * g2.transpose();
    return L.cwiseMax(0.0);
  }
  // Modified cross-entropy: sum_k y_k log(y_k/g_k) + g_k - y_k, with the
  // prototype floor described above.
  Matrix Gf = G.cwiseMax(kProtoFloor);
  Vector ylogy(Y.rows());
  for (Index i = 0; i < Y.rows(); ++i) {
    double s = 0.0;
    for (Index k = 0; k < Y.cols(); ++k) {
      double y = Y(i, k);
      if (y > 0.0) s += y * std::log(y);
    }
    ylogy(i) = s;
  }
  Matrix L = -Y * Gf.array().log().matrix().transpose();
  L.colwise() += ylogy - Y.rowwise().sum();
  L.rowwise() += Gf.rowwise().sum().transpose();
  return L;
}

void check_ce_domain(const Matrix& Y) {
  if ((Y.array() < 0.0).any())
    throw data_error("modified cross-entropy requires nonnegative targets");
}

}  // namespace

void check_coupling(const Coupling& c, double tol) {
  if (c.T.rows() != c.h_source.size())
    throw data_error("coupling: row count does not match source marginal");
  if ((c.T.array() < 0.0).any())
    throw data_error("coupling: negative entries");
  double viol = (c.T.rowwise().sum() - c.h_source).cwiseAbs().maxCoeff();
  if (viol > tol)
    throw data_error("coupling: row marginal violation " +
                     std::to_string(viol) + " exceeds tolerance");
}

PrototypeTargets prototype_targets(const Matrix& T, const Matrix& Y,
                                   BregmanGenerator gen, PrototypeForm form) {
  if (T.rows() != Y.rows())
    throw data_error("prototype_targets: T and Y row counts differ");
  const Index m = T.cols(), c = Y.cols();
  const bool geometric =
      gen == BregmanGenerator::neg_entropy && form == PrototypeForm::dual;
  if (geometric && (Y.array() <= 0.0).any())
    throw data_error(
        "prototype_targets: dual neg_entropy form requires strictly "
        "positive targets");

  Vector pi = T.colwise().sum();
  Vector global = Y.colwise().mean();

  // Primal form and l2 dual: weighted arithmetic mean. Dual neg_entropy:
  // exp of the weighted mean of logs, the weighted geometric mean.
  Matrix W = geometric ? Matrix(T.transpose() * Y.array().log().matrix())
                       : Matrix(T.transpose() * Y);

  PrototypeTargets out;
  out.G.resize(m, c);
  for (Index j = 0; j < m; ++j) {
    if (pi(j) <= 0.0) {
      out.G.row(j) = global.transpose();
      out.empty_columns.push_back(j);
      continue;
    }
    if (geometric)
      out.G.row(j) = (W.row(j) / pi(j)).array().exp();
    else
      out.G.row(j) = W.row(j) / pi(j);
  }
  return out;
}

double supervised_loss(const Vector& y, const Vector& g,
                       SupervisedLossKind kind) {
  if (y.size() != g.size())
    throw data_error("supervised_loss: dimension mismatch");
  if (kind == SupervisedLossKind::squared) return 0.5 * (y - g).squaredNorm();

  if ((y.array() < 0.0).any())
    throw data_error("supervised_loss: modified cross-entropy needs y >= 0");
  if ((g.array() <= 0.0).any())
    throw data_error("supervised_loss: modified cross-entropy needs g > 0");
  double s = 0.0;
  for (Index k = 0; k < y.size(); ++k) {
    if (y(k) > 0.0) s += y(k) * std::log(y(k) / g(k));
    s += g(k) - y(k);
  }
  return s;
}

BregmanGenerator paired_generator(SupervisedLossKind kind) {
  return kind == SupervisedLossKind::squared ? BregmanGenerator::l2
                                             : BregmanGenerator::neg_entropy;
}

double supervised_cost_at(const Coupling& c, const Matrix& Y, const Matrix& G,
                          SupervisedLossKind kind) {
  if (c.T.cols() != G.rows())
    throw data_error("supervised_cost: prototype count mismatch");
  double total = 0.0;
  for (Index i = 0; i < c.T.rows(); ++i)
    for (Index j = 0; j < c.T.cols(); ++j) {
      double t = c.T(i, j);
      if (t == 0.0) continue;
      if (kind == SupervisedLossKind::squared) {
        total += t * 0.5 * (Y.row(i) - G.row(j)).squaredNorm();
      } else {
        double s = 0.0;
        for (Index k = 0; k < Y.cols(); ++k) {
          double y = Y(i, k), g = G(j, k);
          if (y > 0.0) s += y * std::log(y / g);
          s += g - y;
        }
        total += t * s;
      }
    }
  require_finite(total, "supervised_cost");
  return total;
}

double supervised_cost(const Coupling& c, const Matrix& Y,
                       SupervisedLossKind kind) {
  if (kind == SupervisedLossKind::modified_cross_entropy) check_ce_domain(Y);
  PrototypeTargets p = prototype_targets(c.T, Y, paired_generator(kind),
                                         PrototypeForm::primal);
  return supervised_cost_at(c, Y, p.G, kind);
}

double gw_cost(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
               const Coupling& c) {
  const Matrix& P = C.values;
  const Matrix& Q = Cbar.values;
  if (P.rows() != c.T.rows() || Q.rows() != c.T.cols())
    throw data_error("gw_cost: dimension mismatch");
  check_symmetric(P, "gw_cost: C");
  check_symmetric(Q, "gw_cost: Cbar");
  Vector r = c.T.rowwise().sum();
  Vector cm = c.T.colwise().sum();
  double t1 = r.dot(P.cwiseProduct(P) * r);
  double t2 = cm.dot(Q.cwiseProduct(Q) * cm);
  double cross = (P * (c.T * Q)).cwiseProduct(c.T).sum();
  return t1 + t2 - 2.0 * cross;
}

Matrix gw_grad_T(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
                 const Coupling& c) {
  const Matrix& P = C.values;
  const Matrix& Q = Cbar.values;
  if (P.rows() != c.T.rows() || Q.rows() != c.T.cols())
    throw data_error("gw_grad_T: dimension mismatch");
  check_symmetric(P, "gw_grad_T: C");
  check_symmetric(Q, "gw_grad_T: Cbar");
  Vector r = c.T.rowwise().sum();
  Vector cm = c.T.colwise().sum();
  Vector pr = P.cwiseProduct(P) * r;
  Vector qc = Q.cwiseProduct(Q) * cm;
  Matrix G = -2.0 * (P * (c.T * Q));
  G.colwise() += pr;
  G.rowwise() += qc.transpose();
  return 2.0 * G;
}

Matrix srbsfgw_gradient(const SimilarityMatrix& C, const SimilarityMatrix& Cbar,
                        const Matrix& Y, const Coupling& c, double alpha,
                        SupervisedLossKind loss) {
  if (alpha < 0.0 || alpha > 1.0)
    throw data_error("srbsfgw_gradient: alpha must lie in [0, 1]");
  Matrix grad = Matrix::Zero(c.T.rows(), c.T.cols());
  if (alpha < 1.0) {
    if (loss == SupervisedLossKind::modified_cross_entropy) check_ce_domain(Y);
    PrototypeTargets p = prototype_targets(c.T, Y, paired_generator(loss),
                                           PrototypeForm::primal);
    grad += (1.0 - alpha) * loss_table(Y, p.G, loss);
  }
  if (alpha > 0.0) grad += alpha * gw_grad_T(C, Cbar, c);
  return grad;
}

Matrix semi_relaxed_lmo(const Matrix& grad, const Vector& h) {
  if (grad.rows() != h.size())
    throw data_error("semi_relaxed_lmo: dimension mismatch");
  Matrix D = Matrix::Zero(grad.rows(), grad.cols());
  for (Index i = 0; i < grad.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < grad.cols(); ++j)
      if (grad(i, j) < grad(i, best)) best = j;
    D(i, best) = h(i);
  }
  return D;
}

SolveResult srbsfgw_solve(const SimilarityMatrix& C,
                          const SimilarityMatrix& Cbar, const Matrix& Y,
                          const Coupling& T_init, const SolveOptions& opts) {
  const Matrix& P = C.values;
  const Matrix& Q = Cbar.values;
  const Index n = T_init.T.rows(), m = T_init.T.cols();
  if (P.rows() != n || P.cols() != n || Q.rows() != m || Q.cols() != m)
    throw data_error("srbsfgw_solve: similarity dimensions do not match plan");
  if (Y.rows() != n) throw data_error("srbsfgw_solve: Y rows must match plan");
  if (opts.alpha < 0.0 || opts.alpha > 1.0)
    throw data_error("srbsfgw_solve: alpha must lie in [0, 1]");
  check_symmetric(P, "srbsfgw_solve: C");
  check_symmetric(Q, "srbsfgw_solve: Cbar");
  check_coupling(T_init, 1e-8);
  const double alpha = opts.alpha;
  const bool use_sup = alpha < 1.0;
  const bool use_gw = alpha > 0.0;
  if (use_sup && opts.loss == SupervisedLossKind::modified_cross_entropy)
    check_ce_domain(Y);

  const Vector& h = T_init.h_source;
  Matrix T = T_init.T;
  Matrix P2 = P.cwiseProduct(P);
  Matrix Q2 = Q.cwiseProduct(Q);
  const Vector P2h = P2 * h;  // row sums stay at h across all iterates

  auto gw_energy = [&](const Matrix& M, const Matrix& PMQ) {
    Vector r = M.rowwise().sum();
    Vector cm = M.colwise().sum();
    return r.dot(P2 * r) + cm.dot(Q2 * cm) - 2.0 * PMQ.cwiseProduct(M).sum();
  };

  auto prototypes = [&] {
    return prototype_targets(T, Y, paired_generator(opts.loss),
                             PrototypeForm::primal);
  };

  PrototypeTargets G = prototypes();
  Matrix PTQ;
  double egw = 0.0;
  if (use_gw) {
    PTQ = P * (T * Q);
    egw = gw_energy(T, PTQ);
  }
  Coupling cur{T, h};
  double sup = use_sup ? supervised_cost_at(cur, Y, G.G, opts.loss) : 0.0;
  double obj = (1.0 - alpha) * sup + alpha * egw;

  SolveResult res;
  res.objective_trace.push_back(obj);

  for (int it = 0; it < opts.max_iters; ++it) {
    Matrix grad, ggrad;
    if (use_gw) {
      if (it > 0) PTQ = P * (T * Q);
      Vector qc = Q2 * T.colwise().sum().transpose();
      ggrad = -2.0 * PTQ;
      ggrad.colwise() += P2h;
      ggrad.rowwise() += qc.transpose();
      ggrad *= 2.0;
    }
    if (use_sup) {
      grad = (1.0 - alpha) * loss_table(Y, G.G, opts.loss);
      if (use_gw) grad += alpha * ggrad;
    } else {
      grad = alpha * ggrad;
    }

    Matrix D = semi_relaxed_lmo(grad, h);
    Matrix Delta = D - T;
    double b = grad.cwiseProduct(Delta).sum();
    // -b is the conditional-gradient gap; a value at rounding scale
    // means no feasible descent direction remains.
    if (b >= -1e-14 * std::max(1.0, std::abs(obj))) {
      res.converged = true;
      break;
    }

    // Exact line search. With frozen prototypes the objective along
    // T + gamma Delta is quadratic: the supervised part is linear and
    // the GW energy contributes curvature E(Delta).
    double a_gw = 0.0, b_gw = 0.0;
    if (use_gw) {
      Matrix PDeltaQ = P * (D * Q) - PTQ;
      a_gw = gw_energy(Delta, PDeltaQ);
      b_gw = ggrad.cwiseProduct(Delta).sum();
    }
    double gamma = quadratic_min_on_unit(alpha * a_gw, b);
    if (gamma <= 0.0) {
      res.converged = true;
      break;
    }

    T += gamma * Delta;
    ++res.iterations;
    if (use_gw) egw += gamma * b_gw + gamma * gamma * a_gw;
    if (use_sup) {
      G = prototypes();
      cur.T = T;
      sup = supervised_cost_at(cur, Y, G.G, opts.loss);
    }
    double obj_new = (1.0 - alpha) * sup + alpha * egw;
    require_finite(obj_new, "srbsfgw_solve objective");
    double rel_dec = (obj - obj_new) / std::max(1.0, std::abs(obj));
    res.objective_trace.push_back(obj_new);
    obj = obj_new;
    if (rel_dec < opts.tol) {
      res.converged = true;
      break;
    }
  }

  if (res.iterations > 0) G = prototypes();
  res.coupling = Coupling{T, h};
  res.prototypes = G;
  return res;
}

}  // namespace sdr
