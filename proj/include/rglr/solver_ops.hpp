#pragma once

#include "rglr/normals.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace rglr {

/// Operators of the stacked quadratic prior over one color's nodes:
///   Ltilde = Ax^T L Ax + Ay^T L Ay + Az^T L Az   (3n x 3n, PSD, matrix-free)
///   lbar   = Ax^T L bx + Ay^T L by + Az^T L bz   (3n)
/// plus the certified condition-number bound for I + gamma * Ltilde.
struct SystemOperators {
  int n = 0;
  double gamma = 0.0;
  Eigen::SparseMatrix<double> L;        // color-graph Laplacian, n x n
  std::vector<Mat3> A;                  // per-node model matrices
  Eigen::MatrixXd B;                    // n x 3, rows are b_i
  Eigen::MatrixXd LB;                   // L * B, cached
  Eigen::VectorXd l_bar;                // stacked lbar, 3n
  double rho_max = 0.0;                 // max weighted degree of the color graph
  double min_anchor = 0.0;              // min_i |p_i - p_k|^2 sin^2(beta_i)
  double cond_bound = 0.0;              // 1 + 6 gamma rho_max / min_anchor

  /// out = Ltilde * v. Scratch matrices are reused across calls.
  void apply_ltilde(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    M_.resize(n, 3);
    for (int i = 0; i < n; ++i) M_.row(i) = (A[i] * v.segment<3>(3 * i)).transpose();
    U_.noalias() = L * M_;
    out.resize(3 * n);
    for (int i = 0; i < n; ++i)
      out.segment<3>(3 * i) = A[i].transpose() * U_.row(i).transpose();
  }

  /// out = (I + gamma * Ltilde) * v.
  void apply_system(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    apply_ltilde(v, out);
    out = v + gamma * out;
  }

  /// Value of the quadratic prior f(p) = sum_c (A_c p + b_c)^T L (A_c p + b_c).
  double prior_value(const Eigen::VectorXd& p) const {
    M_.resize(n, 3);
    for (int i = 0; i < n; ++i)
      M_.row(i) = (A[i] * p.segment<3>(3 * i) + B.row(i).transpose()).transpose();
    U_.noalias() = L * M_;
    return (M_.array() * U_.array()).sum();
  }

 private:
  mutable Eigen::MatrixXd M_, U_;
};

/// Assembles the solver operators for one color graph and its normal models.
inline SystemOperators assemble(const Graph& graph, std::span<const NormalModel> models,
                                double gamma) {
  if (graph.n != static_cast<int>(models.size()))
    throw ConfigError("assemble: graph size does not match model count");
  SystemOperators ops;
  ops.n = graph.n;
  ops.gamma = gamma;
  ops.L = laplacian(graph);
  ops.A.resize(ops.n);
  ops.B.resize(ops.n, 3);
  ops.min_anchor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ops.n; ++i) {
    ops.A[i] = models[i].A;
    ops.B.row(i) = models[i].b.transpose();
    const double sin_beta = std::sin(models[i].beta_deg * M_PI / 180.0);
    const double anchor = models[i].dist_ik * models[i].dist_ik * sin_beta * sin_beta;
    if (models[i].A.squaredNorm() > 0.0)  // skip disabled models
      ops.min_anchor = std::min(ops.min_anchor, anchor);
  }
  ops.LB.noalias() = ops.L * ops.B;
  ops.l_bar.resize(3 * ops.n);
  for (int i = 0; i < ops.n; ++i)
    ops.l_bar.segment<3>(3 * i) = ops.A[i].transpose() * ops.LB.row(i).transpose();
  ops.rho_max = spectral_bounds(graph).rho_max;
  ops.cond_bound = std::isfinite(ops.min_anchor) && ops.min_anchor > 0.0
                       ? 1.0 + 6.0 * gamma * ops.rho_max / ops.min_anchor
                       : std::numeric_limits<double>::infinity();
  return ops;
}

// ---------------------------------------------------------------------------
// Conjugate gradient on (I + gamma*Ltilde) p = q - gamma*lbar
// ---------------------------------------------------------------------------

struct CgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_norms;       // |r_k| per iteration, k = 0 first
  std::vector<Eigen::VectorXd> iterates;    // filled only when requested
};

inline CgResult solve_inner_cg(const SystemOperators& ops, const Eigen::VectorXd& q,
                               double gamma, double cg_tol, int cg_max_iters,
                               bool record_iterates = false) {
  if (gamma != ops.gamma)
    throw ConfigError("solve_inner_cg: gamma does not match the assembled operators");
  CgResult res;
  const Eigen::VectorXd rhs = q - gamma * ops.l_bar;
  const double rhs_norm = rhs.norm();
  if (rhs_norm == 0.0) {
    res.x = Eigen::VectorXd::Zero(q.size());
    res.converged = true;
    return res;
  }

  Eigen::VectorXd x = q;  // warm start at the observation
  Eigen::VectorXd ax;
  ops.apply_system(x, ax);
  Eigen::VectorXd r = rhs - ax;
  Eigen::VectorXd p = r;
  Eigen::VectorXd ap;
  double rr = r.squaredNorm();
  res.residual_norms.push_back(std::sqrt(rr));
  if (record_iterates) res.iterates.push_back(x);

  const double stop = cg_tol * rhs_norm;
  int it = 0;
  while (std::sqrt(rr) > stop && it < cg_max_iters) {
    ops.apply_system(p, ap);
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++it;
    res.residual_norms.push_back(std::sqrt(rr));
    if (record_iterates) res.iterates.push_back(x);
  }
  res.x = std::move(x);
  res.iterations = it;
  res.converged = std::sqrt(rr) <= stop;
  return res;
}

// ---------------------------------------------------------------------------
// Lanczos spectral-filter solve of the same system
// ---------------------------------------------------------------------------

struct LanczosResult {
  Eigen::VectorXd x;
  int order_used = 0;
};

/// Approximates p = (I + gamma*Ltilde)^-1 q_tilde by |q_tilde| V_M
/// (I + gamma*H_M)^-1 e_1 on the order-M Krylov subspace of Ltilde. The basis
/// is kept orthonormal by full re-orthogonalization; a vanishing recurrence
/// coefficient means the Krylov space closed early, in which case the
/// truncated solve is already exact on the invariant subspace.
inline LanczosResult solve_inner_lanczos(const SystemOperators& ops,
                                         const Eigen::VectorXd& q_tilde, double gamma,
                                         int order) {
  const double beta0 = q_tilde.norm();
  if (beta0 == 0.0) throw ConfigError("solve_inner_lanczos: q_tilde must be nonzero");
  const int n3 = static_cast<int>(q_tilde.size());
  const int m_max = std::min(order, n3);

  Eigen::MatrixXd V(n3, m_max);
  Eigen::VectorXd alpha(m_max), beta(m_max);
  V.col(0) = q_tilde / beta0;

  int m = m_max;
  Eigen::VectorXd w;
  for (int j = 0; j < m_max; ++j) {
    ops.apply_ltilde(V.col(j), w);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    alpha[j] = V.col(j).dot(w);
    w -= alpha[j] * V.col(j);
    // Full re-orthogonalization against the basis built so far.
    w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
    if (j + 1 < m_max) {
      beta[j] = w.norm();
      if (beta[j] < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        m = j + 1;  // Krylov space closed; truncation is exact
        break;
      }
      V.col(j + 1) = w / beta[j];
    }
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    H(j, j) = alpha[j];
    if (j + 1 < m) H(j, j + 1) = H(j + 1, j) = beta[j];
  }
  Eigen::MatrixXd G = gamma * H;
  G.diagonal().array() += 1.0;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(m);
  e1[0] = beta0;
  const Eigen::VectorXd y = G.ldlt().solve(e1);

  LanczosResult res;
  res.x = V.leftCols(m) * y;
  res.order_used = m;
  return res;
}

}  // namespace rglr
