#pragma once

#include "rglr/pipeline_options.hpp"
#include "rglr/solver_ops.hpp"

#include <variant>

namespace rglr {

struct StepAuto {};
struct StepFixed {
  double t = 0.0;
};

struct ApgConfig {
  double gamma = 0.1;
  std::variant<StepAuto, StepFixed> step = StepAuto{};
  int apg_iters = 200;
  int reweight_iters = 5;
  int outer_iters = 3;
  double stop_tol = 0.0;  // 0 selects 1e-7 x bounding-box diagonal in the pipeline
  double power_tol = 1e-6;
  int power_max_iters = 5000;
  PipelineOptions pipeline;
};

/// Largest eigenvalue of Ltilde by power iteration (deterministic start
/// vector), scaled to the gradient Lipschitz constant 2*gamma*lambda_max.
inline double lipschitz(const SystemOperators& ops, double gamma, double tol = 1e-6,
                        int max_iters = 5000) {
  const int n3 = 3 * ops.n;
  Rng rng(0x9e3779b97f4a7c15ull);
  Eigen::VectorXd v(n3);
  for (int i = 0; i < n3; ++i) v[i] = rng.gaussian();
  v.normalize();

  Eigen::VectorXd w;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    ops.apply_ltilde(v, w);
    const double norm = w.norm();
    if (norm < 1e-300) return 0.0;  // Ltilde is (numerically) zero
    const double lambda_next = v.dot(w);
    w /= norm;
    v.swap(w);
    if (std::abs(lambda_next - lambda) <= tol * std::max(std::abs(lambda_next), 1e-30)) {
      lambda = lambda_next;
      break;
    }
    lambda = lambda_next;
  }
  return 2.0 * gamma * std::max(lambda, 0.0);
}

/// Certified upper bound on the Lipschitz constant from the spectral bound
/// on Ltilde (2*rho_max per coordinate channel, three channels, anchor term).
inline double lipschitz_bound(const SystemOperators& ops, double gamma) {
  if (!(ops.min_anchor > 0.0) || !std::isfinite(ops.min_anchor))
    return std::numeric_limits<double>::infinity();
  return 2.0 * gamma * 6.0 * ops.rho_max / ops.min_anchor;
}

/// Proximal map of the l1 fidelity |x - q|_1 with step t: coordinatewise
/// soft threshold centered at q.
inline Eigen::VectorXd prox_l1(const Eigen::VectorXd& v, const Eigen::VectorXd& q,
                               double t) {
  if (!(t > 0.0)) throw ConfigError("prox_l1: step must be positive");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = v[i] - q[i];
    if (std::abs(d) <= t)
      out[i] = q[i];
    else
      out[i] = v[i] - t * (d > 0.0 ? 1.0 : -1.0);
  }
  return out;
}

struct ApgResult {
  Eigen::VectorXd x;
  int iterations = 0;
  bool hit_tolerance = false;
  double lipschitz_constant = 0.0;
  double step = 0.0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  std::vector<double> objective_traj;  // filled only when requested
};

/// Objective |q - p|_1 + gamma * f(p) of the fixed-L surrogate.
inline double l1_objective(const SystemOperators& ops, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& p, double gamma) {
  return (q - p).lpNorm<1>() + gamma * ops.prior_value(p);
}

/// Accelerated proximal gradient on the l1-l2 surrogate, warm-started at x0.
/// Uses extrapolation weight (m-2)/(m+1) and the soft-threshold prox. If the
/// final iterate somehow exceeds the starting objective the start point is
/// returned instead, so the result never regresses.
inline ApgResult apg_solve(const SystemOperators& ops, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& x0, const ApgConfig& config,
                           double stop_tol, bool record_objectives = false) {
  const double gamma = config.gamma;
  if (gamma != ops.gamma)
    throw ConfigError("apg_solve: gamma does not match the assembled operators");

  ApgResult res;
  res.lipschitz_constant = lipschitz(ops, gamma, config.power_tol, config.power_max_iters);
  if (std::holds_alternative<StepAuto>(config.step)) {
    res.step = res.lipschitz_constant > 0.0 ? 1.0 / res.lipschitz_constant : 1.0;
  } else {
    res.step = std::get<StepFixed>(config.step).t;
    if (!(res.step > 0.0)) throw ConfigError("apg_solve: fixed step must be positive");
    if (res.lipschitz_constant > 0.0 && res.step > 1.0 / res.lipschitz_constant * (1.0 + 1e-12))
      throw ConfigError("apg_solve: fixed step exceeds 1/L");
  }

  Eigen::VectorXd p_prev = x0, p_curr = x0;
  Eigen::VectorXd z, grad;
  res.initial_objective = l1_objective(ops, q, x0, gamma);
  if (record_objectives) res.objective_traj.push_back(res.initial_objective);

  int m = 0;
  for (m = 1; m <= config.apg_iters; ++m) {
    const double weight = static_cast<double>(m - 2) / static_cast<double>(m + 1);
    z = p_curr + weight * (p_curr - p_prev);
    ops.apply_ltilde(z, grad);
    grad = 2.0 * gamma * (grad + ops.l_bar);
    Eigen::VectorXd p_next = prox_l1(z - res.step * grad, q, res.step);
    const double move = (p_next - p_curr).norm();
    p_prev = std::move(p_curr);
    p_curr = std::move(p_next);
    if (record_objectives) res.objective_traj.push_back(l1_objective(ops, q, p_curr, gamma));
    if (move <= stop_tol) {
      res.hit_tolerance = true;
      break;
    }
  }
  res.iterations = std::min(m, config.apg_iters);
  res.final_objective = l1_objective(ops, q, p_curr, gamma);
  if (res.final_objective > res.initial_objective) {
    p_curr = x0;
    res.final_objective = res.initial_objective;
  }
  res.x = std::move(p_curr);
  return res;
}

}  // namespace rglr
