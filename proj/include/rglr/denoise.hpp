#pragma once

#include "rglr/partition_models.hpp"
#include "rglr/point_cloud.hpp"
#include "rglr/solver_l1.hpp"
#include "rglr/solver_ops.hpp"

#include <chrono>

namespace rglr {

enum class L2Backend { Cg, Lanczos };

struct L2Config {
  double gamma = 0.1;
  int outer_iters = 3;
  int reweight_iters = 5;
  double cg_tol = 1e-8;
  int cg_max_iters = 500;
  L2Backend backend = L2Backend::Cg;
  int lanczos_order = 30;
  PipelineOptions pipeline;
};

struct SolveTrace {
  int outer = 0;
  PartitionTag role = PartitionTag::Red;
  int reweight = 0;
  double objective_before = 0.0;  // fixed-L surrogate at the warm start
  double objective_after = 0.0;
  double cond_bound = 0.0;
  int inner_iterations = 0;
  bool inner_converged = true;
  double lipschitz_constant = 0.0;  // l1 only
  double step = 0.0;                // l1 only
};

struct StageTiming {
  std::string name;
  double ms = 0.0;
};

struct DenoiseReport {
  std::string solver;
  double gamma = 0.0;
  double scale = 1.0;       // canonicalization factor applied internally
  double diagonal = 0.0;    // working diagonal
  double sigma_p = 0.0;     // bandwidth of the initial graph
  int red_count = 0, blue_count = 0;
  std::size_t initial_edges = 0, kept_edges = 0;
  int outer_iters_run = 0;
  bool converged = false;
  double last_mean_displacement = 0.0;
  int borrowed_anchor_nodes = 0, degenerate_models = 0;
  std::vector<SolveTrace> traces;
  std::vector<StageTiming> stages;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
  void mark(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    out_.push_back({name, std::chrono::duration<double, std::milli>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline void update_weights(Graph& g, std::span<const Vec3> positions,
                           std::span<const Vec3> normals) {
  for (GraphEdge& e : g.edges) {
    const double w =
        edge_weight(positions[e.i], positions[e.j], normals[e.i], normals[e.j], g.sigma_p);
    e.w = w < kWeightFloor ? 0.0 : w;
  }
  g.finalize();
}

inline std::vector<Vec3> normalized_model_normals(std::span<const NormalModel> models,
                                                  std::span<const Vec3> positions) {
  std::vector<Vec3> normals(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    Vec3 n = models[i].normal_at(positions[i]);
    const double len = n.norm();
    normals[i] = len > 1e-12 ? Vec3(n / len) : Vec3(0, 0, 1);
  }
  return normals;
}

// One role pass: rebuild models from the opposite color, then run the
// reweight loop with the provided inner solver. InnerSolver maps
// (ops, q, warm_start, trace) -> new positions (3n vector).
template <typename InnerSolver>
void role_pass(std::vector<Vec3>& positions, const std::vector<Vec3>& observed,
               std::span<const int> ids, std::span<const int> anchor_ids,
               const std::vector<std::vector<int>>& cross_adj,
               const WeightParams& weight_params, const PipelineOptions& pipeline,
               double gamma, int reweight_iters, int outer_index, PartitionTag role,
               InnerSolver&& inner, DenoiseReport& report) {
  ColorModels cm = build_color_models(positions, ids, anchor_ids, cross_adj,
                                      weight_params, pipeline.min_dist_factor);
  report.borrowed_anchor_nodes += cm.borrowed;
  report.degenerate_models += cm.degenerate;

  const int n = static_cast<int>(ids.size());
  Eigen::VectorXd q(3 * n), p(3 * n);
  for (int v = 0; v < n; ++v) {
    q.segment<3>(3 * v) = observed[ids[v]];
    p.segment<3>(3 * v) = positions[ids[v]];
  }

  std::vector<Vec3> color_pos(n);
  for (int rw = 0; rw < reweight_iters; ++rw) {
    for (int v = 0; v < n; ++v) color_pos[v] = p.segment<3>(3 * v);
    const std::vector<Vec3> normals = normalized_model_normals(cm.models, color_pos);
    update_weights(cm.graph, color_pos, normals);
    SystemOperators ops = assemble(cm.graph, cm.models, gamma);

    SolveTrace trace;
    trace.outer = outer_index;
    trace.role = role;
    trace.reweight = rw;
    trace.cond_bound = ops.cond_bound;
    trace.objective_before = (q - p).squaredNorm() + gamma * ops.prior_value(p);

    p = inner(ops, q, p, trace);
    if (!p.allFinite()) throw Error("denoise: non-finite iterate");
    trace.objective_after = (q - p).squaredNorm() + gamma * ops.prior_value(p);
    report.traces.push_back(trace);
  }
  for (int v = 0; v < n; ++v) positions[ids[v]] = p.segment<3>(3 * v);
}

template <typename InnerSolver>
std::pair<PointCloud, DenoiseReport> denoise_pipeline(
    const PointCloud& cloud, const WeightParams& weight_params,
    const PipelineOptions& pipeline, double gamma, int outer_iters, int reweight_iters,
    const std::string& solver_name, InnerSolver&& inner) {
  if (cloud.size() < 2 * static_cast<std::size_t>(weight_params.k))
    throw TooFewPoints("denoise: need at least 2k points");
  if (!(gamma > 0.0)) throw ConfigError("denoise: gamma must be positive");

  DenoiseReport report;
  report.solver = solver_name;
  report.gamma = gamma;
  StageClock clock(report.stages);

  // Canonical frame.
  PointCloud work = cloud;
  Vec3 center = Vec3::Zero();
  double scale = 1.0;
  if (pipeline.rescale) {
    RescaleResult rs = rescale_to_diagonal(cloud, pipeline.target_diag);
    work = std::move(rs.cloud);
    center = rs.center;
    scale = rs.scale;
  }
  report.scale = scale;
  const double diag = bounding_box(work).diagonal();
  report.diagonal = diag;
  clock.mark("rescale");

  // Initial graph and bipartite partition (built once).
  Graph initial = knn_graph(work.points, nullptr, weight_params);
  report.sigma_p = initial.sigma_p;
  report.initial_edges = initial.edges.size();
  clock.mark("knn_graph");
  BipartitePartition part =
      approximate(initial, {pipeline.kld_delta, StartFixed{pipeline.bipartite_start}});
  report.red_count = static_cast<int>(part.red.size());
  report.blue_count = static_cast<int>(part.blue.size());
  report.kept_edges = part.kept_edges.size();
  const auto cross_adj = cross_adjacency(part, initial.n);
  clock.mark("bipartite");

  const std::vector<Vec3> observed = work.points;  // fidelity anchors
  std::vector<Vec3> positions = work.points;
  const double disp_tol = pipeline.displacement_tol * diag;

  int outer = 0;
  for (outer = 0; outer < outer_iters; ++outer) {
    const std::vector<Vec3> before = positions;
    role_pass(positions, observed, part.red, part.blue, cross_adj, weight_params,
              pipeline, gamma, reweight_iters, outer, PartitionTag::Red, inner, report);
    role_pass(positions, observed, part.blue, part.red, cross_adj, weight_params,
              pipeline, gamma, reweight_iters, outer, PartitionTag::Blue, inner, report);
    double disp = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i)
      disp += (positions[i] - before[i]).norm();
    disp /= static_cast<double>(positions.size());
    report.last_mean_displacement = disp;
    if (disp < disp_tol) {
      report.converged = true;
      ++outer;
      break;
    }
  }
  report.outer_iters_run = outer;
  clock.mark("alternating_solve");

  PointCloud out;
  out.points.resize(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i)
    out.points[i] = pipeline.rescale ? Vec3(center + (positions[i] - center) / scale)
                                     : positions[i];
  out.labels = part.tags;
  clock.mark("finalize");
  return {std::move(out), std::move(report)};
}

}  // namespace detail

/// l2-fidelity denoising: alternating red/blue passes, each an iteratively
/// reweighted quadratic solve by CG or the Lanczos spectral filter.
inline std::pair<PointCloud, DenoiseReport> denoise_l2(const PointCloud& cloud,
                                                       const L2Config& config,
                                                       const WeightParams& weight_params) {
  const bool use_cg = config.backend == L2Backend::Cg;
  auto inner = [&](const SystemOperators& ops, const Eigen::VectorXd& q,
                   const Eigen::VectorXd& warm, SolveTrace& trace) -> Eigen::VectorXd {
    if (use_cg) {
      CgResult r = solve_inner_cg(ops, q, config.gamma, config.cg_tol, config.cg_max_iters);
      (void)warm;
      trace.inner_iterations = r.iterations;
      trace.inner_converged = r.converged;
      return std::move(r.x);
    }
    const Eigen::VectorXd q_tilde = q - config.gamma * ops.l_bar;
    if (q_tilde.norm() == 0.0) return Eigen::VectorXd::Zero(q.size());
    LanczosResult r = solve_inner_lanczos(ops, q_tilde, config.gamma, config.lanczos_order);
    trace.inner_iterations = r.order_used;
    return std::move(r.x);
  };
  return detail::denoise_pipeline(cloud, weight_params, config.pipeline, config.gamma,
                                  config.outer_iters, config.reweight_iters,
                                  use_cg ? "l2-cg" : "l2-lanczos", inner);
}

/// l1-fidelity denoising via APG with a Lipschitz-derived step size.
inline std::pair<PointCloud, DenoiseReport> denoise_l1(const PointCloud& cloud,
                                                       const ApgConfig& config,
                                                       const WeightParams& weight_params) {
  double stop_tol = config.stop_tol;
  auto inner = [&](const SystemOperators& ops, const Eigen::VectorXd& q,
                   const Eigen::VectorXd& warm, SolveTrace& trace) -> Eigen::VectorXd {
    ApgResult r = apg_solve(ops, q, warm, config, stop_tol);
    trace.inner_iterations = r.iterations;
    trace.inner_converged = r.hit_tolerance;
    trace.lipschitz_constant = r.lipschitz_constant;
    trace.step = r.step;
    return std::move(r.x);
  };
  // Default stop tolerance is 1e-7 x working diagonal.
  if (stop_tol <= 0.0)
    stop_tol = 1e-7 * (config.pipeline.rescale
                           ? config.pipeline.target_diag
                           : bounding_box(cloud).diagonal());
  return detail::denoise_pipeline(cloud, weight_params, config.pipeline, config.gamma,
                                  config.outer_iters, config.reweight_iters, "l1-apg",
                                  inner);
}

}  // namespace rglr
