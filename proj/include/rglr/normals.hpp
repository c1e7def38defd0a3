#pragma once

#include "rglr/graph.hpp"

#include <deque>

namespace rglr {

struct BluePairCriteria {
  double min_dist = 0.0;  // lower bound on |p_i - p_k|
};

struct BluePairSelection {
  int k = -1, l = -1;       // indices into the candidate list
  double beta_deg = 0.0;    // angle between (p_i - p_k) and (p_k - p_l)
  double dist_ik = 0.0;
  bool degenerate = false;  // beta collapsed towards 0 or 180 degrees
  bool relaxed = false;     // distance filter had to be relaxed
};

/// Linear surface-normal model at one node: n(p) = A p + b, valid near the
/// linearization point p_in where the normal is unit. A is a scaled
/// skew-symmetric matrix (null direction = the anchor chord k-l), so the
/// model constrains the two directions that actually tilt the local plane.
struct NormalModel {
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  double sign = 1.0;
  Vec3 p_in = Vec3::Zero();
  int k = -1, l = -1;  // anchor node ids in the caller's indexing
  double beta_deg = 0.0;
  double dist_ik = 0.0;
  bool degenerate = false;

  Vec3 normal() const { return A * p_in + b; }
  Vec3 normal_at(const Vec3& p) const { return A * p + b; }

  void flip() {
    sign = -sign;
    A = -A;
    b = -b;
  }
};

namespace detail {

inline double angle_deg(const Vec3& u, const Vec3& v) {
  return std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / M_PI;
}

}  // namespace detail

/// Picks the ordered anchor pair (k, l) among the candidates: k must satisfy
/// |p_i - p_k| >= min_dist (relaxed to the largest available distance when
/// nothing passes), and among admissible pairs the angle between (p_i - p_k)
/// and (p_k - p_l) is driven as close to 90 degrees as possible.
inline BluePairSelection select_blue_pair(const Vec3& p_i,
                                          std::span<const Vec3> candidates,
                                          const BluePairCriteria& criteria) {
  const int m = static_cast<int>(candidates.size());
  if (m < 2) throw TooFewBlueNeighbors("blue-pair selection needs at least 2 candidates");

  double max_dist = 0.0;
  std::vector<double> dist(m);
  for (int a = 0; a < m; ++a) {
    dist[a] = (p_i - candidates[a]).norm();
    max_dist = std::max(max_dist, dist[a]);
  }
  double threshold = criteria.min_dist;
  bool relaxed = false;
  bool any = false;
  for (int a = 0; a < m; ++a) any = any || dist[a] >= threshold;
  if (!any) {
    threshold = max_dist;
    relaxed = true;
  }

  BluePairSelection best;
  double best_score = std::numeric_limits<double>::max();
  for (int a = 0; a < m; ++a) {
    if (dist[a] < threshold) continue;
    for (int b = 0; b < m; ++b) {
      if (b == a) continue;
      const double beta = detail::angle_deg(p_i - candidates[a], candidates[a] - candidates[b]);
      const double score = std::abs(beta - 90.0);
      if (score < best_score - 1e-15) {
        best_score = score;
        best.k = a;
        best.l = b;
        best.beta_deg = beta;
        best.dist_ik = dist[a];
      }
    }
  }
  best.relaxed = relaxed;
  const double sin_beta = std::sin(best.beta_deg * M_PI / 180.0);
  best.degenerate = std::abs(sin_beta) < 1e-6;
  return best;
}

/// The exact matrices of the cross-product identity
///   (p_i - p_k) x (p_k - p_l) = C p_i + d,
/// where C x = x cross (p_k - p_l).
inline std::pair<Mat3, Vec3> normal_model_matrices(const Vec3& p_k, const Vec3& p_l) {
  const Vec3 v = p_k - p_l;
  Mat3 C;
  C << 0.0, v.z(), -v.y(),
      -v.z(), 0.0, v.x(),
      v.y(), -v.x(), 0.0;
  const Vec3 d = v.cross(p_k);  // = -(p_k x v)
  return {C, d};
}

/// Builds the linearized unit-normal model at p_i from anchors (p_k, p_l).
/// Throws CollinearPoints when the three points fail to span a plane.
inline NormalModel make_normal_model(const Vec3& p_i, const Vec3& p_k, const Vec3& p_l) {
  const auto [C, d] = normal_model_matrices(p_k, p_l);
  const double scale = (C * p_i + d).norm();
  if (scale < 1e-12)
    throw CollinearPoints("normal model anchors are collinear with the point");
  NormalModel model;
  model.A = C / scale;
  model.b = d / scale;
  model.sign = 1.0;
  model.p_in = p_i;
  model.dist_ik = (p_i - p_k).norm();
  model.beta_deg = detail::angle_deg(p_i - p_k, p_k - p_l);
  return model;
}

/// Per-node normals n_i = A_i p_i + b_i for a stacked position vector.
inline std::vector<Vec3> apply_models(std::span<const NormalModel> models,
                                      std::span<const Vec3> positions) {
  std::vector<Vec3> out(models.size());
  for (std::size_t i = 0; i < models.size(); ++i)
    out[i] = models[i].normal_at(positions[i]);
  return out;
}

/// Sign consistency by BFS over the node graph, starting from the
/// lowest-index node of each component. When a node is reached, its sign is
/// decided against the already-oriented neighbor whose normal direction is
/// most parallel to its own; near sharp creases the BFS parent's normal can
/// be almost perpendicular, which would make the flip decision a coin toss.
/// The global sign of each component is left free.
inline void orient(std::vector<NormalModel>& models, const Graph& graph) {
  const int n = static_cast<int>(models.size());
  if (graph.n != n) throw ConfigError("orient: graph size does not match model count");
  std::vector<Vec3> normals(n);
  for (int i = 0; i < n; ++i) normals[i] = models[i].normal();

  std::vector<std::uint8_t> oriented(n, 0);
  std::vector<std::uint8_t> visited(n, 0);
  std::deque<int> queue;
  for (int root = 0; root < n; ++root) {
    if (visited[root]) continue;
    visited[root] = 1;
    oriented[root] = 1;
    queue.push_back(root);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      if (!oriented[u]) {
        double best = 0.0;
        for (const auto& [j, w] : graph.adjacency[u]) {
          (void)w;
          if (!oriented[j]) continue;
          const double d = normals[u].dot(normals[j]);
          if (std::abs(d) > std::abs(best)) best = d;
        }
        if (best < 0.0) {
          models[u].flip();
          normals[u] = -normals[u];
        }
        oriented[u] = 1;
      }
      for (const auto& [j, w] : graph.adjacency[u]) {
        (void)w;
        if (!visited[j]) {
          visited[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
}

}  // namespace rglr
