#pragma once

#include "rglr/kdtree.hpp"
#include "rglr/point_cloud.hpp"

#include <Eigen/SparseCore>

#include <cstdio>
#include <map>
#include <ostream>
#include <span>

namespace rglr {

enum class Symmetrize { Union, Mutual };

struct WeightParams {
  double sigma_p = 0.0;  // distance-kernel bandwidth; <= 0 selects the mean k-NN distance
  int k = 6;
  Symmetrize symmetrize = Symmetrize::Union;
};

struct GraphEdge {
  int i = 0, j = 0;  // i < j
  double w = 0.0;
};

/// Undirected weighted graph over point indices. Edges are stored once with
/// i < j in lexicographic order, which keeps every downstream reduction
/// deterministic regardless of the worker-pool size.
struct Graph {
  int n = 0;
  std::vector<GraphEdge> edges;
  std::vector<double> degree;                          // sum of incident weights
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // sorted by neighbor
  double sigma_p = 0.0;                                // bandwidth the weights used
  double mean_knn_distance = 0.0;

  void finalize() {
    std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    degree.assign(n, 0.0);
    adjacency.assign(n, {});
    for (const GraphEdge& e : edges) {
      degree[e.i] += e.w;
      degree[e.j] += e.w;
      adjacency[e.i].emplace_back(e.j, e.w);
      adjacency[e.j].emplace_back(e.i, e.w);
    }
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
  }
};

/// Edge weight of Eq-style distance/angle product:
///   exp(-|pi-pj|^2 / sigma_p^2) * ((2 - |ni-nj|^2) / 2)^2.
/// Expects unit normals; the value then lies in [0, 1].
inline double edge_weight(const Vec3& p_i, const Vec3& p_j, const Vec3& n_i,
                          const Vec3& n_j, double sigma_p) {
  const double dist2 = (p_i - p_j).squaredNorm();
  const double nd2 = (n_i - n_j).squaredNorm();
  const double angle = (2.0 - nd2) * 0.5;
  return std::exp(-dist2 / (sigma_p * sigma_p)) * angle * angle;
}

inline double distance_weight(const Vec3& p_i, const Vec3& p_j, double sigma_p) {
  return std::exp(-(p_i - p_j).squaredNorm() / (sigma_p * sigma_p));
}

namespace detail {

constexpr double kWeightFloor = 1e-12;

inline Graph knn_graph_impl(std::span<const Vec3> positions, const Vec3* normals,
                            const WeightParams& params, const KdTree3& tree) {
  const int n = static_cast<int>(positions.size());
  if (n < params.k + 1)
    throw TooFewPoints("need at least k+1 points for a k-NN graph (k=" +
                       std::to_string(params.k) + ", n=" + std::to_string(n) + ")");

  std::vector<std::vector<int>> nbrs(n);
  std::vector<double> mean_dist(n, 0.0);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      auto hits = tree.knn(positions[i], params.k, static_cast<int>(i));
      nbrs[i].reserve(hits.size());
      double acc = 0.0;
      for (const auto& h : hits) {
        nbrs[i].push_back(h.index);
        acc += std::sqrt(h.d2);
      }
      mean_dist[i] = acc / static_cast<double>(hits.size());
    }
  });

  double mean_knn = 0.0;
  for (double d : mean_dist) mean_knn += d;
  mean_knn /= n;
  const double sigma_p = params.sigma_p > 0.0 ? params.sigma_p : std::max(mean_knn, 1e-300);

  // Directed selections -> undirected edge set.
  std::map<std::pair<int, int>, int> pair_count;
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs[i]) {
      const auto key = std::minmax(i, j);
      ++pair_count[{key.first, key.second}];
    }
  }

  Graph g;
  g.n = n;
  g.sigma_p = sigma_p;
  g.mean_knn_distance = mean_knn;
  g.edges.reserve(pair_count.size());
  for (const auto& [key, count] : pair_count) {
    if (params.symmetrize == Symmetrize::Mutual && count < 2) continue;
    const auto [i, j] = key;
    const double w = normals
                         ? edge_weight(positions[i], positions[j], normals[i], normals[j], sigma_p)
                         : distance_weight(positions[i], positions[j], sigma_p);
    if (w < kWeightFloor) continue;
    g.edges.push_back({i, j, w});
  }
  g.finalize();
  return g;
}

}  // namespace detail

inline Graph knn_graph(std::span<const Vec3> positions, const Vec3* normals,
                       const WeightParams& params) {
  KdTree3 tree(std::vector<Vec3>(positions.begin(), positions.end()));
  return detail::knn_graph_impl(positions, normals, params, tree);
}

inline Graph knn_graph(const PointCloud& cloud, const WeightParams& params) {
  return knn_graph(cloud.points, cloud.normals ? cloud.normals->data() : nullptr, params);
}

/// Combinatorial Laplacian L = D - W as a sparse symmetric matrix.
inline Eigen::SparseMatrix<double> laplacian(const Graph& g) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.edges.size() * 4);
  for (const GraphEdge& e : g.edges) {
    trip.emplace_back(e.i, e.i, e.w);
    trip.emplace_back(e.j, e.j, e.w);
    trip.emplace_back(e.i, e.j, -e.w);
    trip.emplace_back(e.j, e.i, -e.w);
  }
  Eigen::SparseMatrix<double> L(g.n, g.n);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

/// Sum over edges of w_ij |n_i - n_j|^2 with the weights frozen at whatever
/// the graph currently stores.
inline double glr(std::span<const Vec3> normals, const Graph& g) {
  double acc = 0.0;
  for (const GraphEdge& e : g.edges)
    acc += e.w * (normals[e.i] - normals[e.j]).squaredNorm();
  return acc;
}

/// Same sum with the weights recomputed from the current normals and
/// positions before summing.
inline double rglr(std::span<const Vec3> normals, const Graph& g, double sigma_p,
                   std::span<const Vec3> positions) {
  double acc = 0.0;
  for (const GraphEdge& e : g.edges) {
    const double w =
        edge_weight(positions[e.i], positions[e.j], normals[e.i], normals[e.j], sigma_p);
    acc += w * (normals[e.i] - normals[e.j]).squaredNorm();
  }
  return acc;
}

/// Single-pair regularizer value as a function of d = |n_i - n_j|^2 with the
/// distance term held at w_p.
inline double rglr_pair(double w_p, double d) {
  const double angle = (2.0 - d) * 0.5;
  return w_p * angle * angle * d;
}

struct SpectralBounds {
  double rho_max = 0.0;          // maximum weighted node degree
  double lambda_max_bound = 0.0; // certified upper bound on lambda_max(L)
};

inline SpectralBounds spectral_bounds(const Graph& g) {
  SpectralBounds b;
  for (double d : g.degree) b.rho_max = std::max(b.rho_max, d);
  b.lambda_max_bound = 2.0 * b.rho_max;
  return b;
}

/// Edge-list dump, one "i j w" line per edge.
inline void dump_edges(const Graph& g, std::ostream& out) {
  char buf[32];
  for (const GraphEdge& e : g.edges) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.w);
    out << e.i << ' ' << e.j << ' ' << buf << '\n';
  }
}

}  // namespace rglr
