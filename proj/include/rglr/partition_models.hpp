#pragma once

#include "rglr/bipartite.hpp"
#include "rglr/normals.hpp"

namespace rglr {

/// Cross-color adjacency of a bipartite partition: adj[v] lists the opposite-
/// color neighbors of v through the kept edges, sorted ascending.
inline std::vector<std::vector<int>> cross_adjacency(const BipartitePartition& part,
                                                     int n) {
  std::vector<std::vector<int>> adj(n);
  for (const GraphEdge& e : part.kept_edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());
  return adj;
}

/// Normal models and k-NN graph for one color of the partition.
struct ColorModels {
  std::vector<int> ids;             // global node ids of this color
  std::vector<NormalModel> models;  // aligned with ids; anchor ids are global
  std::vector<std::uint8_t> valid;  // 0 where the model had to be disabled
  Graph graph;                      // k-NN graph over this color's positions
  int borrowed = 0;                 // nodes that needed globally-borrowed anchors
  int degenerate = 0;               // collinear / flat-angle selections
  double min_dist_used = 0.0;
};

/// Builds per-node normal models for `ids` anchored at opposite-color nodes:
/// anchors come from the bipartite cross edges, falling back to the two
/// globally nearest opposite-color nodes when a node has fewer than two. The
/// color k-NN graph is built (distance weights) and models are oriented over
/// it. min_dist for the anchor filter is min_dist_factor times the mean
/// cross-edge length at the current positions.
inline ColorModels build_color_models(std::span<const Vec3> positions,
                                      std::span<const int> ids,
                                      std::span<const int> anchor_ids,
                                      const std::vector<std::vector<int>>& cross_adj,
                                      const WeightParams& weight_params,
                                      double min_dist_factor = 0.5) {
  ColorModels out;
  out.ids.assign(ids.begin(), ids.end());
  const int n = static_cast<int>(ids.size());
  out.models.resize(n);
  out.valid.assign(n, 1);

  std::vector<Vec3> anchor_pos(anchor_ids.size());
  for (std::size_t a = 0; a < anchor_ids.size(); ++a)
    anchor_pos[a] = positions[anchor_ids[a]];
  KdTree3 anchor_tree(anchor_pos);

  double mean_cross = 0.0;
  long cross_count = 0;
  for (int v = 0; v < n; ++v) {
    for (int u : cross_adj[ids[v]]) {
      mean_cross += (positions[ids[v]] - positions[u]).norm();
      ++cross_count;
    }
  }
  mean_cross = cross_count > 0 ? mean_cross / static_cast<double>(cross_count) : 0.0;
  out.min_dist_used = min_dist_factor * mean_cross;

  std::vector<int> borrowed_flags(n, 0), degenerate_flags(n, 0);
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<Vec3> cand;
    std::vector<int> cand_ids;
    for (std::size_t v = lo; v < hi; ++v) {
      const int gid = ids[v];
      cand.clear();
      cand_ids.clear();
      for (int u : cross_adj[gid]) {
        cand.push_back(positions[u]);
        cand_ids.push_back(u);
      }
      if (cand.size() < 2) {
        borrowed_flags[v] = 1;
        for (const auto& hit : anchor_tree.knn(positions[gid], 2)) {
          const int u = anchor_ids[hit.index];
          if (std::find(cand_ids.begin(), cand_ids.end(), u) == cand_ids.end()) {
            cand.push_back(positions[u]);
            cand_ids.push_back(u);
          }
        }
      }
      NormalModel& model = out.models[v];
      if (cand.size() < 2) {
        out.valid[v] = 0;
        continue;
      }
      const auto sel = select_blue_pair(positions[gid], cand, {out.min_dist_used});
      if (sel.degenerate) degenerate_flags[v] = 1;
      try {
        model = make_normal_model(positions[gid], cand[sel.k], cand[sel.l]);
        model.k = cand_ids[sel.k];
        model.l = cand_ids[sel.l];
        model.degenerate = sel.degenerate;
      } catch (const CollinearPoints&) {
        out.valid[v] = 0;
        degenerate_flags[v] = 1;
        model = NormalModel{};
        model.p_in = positions[gid];
      }
    }
  });
  for (int v = 0; v < n; ++v) {
    out.borrowed += borrowed_flags[v];
    out.degenerate += degenerate_flags[v];
  }

  std::vector<Vec3> color_pos(n);
  for (int v = 0; v < n; ++v) color_pos[v] = positions[ids[v]];
  out.graph = knn_graph(color_pos, nullptr, weight_params);
  // Nodes without a usable model must not exert a prior on their neighbors:
  // detach them so their rows of L vanish and fidelity pins them in place.
  bool any_invalid = false;
  for (std::uint8_t v : out.valid) any_invalid = any_invalid || v == 0;
  if (any_invalid) {
    std::vector<GraphEdge> kept;
    kept.reserve(out.graph.edges.size());
    for (const GraphEdge& e : out.graph.edges)
      if (out.valid[e.i] && out.valid[e.j]) kept.push_back(e);
    out.graph.edges = std::move(kept);
    out.graph.finalize();
  }
  orient(out.models, out.graph);
  return out;
}

}  // namespace rglr
