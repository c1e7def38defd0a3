#pragma once

#include "rglr/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <deque>
#include <variant>

namespace rglr {

struct StartFixed {
  int index = 0;
};
struct StartRandom {
  std::uint64_t seed = 0;
};

struct GmrfConfig {
  double delta = 1e-2;  // 1/delta is the DC-component variance of the GMRF
  std::variant<StartFixed, StartRandom> start = StartFixed{0};
  double tie_tol = 1e-12;
};

struct BipartitePartition {
  std::vector<int> red;   // sorted node indices of V1
  std::vector<int> blue;  // sorted node indices of V2
  std::vector<GraphEdge> kept_edges;  // cross-set edges only
  std::vector<PartitionTag> tags;     // per-node tag, size n

  bool is_red(int i) const { return tags[i] == PartitionTag::Red; }
};

/// KL divergence between the zero-mean GMRFs induced by two Laplacians over
/// the same node set:
///   0.5 * ( tr((L_b + dI)(L + dI)^-1) + lndet(L + dI) - lndet(L_b + dI) - N ).
/// Exact and O(N) sparse solves per column; intended for moderate N and as
/// the reference implementation the greedy step is tested against.
inline double kld(const Eigen::SparseMatrix<double>& L_b,
                  const Eigen::SparseMatrix<double>& L, double delta) {
  const int n = static_cast<int>(L.rows());
  if (L_b.rows() != n || L_b.cols() != n)
    throw ConfigError("kld: Laplacians must share the node set");
  if (!(delta > 0.0)) throw ConfigError("kld: delta must be positive");

  Eigen::SparseMatrix<double> P = L;
  Eigen::SparseMatrix<double> Pb = L_b;
  for (int i = 0; i < n; ++i) {
    P.coeffRef(i, i) += delta;
    Pb.coeffRef(i, i) += delta;
  }
  P.makeCompressed();
  Pb.makeCompressed();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(P);
  if (chol.info() != Eigen::Success)
    throw SingularPrecision("kld: Cholesky of L + delta*I failed");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol_b(Pb);
  if (chol_b.info() != Eigen::Success)
    throw SingularPrecision("kld: Cholesky of L_b + delta*I failed");

  double logdet = 0.0, logdet_b = 0.0;
  for (int i = 0; i < n; ++i) {
    if (chol.vectorD()[i] <= 0.0 || chol_b.vectorD()[i] <= 0.0)
      throw SingularPrecision("kld: precision matrix is not positive definite");
    logdet += std::log(chol.vectorD()[i]);
    logdet_b += std::log(chol_b.vectorD()[i]);
  }

  // tr(Pb * P^-1) column by column.
  double trace = 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    Eigen::VectorXd x = chol.solve(e);
    trace += Pb.col(j).dot(x);
    e[j] = 0.0;
  }
  return 0.5 * (trace + logdet - logdet_b - n);
}

namespace detail {

// Exact KLD of a small dense pair (L_b + dI vs L + dI), used by the greedy
// step on the candidate's placed neighborhood.
inline double kld_dense(const Eigen::MatrixXd& L_b, const Eigen::MatrixXd& L,
                        double delta) {
  const int n = static_cast<int>(L.rows());
  Eigen::MatrixXd P = L;
  Eigen::MatrixXd Pb = L_b;
  P.diagonal().array() += delta;
  Pb.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> chol(P);
  Eigen::LLT<Eigen::MatrixXd> chol_b(Pb);
  if (chol.info() != Eigen::Success || chol_b.info() != Eigen::Success)
    throw SingularPrecision("kld: dense Cholesky failed");
  double logdet = 0.0, logdet_b = 0.0;
  for (int i = 0; i < n; ++i) {
    logdet += 2.0 * std::log(chol.matrixL()(i, i));
    logdet_b += 2.0 * std::log(chol_b.matrixL()(i, i));
  }
  const double trace = chol.solve(Pb).trace();
  return 0.5 * (trace + logdet - logdet_b - n);
}

}  // namespace detail

/// Greedy bipartite approximation. Nodes are visited in BFS order from the
/// start node; each node joins the side whose induced bipartite candidate is
/// closer (smaller GMRF KLD) to the original graph, with candidates compared
/// on the subgraph induced by the node and its already-placed neighbors.
/// Exact ties alternate sides. Disconnected graphs are handled per component
/// with independent BFS roots.
inline BipartitePartition approximate(const Graph& g, const GmrfConfig& config = {}) {
  if (g.n == 0) throw TooFewPoints("bipartite approximation needs a non-empty graph");
  if (!(config.delta > 0.0)) throw ConfigError("delta must be positive");

  constexpr std::uint8_t kUnplaced = 2;
  std::vector<std::uint8_t> side(g.n, kUnplaced);  // 0 = V1/red, 1 = V2/blue
  bool tie_next_red = false;  // first tie goes to V2: the root already sits in V1

  int first_root = 0;
  if (std::holds_alternative<StartFixed>(config.start)) {
    first_root = std::get<StartFixed>(config.start).index;
    if (first_root < 0 || first_root >= g.n)
      throw ConfigError("start node out of range");
  } else {
    Rng rng(std::get<StartRandom>(config.start).seed);
    first_root = rng.uniform_int(0, g.n - 1);
  }

  // Evaluates the KLD of placing `v` on `target_side`, over the subgraph
  // induced by v and its placed neighbors.
  std::vector<int> pos(g.n, -1);  // scratch, entries reset after each use
  std::vector<int> local;
  auto candidate_kld = [&](int v, std::uint8_t target_side) {
    local.clear();
    local.push_back(v);
    for (const auto& [j, w] : g.adjacency[v])
      if (side[j] != kUnplaced) local.push_back(j);
    const int m = static_cast<int>(local.size());
    for (int a = 0; a < m; ++a) pos[local[a]] = a;

    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd L_b = Eigen::MatrixXd::Zero(m, m);
    auto add_edge = [](Eigen::MatrixXd& M, int a, int b, double w) {
      M(a, a) += w;
      M(b, b) += w;
      M(a, b) -= w;
      M(b, a) -= w;
    };
    for (int a = 0; a < m; ++a) {
      const int u = local[a];
      for (const auto& [j, w] : g.adjacency[u]) {
        const int b = pos[j];
        if (b < 0 || b <= a) continue;
        add_edge(L, a, b, w);
        const std::uint8_t su = (u == v) ? target_side : side[u];
        const std::uint8_t sj = (j == v) ? target_side : side[j];
        if (su != sj) add_edge(L_b, a, b, w);
      }
    }
    for (int a = 0; a < m; ++a) pos[local[a]] = -1;
    return detail::kld_dense(L_b, L, config.delta);
  };

  std::deque<int> queue;
  auto place = [&](int v) {
    const double d_red = candidate_kld(v, 0);
    const double d_blue = candidate_kld(v, 1);
    if (std::abs(d_red - d_blue) <= config.tie_tol) {
      side[v] = tie_next_red ? 0 : 1;
      tie_next_red = !tie_next_red;
    } else {
      side[v] = d_red < d_blue ? 0 : 1;
    }
  };

  std::vector<std::uint8_t> visited(g.n, 0);
  auto run_component = [&](int root) {
    visited[root] = 1;
    side[root] = 0;
    queue.push_back(root);
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      if (side[u] == kUnplaced) place(u);
      for (const auto& [j, w] : g.adjacency[u]) {
        (void)w;
        if (!visited[j]) {
          visited[j] = 1;
          queue.push_back(j);
        }
      }
    }
  };

  run_component(first_root);
  for (int v = 0; v < g.n; ++v)
    if (!visited[v]) run_component(v);

  BipartitePartition part;
  part.tags.resize(g.n);
  for (int v = 0; v < g.n; ++v) {
    part.tags[v] = side[v] == 0 ? PartitionTag::Red : PartitionTag::Blue;
    (side[v] == 0 ? part.red : part.blue).push_back(v);
  }
  for (const GraphEdge& e : g.edges)
    if (side[e.i] != side[e.j]) part.kept_edges.push_back(e);
  return part;
}

/// Partition dump, one "index {R|B}" line per node.
inline void dump_partition(const BipartitePartition& part, std::ostream& out) {
  for (std::size_t i = 0; i < part.tags.size(); ++i)
    out << i << ' ' << (part.tags[i] == PartitionTag::Red ? 'R' : 'B') << '\n';
}

}  // namespace rglr
