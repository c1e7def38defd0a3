#include <catch2/catch_amalgamated.hpp>

#include <rglr/normals.hpp>
#include <rglr/partition_models.hpp>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <Eigen/Dense>

using namespace rglr;
using namespace testsupport;

TEST_CASE("blue pair selection: right angle wins") {
  const Vec3 red(0, 0, 0);
  const std::vector<Vec3> blues = {Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(2, 0, 0)};
  const auto sel = select_blue_pair(red, blues, {0.5});
  CHECK(sel.k == 0);
  CHECK(sel.l == 1);
  CHECK(sel.beta_deg == Catch::Approx(90.0));
  CHECK_FALSE(sel.degenerate);
}

TEST_CASE("blue pair selection: collinear candidates are flagged degenerate") {
  const Vec3 red(0, 0, 0);
  const std::vector<Vec3> blues = {Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  const auto sel = select_blue_pair(red, blues, {0.1});
  CHECK(sel.k >= 0);
  CHECK(sel.degenerate);
}

TEST_CASE("blue pair selection: fewer than two candidates fails") {
  const std::vector<Vec3> one = {Vec3(1, 0, 0)};
  CHECK_THROWS_AS(select_blue_pair(Vec3(0, 0, 0), one, {0.1}), TooFewBlueNeighbors);
}

TEST_CASE("blue pair selection matches exhaustive enumeration") {
  Rng rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const Vec3 red(rng.gaussian(), rng.gaussian(), rng.gaussian());
    std::vector<Vec3> blues;
    const int m = rng.uniform_int(2, 8);
    for (int i = 0; i < m; ++i)
      blues.emplace_back(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const double min_dist = 0.3 + rng.uniform();
    const auto sel = select_blue_pair(red, blues, {min_dist});

    // Exhaustive oracle with the same admissibility and preference.
    double thresh = min_dist;
    bool any = false;
    for (const auto& b : blues) any = any || (red - b).norm() >= thresh;
    if (!any) {
      double mx = 0;
      for (const auto& b : blues) mx = std::max(mx, (red - b).norm());
      thresh = mx;
    }
    int bk = -1, bl = -1;
    double best = std::numeric_limits<double>::max();
    for (int a = 0; a < m; ++a) {
      if ((red - blues[a]).norm() < thresh) continue;
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        const Vec3 u = red - blues[a], v = blues[a] - blues[b];
        const double beta = std::atan2(u.cross(v).norm(), u.dot(v)) * 180.0 / M_PI;
        if (std::abs(beta - 90.0) < best - 1e-15) {
          best = std::abs(beta - 90.0);
          bk = a;
          bl = b;
        }
      }
    }
    CHECK(sel.k == bk);
    CHECK(sel.l == bl);
  }
}

TEST_CASE("normal model: xy-plane triple gives +-z") {
  const auto model = make_normal_model(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0));
  const Vec3 n = model.normal();
  CHECK(std::abs(n.z()) == Catch::Approx(1.0));
  CHECK(n.head<2>().norm() < 1e-14);
}

TEST_CASE("model matrices reproduce the cross product exactly") {
  Rng rng(405);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p_i(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const Vec3 p_k(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const Vec3 p_l(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const auto [C, d] = normal_model_matrices(p_k, p_l);
    const Vec3 direct = (p_i - p_k).cross(p_k - p_l);
    CHECK((C * p_i + d - direct).norm() < 1e-12 * std::max(1.0, direct.norm()));
    // C is skew-symmetric.
    CHECK((C + C.transpose()).norm() < 1e-15);
  }
}

TEST_CASE("model normal is unit and perpendicular to both spanning vectors") {
  Rng rng(406);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec3 p_i(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const Vec3 p_k(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const Vec3 p_l(rng.gaussian(), rng.gaussian(), rng.gaussian());
    const auto model = make_normal_model(p_i, p_k, p_l);
    const Vec3 n = model.normal();
    CHECK(n.norm() == Catch::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(n.dot(p_i - p_k)) < 1e-9);
    CHECK(std::abs(n.dot(p_k - p_l)) < 1e-9);
    // A is the cross-product matrix up to scale: exactly skew.
    CHECK((model.A + model.A.transpose()).norm() < 1e-12);
  }
}

TEST_CASE("linearization: perturbing along the normal keeps the prediction near unit") {
  const Vec3 p_i(0.2, -0.4, 0.1), p_k(1.1, 0.2, 0.0), p_l(0.6, 1.3, -0.2);
  const auto model = make_normal_model(p_i, p_k, p_l);
  const Vec3 n0 = model.normal();
  for (double eps : {1e-4, 1e-3, 1e-2}) {
    const Vec3 n_eps = model.normal_at(p_i + eps * n0);
    // First-order model: deviation from unit norm is O(eps), not O(1).
    CHECK(std::abs(n_eps.norm() - 1.0) < 5.0 * eps);
  }
}

TEST_CASE("collinear anchors are rejected") {
  CHECK_THROWS_AS(make_normal_model(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)),
                  CollinearPoints);
}

namespace {

// Models for every node of a synthetic cloud, anchored at a well-conditioned
// pair among its six nearest neighbors; graph over the same nodes for
// orientation.
std::pair<std::vector<NormalModel>, Graph> patch_models(const PointCloud& cloud, int k) {
  KdTree3 tree(cloud.points);
  std::vector<NormalModel> models;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto hits = tree.knn(cloud.points[i], 6, static_cast<int>(i));
    std::vector<Vec3> cand;
    for (const auto& h : hits) cand.push_back(cloud.points[h.index]);
    const auto sel = select_blue_pair(cloud.points[i], cand, {std::sqrt(hits[0].d2)});
    models.push_back(make_normal_model(cloud.points[i], cand[sel.k], cand[sel.l]));
  }
  Graph g = knn_graph(cloud.points, nullptr, {0.0, k});
  return {std::move(models), std::move(g)};
}

}  // namespace

TEST_CASE("orientation: flat patch ends up with equal normals") {
  const PointCloud plane = plane_grid(8, 8, 1.0);
  auto [models, graph] = patch_models(plane, 4);
  orient(models, graph);
  const Vec3 ref = models[0].normal();
  for (const auto& m : models) CHECK(m.normal().dot(ref) > 0.999);
}

TEST_CASE("orientation: sphere normals all point the same way radially") {
  const PointCloud sphere = sphere_cloud(400, 1.0);
  auto [models, graph] = patch_models(sphere, 6);
  orient(models, graph);
  int outward = 0, inward = 0;
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    const double r = models[i].normal().dot(sphere.points[i].normalized());
    (r > 0 ? outward : inward) += 1;
  }
  CHECK((outward == 0 || inward == 0));
}

TEST_CASE("orientation: adversarial pre-flips on a plane are repaired") {
  const PointCloud plane = plane_grid(7, 7, 1.0);
  auto [models, graph] = patch_models(plane, 4);
  Rng rng(7);
  for (auto& m : models)
    if (rng.uniform() < 0.5) m.flip();
  orient(models, graph);
  const Vec3 ref = models[0].normal();
  for (const auto& m : models) CHECK(m.normal().dot(ref) > 0.999);
}

TEST_CASE("stacked evaluation equals the per-node evaluation exactly") {
  const PointCloud patch = wavy_patch(6, 6, 0.8);
  auto [models, graph] = patch_models(patch, 4);
  const int n = static_cast<int>(patch.size());

  // Explicit stacked operators: row i of A_c holds A_i(c,:) at columns 3i..3i+2.
  Eigen::VectorXd p(3 * n);
  for (int i = 0; i < n; ++i) p.segment<3>(3 * i) = patch.points[i];
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, 3 * n);
    Eigen::VectorXd bc(n);
    for (int i = 0; i < n; ++i) {
      Ac.block<1, 3>(i, 3 * i) = models[i].A.row(c);
      bc[i] = models[i].b[c];
    }
    const Eigen::VectorXd stacked = Ac * p + bc;
    const auto per_node = apply_models(models, patch.points);
    for (int i = 0; i < n; ++i) CHECK(stacked[i] == per_node[i][c]);
  }
}

TEST_CASE("anchor-geometry bound on the stacked operator rows") {
  const PointCloud patch = wavy_patch(7, 7, 0.9);
  auto [models, graph] = patch_models(patch, 4);
  const int n = static_cast<int>(patch.size());
  double min_anchor = std::numeric_limits<double>::max();
  for (const auto& m : models) {
    const double sin_beta = std::sin(m.beta_deg * M_PI / 180.0);
    min_anchor = std::min(min_anchor, m.dist_ik * m.dist_ik * sin_beta * sin_beta);
  }
  for (int c = 0; c < 3; ++c) {
    // Diagonal entries of A_c A_c^T are the squared row norms.
    Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(n, 3 * n);
    for (int i = 0; i < n; ++i) Ac.block<1, 3>(i, 3 * i) = models[i].A.row(c);
    for (int i = 0; i < n; ++i) {
      const double sin_beta = std::sin(models[i].beta_deg * M_PI / 180.0);
      const double bound = 1.0 / (models[i].dist_ik * models[i].dist_ik * sin_beta * sin_beta);
      CHECK(Ac.row(i).squaredNorm() <= bound + 1e-9);
    }
    // Spectral norm bound against a dense oracle.
    const double spectral2 = power_lambda_max(Ac * Ac.transpose());
    CHECK(spectral2 <= 1.0 / min_anchor + 1e-9);
  }
}
