#pragma once

#include "rglr/partition_models.hpp"

#include <Eigen/Dense>

#include <numeric>

namespace rglr {

// ---------------------------------------------------------------------------
// Mean shift (flat kernel)
// ---------------------------------------------------------------------------

/// Flat-kernel mean shift over 3-vectors. Each sample iterates to the
/// centroid of its bandwidth window; converged modes closer than
/// bandwidth/2 are merged. Returns one label per input, 0-based, numbered
/// in order of first appearance.
inline std::vector<int> mean_shift(std::span<const Vec3> vectors, double bandwidth,
                                   int max_iters = 100) {
  if (!(bandwidth > 0.0)) throw ConfigError("mean_shift: bandwidth must be positive");
  const int n = static_cast<int>(vectors.size());
  std::vector<Vec3> modes(n);
  KdTree3 tree(std::vector<Vec3>(vectors.begin(), vectors.end()));

  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    std::vector<int> window;
    for (std::size_t i = lo; i < hi; ++i) {
      Vec3 x = vectors[i];
      for (int it = 0; it < max_iters; ++it) {
        tree.radius(x, bandwidth, window);
        if (window.empty()) break;
        Vec3 mean = Vec3::Zero();
        for (int j : window) mean += vectors[j];
        mean /= static_cast<double>(window.size());
        const double shift = (mean - x).norm();
        x = mean;
        if (shift < 1e-3 * bandwidth) break;
      }
      modes[i] = x;
    }
  });

  // Union-find merge of modes within bandwidth/2.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  KdTree3 mode_tree(modes);
  std::vector<int> near;
  for (int i = 0; i < n; ++i) {
    mode_tree.radius(modes[i], bandwidth * 0.5, near);
    for (int j : near) {
      const int ra = find(i), rb = find(j);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  std::vector<int> labels(n, -1);
  std::vector<int> remap(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (remap[r] < 0) remap[r] = next++;
    labels[i] = remap[r];
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Flat-patch detection
// ---------------------------------------------------------------------------

struct NoiseEstimationConfig {
  double normal_bandwidth = 0.3;    // chord distance on the unit sphere
  double geometry_bandwidth = 0.0;  // 0 selects 2 x mean k-NN distance
  int min_patch_size = 25;
};

struct FlatPatch {
  std::vector<int> red_indices, blue_indices;       // global node ids
  std::vector<NormalModel> red_models, blue_models; // aligned with the indices
  int min_size_used = 0;
};

/// Hierarchical clustering: normals first, then geometry inside each normal
/// cluster. Clusters that keep at least min_patch_size members become flat
/// patches. Throws NoFlatPatches when nothing qualifies.
inline std::vector<FlatPatch> detect_flat_patches(
    std::span<const Vec3> positions, const BipartitePartition& part,
    const ColorModels& red, const ColorModels& blue, double mean_knn_distance,
    const NoiseEstimationConfig& config = {}) {
  const int n = static_cast<int>(positions.size());
  std::vector<Vec3> normals(n, Vec3::Zero());
  std::vector<const NormalModel*> model_of(n, nullptr);
  std::vector<std::uint8_t> usable(n, 0);
  auto ingest = [&](const ColorModels& cm) {
    for (std::size_t v = 0; v < cm.ids.size(); ++v) {
      if (!cm.valid[v]) continue;
      const int gid = cm.ids[v];
      Vec3 nrm = cm.models[v].normal();
      const double len = nrm.norm();
      if (len < 1e-12) continue;
      normals[gid] = nrm / len;
      model_of[gid] = &cm.models[v];
      usable[gid] = 1;
    }
  };
  ingest(red);
  ingest(blue);

  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (usable[i]) active.push_back(i);
  if (active.empty()) throw NoFlatPatches();

  std::vector<Vec3> active_normals(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) active_normals[a] = normals[active[a]];
  const std::vector<int> normal_labels = mean_shift(active_normals, config.normal_bandwidth);

  const double geom_bw = config.geometry_bandwidth > 0.0 ? config.geometry_bandwidth
                                                         : 2.0 * mean_knn_distance;

  int n_normal_clusters = 0;
  for (int l : normal_labels) n_normal_clusters = std::max(n_normal_clusters, l + 1);

  std::vector<FlatPatch> patches;
  for (int c = 0; c < n_normal_clusters; ++c) {
    std::vector<int> members;  // indices into `active`
    for (std::size_t a = 0; a < active.size(); ++a)
      if (normal_labels[a] == c) members.push_back(static_cast<int>(a));
    if (static_cast<int>(members.size()) < config.min_patch_size) continue;

    std::vector<Vec3> member_pos(members.size());
    for (std::size_t m = 0; m < members.size(); ++m)
      member_pos[m] = positions[active[members[m]]];
    const std::vector<int> geo_labels = mean_shift(member_pos, geom_bw);
    int n_geo = 0;
    for (int l : geo_labels) n_geo = std::max(n_geo, l + 1);

    for (int gcl = 0; gcl < n_geo; ++gcl) {
      FlatPatch patch;
      patch.min_size_used = config.min_patch_size;
      for (std::size_t m = 0; m < members.size(); ++m) {
        if (geo_labels[m] != gcl) continue;
        const int gid = active[members[m]];
        if (part.tags[gid] == PartitionTag::Red) {
          patch.red_indices.push_back(gid);
          patch.red_models.push_back(*model_of[gid]);
        } else {
          patch.blue_indices.push_back(gid);
          patch.blue_models.push_back(*model_of[gid]);
        }
      }
      if (static_cast<int>(patch.red_indices.size() + patch.blue_indices.size()) >=
          config.min_patch_size)
        patches.push_back(std::move(patch));
    }
  }
  if (patches.empty()) throw NoFlatPatches();
  return patches;
}

// ---------------------------------------------------------------------------
// Skew-symmetric eigenstructure
// ---------------------------------------------------------------------------

struct SkewEigen {
  double lambda = 0.0;  // nonzero eigenvalues are +-i*lambda
  Vec3 v1 = Vec3::Zero(), v2 = Vec3::Zero(), v3 = Vec3::Zero();
};

/// Closed-form eigenstructure of a 3x3 skew-symmetric matrix A x = a cross x:
/// v1 spans the null space (the axial direction), v2/v3 are the real/
/// imaginary combinations of the conjugate eigenvector pair, and
/// lambda = |a|. No general eigensolver involved.
inline SkewEigen skew_eigen(const Mat3& A) {
  if ((A + A.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ConfigError("skew_eigen: matrix is not skew-symmetric");
  if (A.norm() < 1e-14) throw ZeroMatrix("skew_eigen: zero matrix");
  const Vec3 a(A(2, 1), A(0, 2), A(1, 0));
  SkewEigen se;
  se.lambda = a.norm();
  se.v1 = a / se.lambda;
  int axis = 0;
  se.v1.cwiseAbs().minCoeff(&axis);
  Vec3 u = Vec3::Unit(axis);
  se.v2 = (u - u.dot(se.v1) * se.v1).normalized();
  se.v3 = se.v1.cross(se.v2);
  return se;
}

// ---------------------------------------------------------------------------
// Per-patch variance estimators
// ---------------------------------------------------------------------------

namespace detail {

inline Vec3 normalized_or_throw(const Vec3& v, const char* what) {
  const double len = v.norm();
  if (len < 1e-15) throw DegenerateModels(what);
  return v / len;
}

/// Mean-filter estimator for one role of one patch (Gaussian noise).
inline double gaussian_sigma2_role(std::span<const NormalModel> models,
                                   std::span<const Vec3> observed) {
  const std::size_t n = models.size();
  Vec3 mean = Vec3::Zero();
  std::vector<Vec3> noisy(n);
  for (std::size_t i = 0; i < n; ++i) {
    noisy[i] = models[i].normal_at(observed[i]);
    mean += noisy[i];
  }
  const Vec3 s = normalized_or_throw(mean / static_cast<double>(n),
                                     "mean normal degenerated to zero");
  double num = 0.0, denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (s - noisy[i]).squaredNorm();
    denom += (models[i].A.transpose() * models[i].A).trace();
  }
  if (denom < 1e-15) throw DegenerateModels("sum tr(A^T A) vanished");
  return num / denom;
}

/// Median-filter estimator for one role of one patch (Laplacian noise).
inline double laplacian_sigma2_role(std::span<const NormalModel> models,
                                    std::span<const Vec3> observed) {
  const std::size_t n = models.size();
  std::vector<Vec3> noisy(n);
  for (std::size_t i = 0; i < n; ++i) noisy[i] = models[i].normal_at(observed[i]);

  Vec3 med;
  std::vector<double> comp(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) comp[i] = noisy[i][c];
    auto mid = comp.begin() + n / 2;
    std::nth_element(comp.begin(), mid, comp.end());
    double m = *mid;
    if (n % 2 == 0) {
      auto lower = std::max_element(comp.begin(), mid);
      m = 0.5 * (m + *lower);
    }
    med[c] = m;
  }
  const Vec3 s = normalized_or_throw(med, "median normal degenerated to zero");

  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    SkewEigen se;
    try {
      se = skew_eigen(models[i].A);
    } catch (const ZeroMatrix&) {
      continue;
    }
    if (se.lambda < 1e-12) continue;
    Mat3 Av;
    Av.row(0) = se.v1.transpose();
    Av.row(1) = se.v2.transpose() * models[i].A;
    Av.row(2) = se.v3.transpose() * models[i].A;
    // |det Av| = lambda^2 > 0 by the skew structure; a failure here is a
    // broken invariant, not a recoverable condition.
    if (std::abs(Av.determinant()) < 1e-18)
      throw Error("laplacian estimator: Av unexpectedly singular");
    Vec3 rhs;
    rhs[0] = se.v1.dot(observed[i]);
    rhs[1] = se.v2.dot(s - models[i].b);
    rhs[2] = se.v3.dot(s - models[i].b);
    const Vec3 p = Av.partialPivLu().solve(rhs);
    acc += (observed[i] - p).squaredNorm();
    ++used;
  }
  if (used == 0) throw DegenerateModels("no usable models in patch");
  return acc / (3.0 * static_cast<double>(used));
}

}  // namespace detail

/// Mean-filter noise-variance estimate of one flat patch, averaged over the
/// red and blue roles that have at least two usable members.
inline double estimate_gaussian_sigma2(const FlatPatch& patch,
                                       std::span<const Vec3> positions) {
  double acc = 0.0;
  int roles = 0;
  auto run = [&](const std::vector<int>& ids, const std::vector<NormalModel>& models) {
    if (ids.size() < 2) return;
    std::vector<Vec3> obs(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) obs[i] = positions[ids[i]];
    acc += detail::gaussian_sigma2_role(models, obs);
    ++roles;
  };
  run(patch.red_indices, patch.red_models);
  run(patch.blue_indices, patch.blue_models);
  if (roles == 0) throw DegenerateModels("patch has no role with >= 2 members");
  return acc / roles;
}

/// Median-filter analogue for Laplacian noise.
inline double estimate_laplacian_sigma2(const FlatPatch& patch,
                                        std::span<const Vec3> positions) {
  double acc = 0.0;
  int roles = 0;
  auto run = [&](const std::vector<int>& ids, const std::vector<NormalModel>& models) {
    if (ids.size() < 2) return;
    std::vector<Vec3> obs(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) obs[i] = positions[ids[i]];
    acc += detail::laplacian_sigma2_role(models, obs);
    ++roles;
  };
  run(patch.red_indices, patch.red_models);
  run(patch.blue_indices, patch.blue_models);
  if (roles == 0) throw DegenerateModels("patch has no role with >= 2 members");
  return acc / roles;
}

// ---------------------------------------------------------------------------
// Whole-cloud estimate and the gamma model
// ---------------------------------------------------------------------------

struct NoiseEstimate {
  double sigma2 = 0.0;
  NoiseKind kind = NoiseKind::Gaussian;
  int patches_used = 0;
  std::vector<double> per_patch;  // one value per (patch, role) pair

  double sigma() const { return std::sqrt(sigma2); }
};

/// End-to-end variance estimation: bipartite partition, per-color normal
/// models, flat-patch detection, then the kind-specific per-patch filter.
/// per_patch holds every (patch, role) value; sigma2 is their mean.
inline NoiseEstimate estimate_noise(const PointCloud& cloud, NoiseKind kind,
                                    const NoiseEstimationConfig& config = {},
                                    const WeightParams& weight_params = {},
                                    const GmrfConfig& gmrf = {}) {
  Graph g = knn_graph(cloud.points, nullptr, weight_params);
  BipartitePartition part = approximate(g, gmrf);
  const auto cross_adj = cross_adjacency(part, g.n);
  ColorModels red = build_color_models(cloud.points, part.red, part.blue, cross_adj,
                                       weight_params);
  ColorModels blue = build_color_models(cloud.points, part.blue, part.red, cross_adj,
                                        weight_params);
  const auto patches =
      detect_flat_patches(cloud.points, part, red, blue, g.mean_knn_distance, config);

  NoiseEstimate est;
  est.kind = kind;
  est.patches_used = static_cast<int>(patches.size());
  for (const FlatPatch& patch : patches) {
    auto collect = [&](const std::vector<int>& ids, const std::vector<NormalModel>& models) {
      if (ids.size() < 2) return;
      std::vector<Vec3> obs(ids.size());
      for (std::size_t i = 0; i < ids.size(); ++i) obs[i] = cloud.points[ids[i]];
      est.per_patch.push_back(kind == NoiseKind::Gaussian
                                  ? detail::gaussian_sigma2_role(models, obs)
                                  : detail::laplacian_sigma2_role(models, obs));
    };
    collect(patch.red_indices, patch.red_models);
    collect(patch.blue_indices, patch.blue_models);
  }
  if (est.per_patch.empty()) throw NoFlatPatches();
  est.sigma2 = std::accumulate(est.per_patch.begin(), est.per_patch.end(), 0.0) /
               static_cast<double>(est.per_patch.size());
  return est;
}

struct GammaModel {
  double slope = 0.0;  // gamma_opt = slope * sigma^2
  NoiseKind kind = NoiseKind::Gaussian;
};

/// Prior weight from the calibrated linear model, clamped to (0, 0.8].
inline double gamma_opt(double sigma2, const GammaModel& model) {
  if (!(model.slope > 0.0) || !std::isfinite(model.slope))
    throw ConfigError("gamma_opt: model slope must be positive and finite");
  return std::clamp(model.slope * sigma2, 1e-6, 0.8);
}

/// Least-squares slope through the origin of gamma_opt against sigma^2.
inline double fit_gamma_slope(std::span<const double> sigma2,
                              std::span<const double> gamma) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sigma2.size(); ++i) {
    num += sigma2[i] * gamma[i];
    den += sigma2[i] * sigma2[i];
  }
  if (den <= 0.0) throw ConfigError("fit_gamma_slope: need nonzero sigma values");
  return num / den;
}

}  // namespace rglr
