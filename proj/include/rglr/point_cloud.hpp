#pragma once

#include "rglr/core.hpp"

#include <limits>
#include <optional>
#include <utility>

namespace rglr {

enum class PartitionTag : std::uint8_t { Red, Blue };

enum class NoiseKind { Gaussian, Laplacian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double sigma = 0.0;  // per-coordinate standard deviation
  std::uint64_t seed = 0;
};

/// An ordered set of 3D points with optional per-point unit normals and
/// optional red/blue partition labels. Immutable by convention once built;
/// functions in this library return new clouds instead of mutating.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<Vec3>> normals;
  std::optional<std::vector<PartitionTag>> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate() const {
    for (const Vec3& p : points) {
      if (!p.allFinite()) throw Error("non-finite coordinate in point cloud");
    }
    if (normals) {
      if (normals->size() != points.size())
        throw Error("normal count does not match point count");
      for (const Vec3& n : *normals) {
        if (std::abs(n.norm() - 1.0) > 1e-9)
          throw Error("normal is not unit length");
      }
    }
    if (labels && labels->size() != points.size())
      throw Error("label count does not match point count");
  }
};

struct BoundingBox {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return (hi - lo).norm(); }
};

inline BoundingBox bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw EmptyCloud();
  BoundingBox box;
  for (const Vec3& p : cloud.points) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

struct RescaleResult {
  PointCloud cloud;
  double scale = 1.0;  // factor applied about `center`
  Vec3 center = Vec3::Zero();
};

/// Uniform scale about the bounding-box center so that the axis-aligned
/// bounding-box diagonal equals target_diag. No rotation or anisotropy.
inline RescaleResult rescale_to_diagonal(const PointCloud& cloud, double target_diag) {
  if (cloud.empty()) throw EmptyCloud();
  if (!(target_diag > 0.0)) throw ConfigError("target diagonal must be positive");
  const BoundingBox box = bounding_box(cloud);
  const double diag = box.diagonal();
  if (diag <= 0.0) throw DegenerateCloud("all points coincide; cannot rescale");

  RescaleResult out;
  out.scale = target_diag / diag;
  out.center = box.center();
  out.cloud = cloud;
  for (Vec3& p : out.cloud.points) p = out.center + out.scale * (p - out.center);
  return out;
}

/// Adds iid zero-mean noise of the requested kind to every coordinate.
/// Deterministic for a given seed. sigma is the per-coordinate standard
/// deviation for both kinds; Laplace samples use scale b = sigma/sqrt(2).
inline PointCloud add_noise(const PointCloud& cloud, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma))
    throw ConfigError("noise sigma must be finite and non-negative");
  PointCloud out = cloud;
  if (spec.sigma == 0.0) return out;
  Rng rng(spec.seed);
  const double b = spec.sigma / std::sqrt(2.0);
  for (Vec3& p : out.points) {
    for (int c = 0; c < 3; ++c) {
      p[c] += (spec.kind == NoiseKind::Gaussian) ? rng.gaussian(0.0, spec.sigma)
                                                 : rng.laplace(b);
    }
  }
  return out;
}

}  // namespace rglr
