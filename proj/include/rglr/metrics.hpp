#pragma once

#include "rglr/kdtree.hpp"
#include "rglr/point_cloud.hpp"

#include <Eigen/Dense>

namespace rglr {

namespace detail {

struct TangentPlane {
  Vec3 point = Vec3::Zero();   // centroid of the fitted neighbors
  Vec3 normal = Vec3::Zero();
  bool degenerate = false;
};

/// Least-squares plane through the plane_k nearest neighbors of point
/// `anchor` within its own cloud (the anchor itself excluded).
inline TangentPlane fit_tangent_plane(const KdTree3& tree, int anchor, int plane_k) {
  const auto& pts = tree.points();
  const auto hits = tree.knn(pts[anchor], plane_k, anchor);
  TangentPlane plane;
  Vec3 centroid = Vec3::Zero();
  for (const auto& h : hits) centroid += pts[h.index];
  centroid /= static_cast<double>(hits.size());
  Mat3 cov = Mat3::Zero();
  for (const auto& h : hits) {
    const Vec3 d = pts[h.index] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  plane.point = centroid;
  plane.normal = eig.eigenvectors().col(0);
  // Collinear neighbors: the two smallest eigenvalues both vanish and the
  // normal direction is arbitrary.
  plane.degenerate = eig.eigenvalues()[1] <= 1e-12 * std::max(eig.eigenvalues()[2], 1e-300);
  return plane;
}

inline double directed_c2c(const std::vector<Vec3>& from, const KdTree3& to_tree) {
  const auto& to_pts = to_tree.points();
  std::vector<double> acc(from.size());
  parallel_for(from.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      acc[i] = (from[i] - to_pts[to_tree.nearest(from[i])]).squaredNorm();
  });
  double sum = 0.0;
  for (double v : acc) sum += v;
  return sum / static_cast<double>(from.size());
}

inline double directed_c2p(const std::vector<Vec3>& from, const KdTree3& to_tree,
                           const std::vector<TangentPlane>& to_planes,
                           long* degenerate_hits) {
  const auto& to_pts = to_tree.points();
  std::vector<double> acc(from.size());
  std::vector<long> degenerate(from.size(), 0);
  parallel_for(from.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const int nn = to_tree.nearest(from[i]);
      const TangentPlane& plane = to_planes[nn];
      if (plane.degenerate) {
        acc[i] = (from[i] - to_pts[nn]).squaredNorm();
        degenerate[i] = 1;
      } else {
        const double d = (from[i] - plane.point).dot(plane.normal);
        acc[i] = d * d;
      }
    }
  });
  double sum = 0.0;
  for (double v : acc) sum += v;
  if (degenerate_hits)
    for (long v : degenerate) *degenerate_hits += v;
  return sum / static_cast<double>(from.size());
}

}  // namespace detail

enum class MetricDirection { GtToDen, DenToGt };

struct MetricReport {
  double c2c = 0.0;
  double c2p = 0.0;
  MetricDirection c2c_direction = MetricDirection::GtToDen;
  MetricDirection c2p_direction = MetricDirection::GtToDen;
  long degenerate_planes = 0;
};

/// Point-to-point error: the smaller of the two directed mean squared
/// nearest-neighbor distances.
inline double c2c(const PointCloud& gt, const PointCloud& den) {
  if (gt.empty() || den.empty()) throw EmptyCloud();
  KdTree3 gt_tree(gt.points), den_tree(den.points);
  const double a = detail::directed_c2c(gt.points, den_tree);
  const double b = detail::directed_c2c(den.points, gt_tree);
  return std::min(a, b);
}

/// Point-to-plane error: squared distances to the tangent plane at the
/// nearest point of the other cloud, averaged per direction, smaller
/// direction taken. Tangent planes are least-squares fits through plane_k
/// neighbors; collinear fits fall back to the point distance.
inline double c2p(const PointCloud& gt, const PointCloud& den, int plane_k = 6) {
  if (gt.size() < static_cast<std::size_t>(plane_k) + 1 ||
      den.size() < static_cast<std::size_t>(plane_k) + 1)
    throw TooFewPoints("c2p: both clouds need at least plane_k + 1 points");
  KdTree3 gt_tree(gt.points), den_tree(den.points);

  auto planes_for = [plane_k](const KdTree3& tree) {
    std::vector<detail::TangentPlane> planes(tree.size());
    parallel_for(tree.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        planes[i] = detail::fit_tangent_plane(tree, static_cast<int>(i), plane_k);
    });
    return planes;
  };
  const auto den_planes = planes_for(den_tree);
  const auto gt_planes = planes_for(gt_tree);

  const double a = detail::directed_c2p(gt.points, den_tree, den_planes, nullptr);
  const double b = detail::directed_c2p(den.points, gt_tree, gt_planes, nullptr);
  return std::min(a, b);
}

inline MetricReport metric_report(const PointCloud& gt, const PointCloud& den,
                                  int plane_k = 6) {
  if (gt.size() < static_cast<std::size_t>(plane_k) + 1 ||
      den.size() < static_cast<std::size_t>(plane_k) + 1)
    throw TooFewPoints("metrics: both clouds need at least plane_k + 1 points");
  MetricReport rep;
  KdTree3 gt_tree(gt.points), den_tree(den.points);
  const double c2c_a = detail::directed_c2c(gt.points, den_tree);
  const double c2c_b = detail::directed_c2c(den.points, gt_tree);
  rep.c2c = std::min(c2c_a, c2c_b);
  rep.c2c_direction = c2c_a <= c2c_b ? MetricDirection::GtToDen : MetricDirection::DenToGt;

  std::vector<detail::TangentPlane> den_planes(den_tree.size()), gt_planes(gt_tree.size());
  parallel_for(den_tree.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      den_planes[i] = detail::fit_tangent_plane(den_tree, static_cast<int>(i), plane_k);
  });
  parallel_for(gt_tree.size(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      gt_planes[i] = detail::fit_tangent_plane(gt_tree, static_cast<int>(i), plane_k);
  });
  const double c2p_a = detail::directed_c2p(gt.points, den_tree, den_planes, &rep.degenerate_planes);
  const double c2p_b = detail::directed_c2p(den.points, gt_tree, gt_planes, &rep.degenerate_planes);
  rep.c2p = std::min(c2p_a, c2p_b);
  rep.c2p_direction = c2p_a <= c2p_b ? MetricDirection::GtToDen : MetricDirection::DenToGt;
  return rep;
}

/// Relative percentage error of an estimated noise standard deviation.
inline double rel_error(double sigma_true, double sigma_est) {
  if (!(sigma_true > 0.0)) throw ConfigError("rel_error: true sigma must be positive");
  return std::abs(sigma_true - sigma_est) / sigma_true * 100.0;
}

}  // namespace rglr
