#pragma once

// Synthetic point-cloud generators shared by the unit and acceptance suites.
// Everything is seeded and deterministic.

#include <rglr/point_cloud.hpp>

#include <Eigen/Geometry>

namespace testsupport {

using rglr::PointCloud;
using rglr::Rng;
using rglr::Vec3;

/// Uniform random samples of the square [-side/2, side/2]^2 at z = 0.
inline PointCloud plane_cloud(int n, double side, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i)
    cloud.points.emplace_back(rng.uniform(-side / 2, side / 2),
                              rng.uniform(-side / 2, side / 2), 0.0);
  return cloud;
}

/// Regular nx x ny grid at z = 0 with the given spacing.
inline PointCloud plane_grid(int nx, int ny, double spacing) {
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(nx) * ny);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      cloud.points.emplace_back(x * spacing, y * spacing, 0.0);
  return cloud;
}

/// Uniform random samples over the six faces of an axis-aligned cube of the
/// given side, centered at the origin. Piecewise-smooth with sharp edges.
inline PointCloud cube_surface(int n, double side, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  const double h = side / 2;
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int face = rng.uniform_int(0, 5);
    const double u = rng.uniform(-h, h), v = rng.uniform(-h, h);
    switch (face) {
      case 0: cloud.points.emplace_back(+h, u, v); break;
      case 1: cloud.points.emplace_back(-h, u, v); break;
      case 2: cloud.points.emplace_back(u, +h, v); break;
      case 3: cloud.points.emplace_back(u, -h, v); break;
      case 4: cloud.points.emplace_back(u, v, +h); break;
      default: cloud.points.emplace_back(u, v, -h); break;
    }
  }
  return cloud;
}

/// Triangular prism (wedge): triangle cross-section in the xz plane extruded
/// along y. Five planar faces, sharp dihedral edges.
inline PointCloud wedge_surface(int n, double side, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  const double h = side / 2;
  const Vec3 a(-h, 0, -h), b(h, 0, -h), c(0, 0, h);  // triangle at y = 0
  cloud.points.reserve(n);
  auto sample_quad = [&](const Vec3& p0, const Vec3& e0, const Vec3& e1) {
    return Vec3(p0 + rng.uniform(0, 1) * e0 + rng.uniform(0, 1) * e1);
  };
  for (int i = 0; i < n; ++i) {
    const int face = rng.uniform_int(0, 4);
    switch (face) {
      case 0:  // bottom rectangle
        cloud.points.push_back(sample_quad(a + Vec3(0, -h, 0), b - a, Vec3(0, side, 0)));
        break;
      case 1:  // slanted rectangle a-c
        cloud.points.push_back(sample_quad(a + Vec3(0, -h, 0), c - a, Vec3(0, side, 0)));
        break;
      case 2:  // slanted rectangle b-c
        cloud.points.push_back(sample_quad(b + Vec3(0, -h, 0), c - b, Vec3(0, side, 0)));
        break;
      default: {  // triangle caps at y = +-h
        double u = rng.uniform(0, 1), v = rng.uniform(0, 1);
        if (u + v > 1) {
          u = 1 - u;
          v = 1 - v;
        }
        Vec3 p = a + u * (b - a) + v * (c - a);
        p.y() = face == 3 ? -h : h;
        cloud.points.push_back(p);
        break;
      }
    }
  }
  return cloud;
}

/// Square pyramid: four slanted triangles over a square base.
inline PointCloud pyramid_surface(int n, double side, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  const double h = side / 2;
  const Vec3 apex(0, 0, h);
  const Vec3 base[4] = {{-h, -h, -h}, {h, -h, -h}, {h, h, -h}, {-h, h, -h}};
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int face = rng.uniform_int(0, 4);
    if (face == 4) {  // base square
      cloud.points.emplace_back(rng.uniform(-h, h), rng.uniform(-h, h), -h);
      continue;
    }
    double u = rng.uniform(0, 1), v = rng.uniform(0, 1);
    if (u + v > 1) {
      u = 1 - u;
      v = 1 - v;
    }
    const Vec3& b0 = base[face];
    const Vec3& b1 = base[(face + 1) % 4];
    cloud.points.push_back(Vec3(b0 + u * (b1 - b0) + v * (apex - b0)));
  }
  return cloud;
}

/// Roof: two rectangular planes meeting at a sharp ridge along y. Piecewise
/// smooth with one strong feature curve; z = slope * (half_x - |x|).
inline PointCloud roof_surface(int n, double half_x, double len_y, double slope,
                               std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-half_x, half_x);
    const double y = rng.uniform(-len_y / 2, len_y / 2);
    cloud.points.emplace_back(x, y, slope * (half_x - std::abs(x)));
  }
  return cloud;
}

/// Closed cylinder (curved band plus two flat caps, sharp rim edges), axis z.
/// Piecewise smooth in the fandisk spirit: smooth curved region, flat
/// regions, and sharp feature curves joining them.
inline PointCloud cylinder_surface(int n, double radius, double height,
                                   std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  cloud.points.reserve(n);
  const double side_area = 2.0 * M_PI * radius * height;
  const double cap_area = M_PI * radius * radius;
  const double total = side_area + 2.0 * cap_area;
  for (int i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    if (pick < side_area) {
      const double phi = rng.uniform(0, 2.0 * M_PI);
      cloud.points.emplace_back(radius * std::cos(phi), radius * std::sin(phi),
                                rng.uniform(-height / 2, height / 2));
    } else {
      const double r = radius * std::sqrt(rng.uniform());
      const double phi = rng.uniform(0, 2.0 * M_PI);
      const double z = pick < side_area + cap_area ? height / 2 : -height / 2;
      cloud.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
  }
  return cloud;
}

/// Deterministic quasi-uniform sphere samples (Fibonacci spiral).
inline PointCloud sphere_cloud(int n, double radius) {
  PointCloud cloud;
  cloud.points.reserve(n);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    cloud.points.emplace_back(radius * r * std::cos(phi), radius * r * std::sin(phi),
                              radius * z);
  }
  return cloud;
}

/// Smooth single-valued patch z = 0.3 sin(x) cos(y) over a grid; stands in
/// for an organic surface patch.
inline PointCloud wavy_patch(int nx, int ny, double spacing) {
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(nx) * ny);
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x) {
      const double px = x * spacing, py = y * spacing;
      cloud.points.emplace_back(px, py, 0.3 * std::sin(px) * std::cos(py));
    }
  return cloud;
}

/// Uniform random cloud in a box (generic random-graph substrate).
inline PointCloud random_blob(int n, double side, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  cloud.points.reserve(n);
  for (int i = 0; i < n; ++i)
    cloud.points.emplace_back(rng.uniform(0, side), rng.uniform(0, side),
                              rng.uniform(0, side));
  return cloud;
}

/// Random rotation matrix (uniform via quaternion).
inline rglr::Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double qw = std::sqrt(1 - u1) * std::sin(2 * M_PI * u2);
  const double qx = std::sqrt(1 - u1) * std::cos(2 * M_PI * u2);
  const double qy = std::sqrt(u1) * std::sin(2 * M_PI * u3);
  const double qz = std::sqrt(u1) * std::cos(2 * M_PI * u3);
  Eigen::Quaterniond q(qw, qx, qy, qz);
  return q.normalized().toRotationMatrix();
}

inline PointCloud rotate(const PointCloud& cloud, const rglr::Mat3& R) {
  PointCloud out = cloud;
  for (Vec3& p : out.points) p = R * p;
  if (out.normals)
    for (Vec3& n : *out.normals) n = R * n;
  return out;
}

}  // namespace testsupport
