#pragma once

#include <string>
#include <variant>
#include <vector>

#include "vxf/core.h"
#include "vxf/layer.h"
#include "vxf/scan.h"

namespace vxf {

struct Plane {
  Point normal = Point(0, 0, 1);  // unit
  FloatingPoint offset = 0.0f;    // signed distance of the plane from origin along normal
};

struct Sphere {
  Point center = Point::Zero();
  FloatingPoint radius = 1.0f;
};

struct AxisAlignedBox {
  Point center = Point::Zero();
  Point half_extents = Point(1, 1, 1);
};

using Primitive = std::variant<Plane, Sphere, AxisAlignedBox>;

FloatingPoint primitive_sdf(const Primitive& prim, const Point& p);

struct CameraModel {
  int width = 320;
  int height = 240;
  FloatingPoint fx = 160.0f;  // 90 degree horizontal field of view
  FloatingPoint fy = 160.0f;
  FloatingPoint cx = 160.0f;
  FloatingPoint cy = 120.0f;
  FloatingPoint max_range = 5.0f;
};

/// Analytic ground-truth environment with an exact signed distance function.
class SimWorld {
 public:
  void add(const Primitive& prim) { primitives_.push_back(prim); }
  const std::vector<Primitive>& primitives() const { return primitives_; }

  void set_bounds(const Point& lo, const Point& hi) {
    bounds_lo_ = lo;
    bounds_hi_ = hi;
  }
  const Point& bounds_lo() const { return bounds_lo_; }
  const Point& bounds_hi() const { return bounds_hi_; }

  /// Minimum over primitives of the exact analytic signed distance.
  FloatingPoint sdf(const Point& p) const;

  /// Noiseless depth camera: per pixel, sphere-trace the ray through the pixel
  /// center until |sdf| < 1e-6 or max_range. Hit points are emitted in the
  /// sensor frame; misses emit nothing.
  Scan render_depth(const Transform& pose, const CameraModel& camera) const;

  /// n poses with sdf(position) >= min_clearance, positions uniform within the
  /// world bounds by rejection, orientations uniform. Deterministic per seed.
  /// Throws after 1e6 rejected attempts.
  std::vector<Transform> sample_viewpoints(int n, FloatingPoint min_clearance,
                                           uint64_t seed) const;

  /// Every voxel of every block covering the bounds holds
  /// clamp(sdf(center), -d_max, d_max), observed.
  EsdfLayer ground_truth_esdf(FloatingPoint voxel_size, int voxels_per_side,
                              FloatingPoint d_max) const;

  /// The checked-in benchmark world: 10x10x10 m, floor, two walls, a sphere
  /// and a cube.
  static SimWorld default_world();

  /// Plain-text world description, one primitive per line:
  ///   bounds x0 y0 z0 x1 y1 z1
  ///   plane nx ny nz offset
  ///   sphere cx cy cz radius
  ///   box cx cy cz hx hy hz
  static SimWorld load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<Primitive> primitives_;
  Point bounds_lo_ = Point(0, 0, 0);
  Point bounds_hi_ = Point(10, 10, 10);
};

}  // namespace vxf
