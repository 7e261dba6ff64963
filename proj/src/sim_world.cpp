#include "vxf/sim_world.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vxf {

FloatingPoint primitive_sdf(const Primitive& prim, const Point& p) {
  return std::visit(
      [&](const auto& shape) -> FloatingPoint {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Plane>) {
          return shape.normal.dot(p) - shape.offset;
        } else if constexpr (std::is_same_v<T, Sphere>) {
          return (p - shape.center).norm() - shape.radius;
        } else {
          const Point q = (p - shape.center).cwiseAbs() - shape.half_extents;
          const FloatingPoint outside = q.cwiseMax(0.0f).norm();
          const FloatingPoint inside = std::min(q.maxCoeff(), 0.0f);
          return outside + inside;
        }
      },
      prim);
}

FloatingPoint SimWorld::sdf(const Point& p) const {
  FloatingPoint d = std::numeric_limits<FloatingPoint>::max();
  for (const Primitive& prim : primitives_) {
    d = std::min(d, primitive_sdf(prim, p));
  }
  return d;
}

Scan SimWorld::render_depth(const Transform& pose, const CameraModel& camera) const {
  constexpr FloatingPoint kHitEpsilon = 1e-6f;
  constexpr int kMaxSteps = 512;

  Scan scan;
  scan.pose = pose;
  scan.points.reserve(static_cast<size_t>(camera.width) * camera.height / 4);
  const Point origin = pose.translation();
  const Eigen::Matrix3f rotation = pose.linear();

  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      const Point dir_sensor =
          Point((u - camera.cx) / camera.fx, (v - camera.cy) / camera.fy, 1.0f).normalized();
      const Point dir = rotation * dir_sensor;

      FloatingPoint t = 0.0f;
      bool hit = false;
      for (int step = 0; step < kMaxSteps && t <= camera.max_range; ++step) {
        const FloatingPoint d = sdf(origin + t * dir);
        if (std::abs(d) < kHitEpsilon) {
          hit = true;
          break;
        }
        if (d < 0.0f) break;  // started inside an object; no return
        t += d;
      }
      if (hit && t <= camera.max_range) {
        scan.points.push_back(dir_sensor * t);
      }
    }
  }
  return scan;
}

std::vector<Transform> SimWorld::sample_viewpoints(int n, FloatingPoint min_clearance,
                                                   uint64_t seed) const {
  if (n < 1) return {};
  constexpr size_t kBudget = 1000000;
  Rng rng(seed);
  std::vector<Transform> poses;
  poses.reserve(n);
  size_t attempts = 0;
  while (poses.size() < static_cast<size_t>(n)) {
    if (++attempts > kBudget) {
      throw std::runtime_error("viewpoint sampling exhausted its rejection budget; "
                               "the feasible region may be empty");
    }
    Point p;
    for (int i = 0; i < 3; ++i) {
      p[i] = static_cast<FloatingPoint>(rng.uniform(bounds_lo_[i], bounds_hi_[i]));
    }
    if (sdf(p) < min_clearance) continue;
    Transform pose = Transform::Identity();
    pose.linear() = rng.random_rotation().toRotationMatrix();
    pose.translation() = p;
    poses.push_back(pose);
  }
  return poses;
}

EsdfLayer SimWorld::ground_truth_esdf(FloatingPoint voxel_size, int voxels_per_side,
                                      FloatingPoint d_max) const {
  EsdfLayer layer(voxel_size, voxels_per_side);
  const GlobalVoxelIndex lo = global_index_from_point(bounds_lo_, voxel_size);
  const GlobalVoxelIndex hi = global_index_from_point(bounds_hi_, voxel_size);
  BlockIndex block_lo, block_hi;
  LocalVoxelIndex ignored;
  split_global_index(lo, voxels_per_side, &block_lo, &ignored);
  split_global_index(hi, voxels_per_side, &block_hi, &ignored);

  for (int bz = block_lo.z(); bz <= block_hi.z(); ++bz) {
    for (int by = block_lo.y(); by <= block_hi.y(); ++by) {
      for (int bx = block_lo.x(); bx <= block_hi.x(); ++bx) {
        auto& block = layer.get_or_allocate_block(BlockIndex(bx, by, bz));
        for (size_t lin = 0; lin < block.num_voxels(); ++lin) {
          const GlobalVoxelIndex g = combine_indices(
              block.index(), block.local_from_linear(lin), voxels_per_side);
          EsdfVoxel& voxel = block.voxel(lin);
          voxel.distance = std::clamp(sdf(voxel_center(g, voxel_size)), -d_max, d_max);
          voxel.set_observed(true);
        }
      }
    }
  }
  return layer;
}

SimWorld SimWorld::default_world() {
  SimWorld world;
  world.set_bounds(Point(0, 0, 0), Point(10, 10, 10));
  world.add(Plane{Point(0, 0, 1), 0.0f});    // floor
  world.add(Plane{Point(-1, 0, 0), -10.0f});  // wall x = 10
  world.add(Plane{Point(0, -1, 0), -10.0f});  // wall y = 10
  world.add(Sphere{Point(2.6f, 6.4f, 1.8f), 1.6f});
  world.add(AxisAlignedBox{Point(6.4f, 3.0f, 1.2f), Point(1.1f, 1.1f, 1.2f)});
  return world;
}

SimWorld SimWorld::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open world file: " + path);
  SimWorld world;
  std::string line;
  size_t lineno = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    auto want = [&](int count) {
      std::vector<FloatingPoint> vals(count);
      for (int i = 0; i < count; ++i) {
        if (!(ls >> vals[i])) {
          throw std::runtime_error("world file line " + std::to_string(lineno) + ": '" + kind +
                                   "' needs " + std::to_string(count) + " numbers");
        }
      }
      return vals;
    };
    if (kind == "bounds") {
      const auto v = want(6);
      world.set_bounds(Point(v[0], v[1], v[2]), Point(v[3], v[4], v[5]));
    } else if (kind == "plane") {
      const auto v = want(4);
      Point n(v[0], v[1], v[2]);
      if (n.norm() < 1e-9f) {
        throw std::runtime_error("world file line " + std::to_string(lineno) +
                                 ": plane normal must be nonzero");
      }
      world.add(Plane{n.normalized(), v[3]});
      any = true;
    } else if (kind == "sphere") {
      const auto v = want(4);
      if (v[3] <= 0) {
        throw std::runtime_error("world file line " + std::to_string(lineno) +
                                 ": sphere radius must be positive");
      }
      world.add(Sphere{Point(v[0], v[1], v[2]), v[3]});
      any = true;
    } else if (kind == "box") {
      const auto v = want(6);
      if (v[3] <= 0 || v[4] <= 0 || v[5] <= 0) {
        throw std::runtime_error("world file line " + std::to_string(lineno) +
                                 ": box half-extents must be positive");
      }
      world.add(AxisAlignedBox{Point(v[0], v[1], v[2]), Point(v[3], v[4], v[5])});
      any = true;
    } else {
      throw std::runtime_error("world file line " + std::to_string(lineno) +
                               ": unknown primitive '" + kind + "'");
    }
  }
  if (!any) throw std::runtime_error("world file has no primitives: " + path);
  return world;
}

void SimWorld::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write world file: " + path);
  out << "bounds " << bounds_lo_.x() << " " << bounds_lo_.y() << " " << bounds_lo_.z() << " "
      << bounds_hi_.x() << " " << bounds_hi_.y() << " " << bounds_hi_.z() << "\n";
  for (const Primitive& prim : primitives_) {
    std::visit(
        [&](const auto& shape) {
          using T = std::decay_t<decltype(shape)>;
          if constexpr (std::is_same_v<T, Plane>) {
            out << "plane " << shape.normal.x() << " " << shape.normal.y() << " "
                << shape.normal.z() << " " << shape.offset << "\n";
          } else if constexpr (std::is_same_v<T, Sphere>) {
            out << "sphere " << shape.center.x() << " " << shape.center.y() << " "
                << shape.center.z() << " " << shape.radius << "\n";
          } else {
            out << "box " << shape.center.x() << " " << shape.center.y() << " "
                << shape.center.z() << " " << shape.half_extents.x() << " "
                << shape.half_extents.y() << " " << shape.half_extents.z() << "\n";
          }
        },
        prim);
  }
}

}  // namespace vxf
