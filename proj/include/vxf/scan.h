#pragma once

#include <string>
#include <vector>

#include "vxf/core.h"
#include "vxf/mesh.h"

namespace vxf {

/// Ordered 3D points in the sensor frame plus the rigid sensor-to-world pose.
/// The sensor origin is the pose translation.
struct Scan {
  std::vector<Point> points;
  std::vector<Color> colors;  // empty or parallel to points
  Transform pose = Transform::Identity();

  bool has_colors() const { return !colors.empty(); }
  Point origin() const { return pose.translation(); }
};

struct TimedPose {
  double timestamp = 0.0;
  Transform pose = Transform::Identity();
};

/// PLY point cloud, ascii or binary little-endian, properties
/// x,y,z[,red,green,blue]. Other vertex properties are skipped.
Scan load_ply_points(const std::string& path);

/// TUM trajectory: one line per scan, `timestamp tx ty tz qx qy qz qw`,
/// '#' comments allowed.
std::vector<TimedPose> load_tum_trajectory(const std::string& path);

/// Binary little-endian PLY with per-vertex normals and optional colors.
void save_ply_mesh(const Mesh& mesh, const std::string& path);

}  // namespace vxf
