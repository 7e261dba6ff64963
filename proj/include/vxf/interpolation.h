#pragma once

#include <optional>

#include "vxf/layer.h"

namespace vxf {

namespace detail {

inline bool voxel_distance(const TsdfVoxel& v, FloatingPoint* d) {
  if (!v.observed()) return false;
  *d = v.distance;
  return true;
}

inline bool voxel_distance(const EsdfVoxel& v, FloatingPoint* d) {
  if (!v.observed()) return false;
  *d = v.distance;
  return true;
}

}  // namespace detail

/// Trilinear interpolation over the 8 voxel centers surrounding p. Absent when
/// any of the 8 voxels is unallocated or unobserved; callers decide fallback.
template <typename VoxelT>
std::optional<FloatingPoint> interpolate_distance(const Layer<VoxelT>& layer, const Point& p) {
  const FloatingPoint v = layer.voxel_size();
  // Work in center coordinates: centers live on the integer lattice of q.
  const Eigen::Vector3f q = p / v - Point::Constant(0.5f);
  const GlobalVoxelIndex base(static_cast<int>(std::floor(q.x())),
                              static_cast<int>(std::floor(q.y())),
                              static_cast<int>(std::floor(q.z())));
  const Eigen::Vector3f frac = q - base.cast<FloatingPoint>();

  FloatingPoint corner[2][2][2];
  for (int dz = 0; dz < 2; ++dz) {
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const VoxelT* voxel = layer.voxel_ptr(base + GlobalVoxelIndex(dx, dy, dz));
        if (voxel == nullptr || !detail::voxel_distance(*voxel, &corner[dx][dy][dz])) {
          return std::nullopt;
        }
      }
    }
  }

  FloatingPoint plane[2][2];
  for (int dy = 0; dy < 2; ++dy) {
    for (int dz = 0; dz < 2; ++dz) {
      plane[dy][dz] = corner[0][dy][dz] + frac.x() * (corner[1][dy][dz] - corner[0][dy][dz]);
    }
  }
  FloatingPoint line[2];
  for (int dz = 0; dz < 2; ++dz) {
    line[dz] = plane[0][dz] + frac.y() * (plane[1][dz] - plane[0][dz]);
  }
  return line[0] + frac.z() * (line[1] - line[0]);
}

}  // namespace vxf
