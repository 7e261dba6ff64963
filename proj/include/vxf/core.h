#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vxf {

using FloatingPoint = float;
using Point = Eigen::Vector3f;
using Transform = Eigen::Isometry3f;

using GlobalVoxelIndex = Eigen::Vector3i;
using BlockIndex = Eigen::Vector3i;
using LocalVoxelIndex = Eigen::Vector3i;

struct Color {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  bool operator==(const Color& o) const { return r == o.r && g == o.g && b == o.b; }
};

/// TSDF voxels with weight above this threshold count as observed.
inline constexpr FloatingPoint kTsdfObservedWeight = 1e-4f;

inline int floor_div(int a, int b) {
  int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

/// Voxel containing p; component i = floor(p_i / voxel_size).
inline GlobalVoxelIndex global_index_from_point(const Point& p, FloatingPoint voxel_size) {
  return GlobalVoxelIndex(static_cast<int>(std::floor(p.x() / voxel_size)),
                          static_cast<int>(std::floor(p.y() / voxel_size)),
                          static_cast<int>(std::floor(p.z() / voxel_size)));
}

/// Voxel centers sit at (index + 0.5) * voxel_size.
inline Point voxel_center(const GlobalVoxelIndex& g, FloatingPoint voxel_size) {
  return (g.cast<FloatingPoint>() + Point::Constant(0.5f)) * voxel_size;
}

/// Floor decomposition: negative indices split away from zero, local in [0, vps).
inline void split_global_index(const GlobalVoxelIndex& g, int voxels_per_side, BlockIndex* block,
                               LocalVoxelIndex* local) {
  for (int i = 0; i < 3; ++i) {
    (*block)[i] = floor_div(g[i], voxels_per_side);
    (*local)[i] = g[i] - (*block)[i] * voxels_per_side;
  }
}

inline GlobalVoxelIndex combine_indices(const BlockIndex& block, const LocalVoxelIndex& local,
                                        int voxels_per_side) {
  return block * voxels_per_side + local;
}

struct IndexHash {
  size_t operator()(const Eigen::Vector3i& idx) const {
    // Teschner-style spatial hash; the contract is only O(1) average lookup.
    return static_cast<size_t>((idx.x() * 73856093) ^ (idx.y() * 19349669) ^
                               (idx.z() * 83492791));
  }
};

struct IndexEqual {
  bool operator()(const Eigen::Vector3i& a, const Eigen::Vector3i& b) const {
    return a.x() == b.x() && a.y() == b.y() && a.z() == b.z();
  }
};

using IndexSet = std::unordered_set<Eigen::Vector3i, IndexHash, IndexEqual>;

template <typename T>
using IndexMap = std::unordered_map<Eigen::Vector3i, T, IndexHash, IndexEqual>;

/// Deterministic RNG with a platform-independent uniform mapping, so seeded
/// runs produce identical output everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  uint64_t next_u64() {
    // splitmix64
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  bool flip() { return (next_u64() & 1u) != 0; }

  /// Uniform random rotation (Shoemake quaternion sampling).
  Eigen::Quaternionf random_rotation() {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t1 = 2.0 * M_PI * u2, t2 = 2.0 * M_PI * u3;
    return Eigen::Quaternionf(static_cast<float>(b * std::cos(t2)),
                              static_cast<float>(a * std::sin(t1)),
                              static_cast<float>(a * std::cos(t1)),
                              static_cast<float>(b * std::sin(t2)));
  }

 private:
  uint64_t state_;
};

}  // namespace vxf
