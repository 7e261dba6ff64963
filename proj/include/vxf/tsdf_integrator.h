#pragma once

#include <cstddef>

#include "vxf/core.h"
#include "vxf/layer.h"
#include "vxf/scan.h"

namespace vxf {

enum class WeightMode {
  kConstant,         // w = 1
  kInverseZ2,        // w = 1/z^2
  kInverseZ2Dropoff  // w = 1/z^2 with a linear drop-off behind the surface
};

enum class MergeMode {
  kSimpleRaycast,   // one raycast per point
  kGroupedRaycast,  // one raycast per terminal voxel
  kGroupedAntiGraze // grouped, passing rays skip other buckets' terminal voxels
};

struct TsdfConfig {
  FloatingPoint truncation = 0.4f;       // delta, commonly 4 * voxel_size
  FloatingPoint dropoff_epsilon = 0.1f;  // epsilon, commonly 1 * voxel_size
  FloatingPoint max_weight = 1e4f;
  WeightMode weight_mode = WeightMode::kInverseZ2Dropoff;
  MergeMode merge_mode = MergeMode::kGroupedRaycast;
  FloatingPoint min_ray_length = 0.05f;
  FloatingPoint max_ray_length = 10.0f;

  /// Truncation 4v, drop-off v.
  static TsdfConfig for_voxel_size(FloatingPoint v) {
    TsdfConfig c;
    c.truncation = 4.0f * v;
    c.dropoff_epsilon = v;
    return c;
  }

  void validate() const;
};

/// Signed distance of voxel center x from the surface measured along the ray
/// through point p from sensor origin s: ||p - x|| sign((p - x) . (p - s)).
/// sign(0) is +1, so a voxel exactly at the measurement reads as free side.
FloatingPoint projective_distance(const Point& x, const Point& p, const Point& s);

/// Measurement weight for a voxel at projective distance d with ray depth z.
FloatingPoint measurement_weight(WeightMode mode, FloatingPoint z, FloatingPoint d,
                                 FloatingPoint truncation, FloatingPoint dropoff_epsilon);

/// Weighted running merge of a new observation (d, w) into a voxel. d is
/// clamped to [-truncation, truncation] before merging; the accumulated weight
/// saturates at max_weight.
void update_tsdf_voxel(TsdfVoxel* voxel, FloatingPoint d, FloatingPoint w,
                       FloatingPoint truncation, FloatingPoint max_weight);
void update_tsdf_voxel(TsdfVoxel* voxel, FloatingPoint d, FloatingPoint w,
                       FloatingPoint truncation, FloatingPoint max_weight, const Color& color,
                       bool has_color);

/// Walks every voxel pierced by the segment [start, end] in traversal order.
class RayCaster {
 public:
  RayCaster(const Point& start, const Point& end, FloatingPoint voxel_size);
  bool next(GlobalVoxelIndex* index);

 private:
  GlobalVoxelIndex current_, end_;
  Eigen::Vector3i step_;
  Eigen::Vector3f t_max_, t_delta_;
  size_t remaining_;
  bool done_ = false;
};

/// Fuses posed scans into a TSDF layer. Out-of-range points are skipped and
/// counted, never fatal.
class TsdfIntegrator {
 public:
  TsdfIntegrator(const TsdfConfig& config, TsdfLayer* layer);

  /// Returns the number of voxel updates performed.
  size_t integrate(const Scan& scan);

  size_t raycasts_last_scan() const { return raycasts_last_scan_; }
  size_t skipped_points_last_scan() const { return skipped_last_scan_; }

  const TsdfConfig& config() const { return config_; }

 private:
  struct PointBucket {
    Eigen::Vector3d weighted_position = Eigen::Vector3d::Zero();
    Eigen::Vector3d weighted_color = Eigen::Vector3d::Zero();
    double weight = 0.0;
    size_t count = 0;
  };

  size_t integrate_simple(const Scan& scan);
  size_t integrate_grouped(const Scan& scan, bool anti_graze);
  size_t cast_and_update(const Point& origin, const Point& surface_point, FloatingPoint weight,
                         const Color& color, bool has_color,
                         const IndexMap<PointBucket>* terminal_buckets,
                         const GlobalVoxelIndex* own_terminal);

  TsdfConfig config_;
  TsdfLayer* layer_;
  size_t raycasts_last_scan_ = 0;
  size_t skipped_last_scan_ = 0;

  // one-entry block cache; consecutive ray steps mostly stay in a block
  BlockIndex cached_index_{0, 0, 0};
  Block<TsdfVoxel>* cached_block_ = nullptr;
};

}  // namespace vxf
