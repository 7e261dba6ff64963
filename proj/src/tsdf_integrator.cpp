#include "vxf/tsdf_integrator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vxf {

void TsdfConfig::validate() const {
  if (!(dropoff_epsilon > 0.0f) || !(dropoff_epsilon < truncation)) {
    throw std::invalid_argument("tsdf config requires 0 < dropoff_epsilon < truncation");
  }
  if (!(min_ray_length >= 0.0f) || !(min_ray_length < max_ray_length)) {
    throw std::invalid_argument("tsdf config requires 0 <= min_ray_length < max_ray_length");
  }
  if (!(max_weight > 0.0f)) {
    throw std::invalid_argument("tsdf config requires max_weight > 0");
  }
}

FloatingPoint projective_distance(const Point& x, const Point& p, const Point& s) {
  const Point to_point = p - x;
  const FloatingPoint magnitude = to_point.norm();
  const FloatingPoint along = to_point.dot(p - s);
  return along < 0.0f ? -magnitude : magnitude;
}

FloatingPoint measurement_weight(WeightMode mode, FloatingPoint z, FloatingPoint d,
                                 FloatingPoint truncation, FloatingPoint dropoff_epsilon) {
  switch (mode) {
    case WeightMode::kConstant:
      return 1.0f;
    case WeightMode::kInverseZ2:
      return 1.0f / (z * z);
    case WeightMode::kInverseZ2Dropoff: {
      const FloatingPoint base = 1.0f / (z * z);
      if (d > -dropoff_epsilon) return base;
      if (d < -truncation) return 0.0f;
      return base * (d + truncation) / (truncation - dropoff_epsilon);
    }
  }
  return 0.0f;
}

void update_tsdf_voxel(TsdfVoxel* voxel, FloatingPoint d, FloatingPoint w,
                       FloatingPoint truncation, FloatingPoint max_weight) {
  update_tsdf_voxel(voxel, d, w, truncation, max_weight, Color{}, false);
}

void update_tsdf_voxel(TsdfVoxel* voxel, FloatingPoint d, FloatingPoint w,
                       FloatingPoint truncation, FloatingPoint max_weight, const Color& color,
                       bool has_color) {
  if (w <= 0.0f) return;
  const FloatingPoint clamped = std::clamp(d, -truncation, truncation);
  const FloatingPoint total = voxel->weight + w;
  voxel->distance = (voxel->weight * voxel->distance + w * clamped) / total;
  if (has_color) {
    auto blend = [&](uint8_t old_c, uint8_t new_c) {
      const FloatingPoint mixed = (voxel->weight * old_c + w * new_c) / total;
      return static_cast<uint8_t>(std::clamp(std::lround(mixed), 0l, 255l));
    };
    voxel->color = {blend(voxel->color.r, color.r), blend(voxel->color.g, color.g),
                    blend(voxel->color.b, color.b)};
  }
  voxel->weight = std::min(total, max_weight);
}

RayCaster::RayCaster(const Point& start, const Point& end, FloatingPoint voxel_size) {
  current_ = global_index_from_point(start, voxel_size);
  end_ = global_index_from_point(end, voxel_size);
  const Point direction = end - start;
  size_t span = 0;
  for (int i = 0; i < 3; ++i) {
    step_[i] = direction[i] > 0.0f ? 1 : (direction[i] < 0.0f ? -1 : 0);
    if (step_[i] == 0) {
      t_max_[i] = std::numeric_limits<FloatingPoint>::infinity();
      t_delta_[i] = std::numeric_limits<FloatingPoint>::infinity();
    } else {
      const FloatingPoint boundary =
          (current_[i] + (step_[i] > 0 ? 1 : 0)) * voxel_size;
      t_max_[i] = (boundary - start[i]) / direction[i];
      t_delta_[i] = voxel_size / std::abs(direction[i]);
    }
    span += static_cast<size_t>(std::abs(end_[i] - current_[i]));
  }
  remaining_ = span + 1;
}

bool RayCaster::next(GlobalVoxelIndex* index) {
  if (done_ || remaining_ == 0) return false;
  *index = current_;
  --remaining_;
  if (IndexEqual()(current_, end_)) {
    done_ = true;
    return true;
  }
  int axis = 0;
  if (t_max_[1] < t_max_[axis]) axis = 1;
  if (t_max_[2] < t_max_[axis]) axis = 2;
  current_[axis] += step_[axis];
  t_max_[axis] += t_delta_[axis];
  return true;
}

TsdfIntegrator::TsdfIntegrator(const TsdfConfig& config, TsdfLayer* layer)
    : config_(config), layer_(layer) {
  config_.validate();
}

size_t TsdfIntegrator::integrate(const Scan& scan) {
  raycasts_last_scan_ = 0;
  skipped_last_scan_ = 0;
  cached_block_ = nullptr;
  if (!scan.colors.empty() && scan.colors.size() != scan.points.size()) {
    throw std::invalid_argument("scan colors must parallel points");
  }
  switch (config_.merge_mode) {
    case MergeMode::kSimpleRaycast:
      return integrate_simple(scan);
    case MergeMode::kGroupedRaycast:
      return integrate_grouped(scan, false);
    case MergeMode::kGroupedAntiGraze:
      return integrate_grouped(scan, true);
  }
  return 0;
}

size_t TsdfIntegrator::cast_and_update(const Point& origin, const Point& surface_point,
                                       FloatingPoint weight, const Color& color, bool has_color,
                                       const IndexMap<PointBucket>* terminal_buckets,
                                       const GlobalVoxelIndex* own_terminal) {
  const FloatingPoint voxel_size = layer_->voxel_size();
  const int vps = layer_->voxels_per_side();
  const Point ray = surface_point - origin;
  const FloatingPoint depth = ray.norm();
  if (depth <= 0.0f) return 0;
  // Extend truncation past the measurement so the negative band is filled.
  const Point ray_end = surface_point + ray * (config_.truncation / depth);

  ++raycasts_last_scan_;
  size_t updates = 0;
  RayCaster caster(origin, ray_end, voxel_size);
  GlobalVoxelIndex g;
  while (caster.next(&g)) {
    if (terminal_buckets != nullptr && !IndexEqual()(g, *own_terminal) &&
        terminal_buckets->count(g) > 0) {
      // Grazing filter: this voxel is a surface terminal of another bucket in
      // the current scan; passing rays contribute no measurement to it.
      continue;
    }
    const Point x = voxel_center(g, voxel_size);
    const FloatingPoint d = projective_distance(x, surface_point, origin);
    const FloatingPoint w =
        measurement_weight(config_.weight_mode, depth, d, config_.truncation,
                           config_.dropoff_epsilon) *
        weight;
    if (w <= 0.0f) continue;

    BlockIndex bidx;
    LocalVoxelIndex local;
    split_global_index(g, vps, &bidx, &local);
    if (cached_block_ == nullptr || !IndexEqual()(bidx, cached_index_)) {
      cached_block_ = &layer_->get_or_allocate_block(bidx);
      cached_index_ = bidx;
    }
    layer_->mark_updated(bidx);
    update_tsdf_voxel(&cached_block_->voxel(local), d, w, config_.truncation, config_.max_weight,
                      color, has_color);
    ++updates;
  }
  return updates;
}

size_t TsdfIntegrator::integrate_simple(const Scan& scan) {
  const Point origin = scan.origin();
  const bool has_color = scan.has_colors();
  size_t updates = 0;
  for (size_t i = 0; i < scan.points.size(); ++i) {
    const Point p = scan.pose * scan.points[i];
    const FloatingPoint depth = (p - origin).norm();
    if (depth < config_.min_ray_length || depth > config_.max_ray_length) {
      ++skipped_last_scan_;
      continue;
    }
    updates += cast_and_update(origin, p, 1.0f, has_color ? scan.colors[i] : Color{}, has_color,
                               nullptr, nullptr);
  }
  return updates;
}

size_t TsdfIntegrator::integrate_grouped(const Scan& scan, bool anti_graze) {
  const Point origin = scan.origin();
  const bool has_color = scan.has_colors();
  const FloatingPoint voxel_size = layer_->voxel_size();

  // Group points by terminal voxel; each bucket merges to one weighted-mean
  // measurement and one raycast.
  IndexMap<PointBucket> buckets;
  buckets.reserve(scan.points.size() / 4 + 1);
  for (size_t i = 0; i < scan.points.size(); ++i) {
    const Point p = scan.pose * scan.points[i];
    const FloatingPoint depth = (p - origin).norm();
    if (depth < config_.min_ray_length || depth > config_.max_ray_length) {
      ++skipped_last_scan_;
      continue;
    }
    const FloatingPoint w = measurement_weight(
        config_.weight_mode == WeightMode::kConstant ? WeightMode::kConstant
                                                     : WeightMode::kInverseZ2,
        depth, 0.0f, config_.truncation, config_.dropoff_epsilon);
    PointBucket& bucket = buckets[global_index_from_point(p, voxel_size)];
    bucket.weighted_position += w * p.cast<double>();
    if (has_color) {
      const Color& c = scan.colors[i];
      bucket.weighted_color += w * Eigen::Vector3d(c.r, c.g, c.b);
    }
    bucket.weight += w;
    ++bucket.count;
  }

  size_t updates = 0;
  for (const auto& [terminal, bucket] : buckets) {
    if (bucket.weight <= 0.0) continue;
    const Point mean_point = (bucket.weighted_position / bucket.weight).cast<FloatingPoint>();
    Color mean_color;
    if (has_color) {
      const Eigen::Vector3d c = bucket.weighted_color / bucket.weight;
      mean_color = {static_cast<uint8_t>(std::clamp(std::lround(c.x()), 0l, 255l)),
                    static_cast<uint8_t>(std::clamp(std::lround(c.y()), 0l, 255l)),
                    static_cast<uint8_t>(std::clamp(std::lround(c.z()), 0l, 255l))};
    }
    // The bucket weight already sums the per-point sensor weights; the
    // behind-surface drop-off is applied per voxel inside the raycast, so the
    // merged ray carries the base (non-dropoff) weight.
    const FloatingPoint base_weight =
        static_cast<FloatingPoint>(bucket.weight) /
        measurement_weight(config_.weight_mode == WeightMode::kConstant ? WeightMode::kConstant
                                                                        : WeightMode::kInverseZ2,
                           (mean_point - origin).norm(), 0.0f, config_.truncation,
                           config_.dropoff_epsilon);
    updates += cast_and_update(origin, mean_point, base_weight, mean_color, has_color,
                               anti_graze ? &buckets : nullptr, &terminal);
  }
  return updates;
}

}  // namespace vxf
