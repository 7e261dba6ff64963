#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "vxf/core.h"
#include "vxf/layer.h"

namespace vxf {

enum class FixedBandMode {
  kOneVoxel,        // gamma = voxel_size
  kHalfTruncation,  // gamma = truncation / 2
};

enum class DistanceMetric {
  kQuasiEuclidean,  // grid steps of v, sqrt(2) v, sqrt(3) v
  kEuclidean,       // exact distance to the parent seed voxel
};

enum class QueueMode {
  kFifo,
  kPrioritySingleInsert,  // a voxel queues at most once, priority from first insert
  kPriorityMultiInsert,   // re-queued on every improvement, lowest priority pops first
};

struct EsdfConfig {
  FloatingPoint d_max = 4.0f;  // maximum computed distance
  FixedBandMode band_mode = FixedBandMode::kOneVoxel;
  FloatingPoint truncation = 0.4f;  // delta of the source TSDF, sizes the half-trunc band
  DistanceMetric metric = DistanceMetric::kQuasiEuclidean;
  QueueMode queue_mode = QueueMode::kPrioritySingleInsert;
  FloatingPoint bucket_width = 0.0f;  // 0 = voxel size

  FloatingPoint band_radius(FloatingPoint voxel_size) const {
    return band_mode == FixedBandMode::kOneVoxel ? voxel_size : 0.5f * truncation;
  }

  void validate(FloatingPoint voxel_size) const;
};

struct PropagateStats {
  size_t raised = 0;     // voxels reset by the raise wavefront
  size_t lowered = 0;    // relaxations applied by the lower wavefront
  size_t raise_pops = 0;
  size_t lower_pops = 0;
  double seconds = 0.0;
};

/// True iff the TSDF distance lies strictly inside the fixed band.
inline bool is_fixed(FloatingPoint tsdf_distance, FloatingPoint gamma) {
  return tsdf_distance > -gamma && tsdf_distance < gamma;
}

/// Bucketed priority queue keyed by |d| (bucket width defaults to the voxel
/// size), FIFO within a bucket, or a plain FIFO.
class WavefrontQueue {
 public:
  WavefrontQueue(QueueMode mode, FloatingPoint bucket_width, FloatingPoint d_max);

  void push(const GlobalVoxelIndex& index, FloatingPoint priority);
  bool pop(GlobalVoxelIndex* index);
  bool empty() const { return size_ == 0; }
  size_t size() const { return size_; }

 private:
  QueueMode mode_;
  FloatingPoint bucket_width_;
  std::deque<GlobalVoxelIndex> fifo_;
  std::vector<std::deque<GlobalVoxelIndex>> buckets_;
  size_t cursor_ = 0;
  size_t size_ = 0;
};

/// Incrementally maintains an ESDF layer from TSDF updates with raise/lower
/// wavefronts over the 26-connected grid. Fixed-band voxels copy their TSDF
/// value and are never modified by either wavefront; unobserved TSDF voxels
/// are skipped.
class EsdfIntegrator {
 public:
  EsdfIntegrator(const EsdfConfig& config, const TsdfLayer* tsdf, EsdfLayer* esdf);

  /// Runs Propagate over the given updated TSDF blocks: seeds/adjusts the
  /// wavefronts, then drains the raise queue fully, then the lower queue.
  PropagateStats propagate(const IndexSet& updated_blocks);

  /// Batch build: propagate over every allocated TSDF block into a fresh layer.
  static EsdfLayer build_batch(const TsdfLayer& tsdf, const EsdfConfig& config);

  /// Occupancy-seeded baseline: every observed voxel with negative TSDF
  /// distance seeds at 0 and distances lower outward; nothing goes negative.
  static EsdfLayer build_from_occupancy(const TsdfLayer& tsdf, const EsdfConfig& config);

  const EsdfConfig& config() const { return config_; }
  FloatingPoint band_radius() const { return gamma_; }

 private:
  struct Neighbor {
    GlobalVoxelIndex offset;
    FloatingPoint step;  // quasi-Euclidean step length
  };

  EsdfVoxel* esdf_voxel(const GlobalVoxelIndex& g);
  void push_lower(const GlobalVoxelIndex& g, EsdfVoxel* v);
  void push_raise(const GlobalVoxelIndex& g, EsdfVoxel* v);
  void process_raise_queue(PropagateStats* stats);
  void process_lower_queue(PropagateStats* stats);
  void relax_neighbors(const GlobalVoxelIndex& g, const EsdfVoxel& v, PropagateStats* stats);

  EsdfConfig config_;
  const TsdfLayer* tsdf_;
  EsdfLayer* esdf_;
  FloatingPoint gamma_;
  std::vector<Neighbor> neighbors_;
  WavefrontQueue lower_;
  std::deque<GlobalVoxelIndex> raise_;

  BlockIndex cached_index_{0, 0, 0};
  Block<EsdfVoxel>* cached_block_ = nullptr;
};

}  // namespace vxf
