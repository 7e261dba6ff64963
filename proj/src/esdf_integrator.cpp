#include "vxf/esdf_integrator.h"

#include <cassert>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace vxf {

void EsdfConfig::validate(FloatingPoint voxel_size) const {
  const FloatingPoint gamma = band_radius(voxel_size);
  if (!(gamma > 0.0f) || !(gamma <= truncation)) {
    throw std::invalid_argument("esdf config requires 0 < band radius <= truncation");
  }
  if (!(d_max > gamma)) {
    throw std::invalid_argument("esdf config requires d_max > band radius");
  }
}

WavefrontQueue::WavefrontQueue(QueueMode mode, FloatingPoint bucket_width, FloatingPoint d_max)
    : mode_(mode), bucket_width_(bucket_width) {
  if (mode_ != QueueMode::kFifo) {
    const size_t n = static_cast<size_t>(std::ceil(d_max / bucket_width_)) + 1;
    buckets_.resize(n);
  }
}

void WavefrontQueue::push(const GlobalVoxelIndex& index, FloatingPoint priority) {
  if (mode_ == QueueMode::kFifo) {
    fifo_.push_back(index);
  } else {
    size_t b = static_cast<size_t>(std::abs(priority) / bucket_width_);
    if (b >= buckets_.size()) b = buckets_.size() - 1;
    buckets_[b].push_back(index);
    if (b < cursor_) cursor_ = b;
  }
  ++size_;
}

bool WavefrontQueue::pop(GlobalVoxelIndex* index) {
  if (size_ == 0) return false;
  if (mode_ == QueueMode::kFifo) {
    *index = fifo_.front();
    fifo_.pop_front();
  } else {
    while (buckets_[cursor_].empty()) ++cursor_;
    *index = buckets_[cursor_].front();
    buckets_[cursor_].pop_front();
  }
  --size_;
  return true;
}

EsdfIntegrator::EsdfIntegrator(const EsdfConfig& config, const TsdfLayer* tsdf, EsdfLayer* esdf)
    : config_(config),
      tsdf_(tsdf),
      esdf_(esdf),
      gamma_(config.band_radius(tsdf->voxel_size())),
      lower_(config.queue_mode,
             config.bucket_width > 0.0f ? config.bucket_width : tsdf->voxel_size(),
             config.d_max) {
  if (tsdf_->voxel_size() != esdf_->voxel_size() ||
      tsdf_->voxels_per_side() != esdf_->voxels_per_side()) {
    throw std::invalid_argument("esdf layer geometry must match the tsdf layer");
  }
  config_.validate(tsdf_->voxel_size());

  const FloatingPoint v = tsdf_->voxel_size();
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0 && dz == 0) continue;
        Neighbor n;
        n.offset = GlobalVoxelIndex(dx, dy, dz);
        n.step = v * std::sqrt(static_cast<FloatingPoint>(dx * dx + dy * dy + dz * dz));
        neighbors_.push_back(n);
      }
    }
  }

  EsdfVoxel default_voxel;
  default_voxel.distance = config_.d_max;
  esdf_->set_default_voxel(default_voxel);
}

EsdfVoxel* EsdfIntegrator::esdf_voxel(const GlobalVoxelIndex& g) {
  BlockIndex bidx;
  LocalVoxelIndex local;
  split_global_index(g, esdf_->voxels_per_side(), &bidx, &local);
  if (cached_block_ == nullptr || !IndexEqual()(bidx, cached_index_)) {
    Block<EsdfVoxel>* block = esdf_->block_ptr(bidx);
    if (block == nullptr) return nullptr;
    cached_block_ = block;
    cached_index_ = bidx;
  }
  return &cached_block_->voxel(local);
}

void EsdfIntegrator::push_lower(const GlobalVoxelIndex& g, EsdfVoxel* v) {
  if (config_.queue_mode != QueueMode::kPriorityMultiInsert) {
    if (v->in_lower()) return;
    v->set_in_lower(true);
  }
  lower_.push(g, std::abs(v->distance));
}

void EsdfIntegrator::push_raise(const GlobalVoxelIndex& g, EsdfVoxel* v) {
  if (v->in_raise()) return;
  v->set_in_raise(true);
  raise_.push_back(g);
}

PropagateStats EsdfIntegrator::propagate(const IndexSet& updated_blocks) {
  const auto t0 = std::chrono::steady_clock::now();
  PropagateStats stats;
  const int vps = tsdf_->voxels_per_side();

  for (const BlockIndex& bidx : updated_blocks) {
    const Block<TsdfVoxel>* tsdf_block = tsdf_->block_ptr(bidx);
    if (tsdf_block == nullptr) continue;
    Block<EsdfVoxel>& esdf_block = esdf_->get_or_allocate_block(bidx);
    cached_block_ = nullptr;  // allocation may rehash the block map

    for (size_t lin = 0; lin < tsdf_block->num_voxels(); ++lin) {
      const TsdfVoxel& tv = tsdf_block->voxel(lin);
      if (!tv.observed()) continue;
      EsdfVoxel& ev = esdf_block.voxel(lin);
      const GlobalVoxelIndex g = combine_indices(bidx, tsdf_block->local_from_linear(lin), vps);

      if (is_fixed(tv.distance, gamma_)) {
        const bool newly_observed = !ev.observed();
        const FloatingPoint previous = ev.distance;
        ev.set_observed(true);
        ev.set_fixed(true);
        ev.distance = tv.distance;
        ev.clear_parent();
        if (newly_observed || previous > tv.distance) {
          push_lower(g, &ev);
        } else if (previous < tv.distance) {
          // Value rose: invalidate children, then re-lower from this voxel.
          push_raise(g, &ev);
          push_lower(g, &ev);
        }
      } else {
        if (ev.fixed()) {
          // Left the fixed band: the value and everything derived from it is
          // stale.
          ev.set_fixed(false);
          ev.set_observed(true);
          ev.distance = tv.distance < 0.0f ? -config_.d_max : config_.d_max;
          ev.clear_parent();
          push_raise(g, &ev);
        } else if (!ev.observed()) {
          ev.set_observed(true);
          ev.distance = tv.distance < 0.0f ? -config_.d_max : config_.d_max;
          ev.clear_parent();
          // New voxels get values through their neighbors.
          for (const Neighbor& n : neighbors_) {
            EsdfVoxel* nv = esdf_voxel(g + n.offset);
            if (nv != nullptr && nv->observed()) {
              push_lower(g + n.offset, nv);
            }
          }
          cached_block_ = nullptr;
        }
      }
    }
  }

  process_raise_queue(&stats);
  process_lower_queue(&stats);

  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

void EsdfIntegrator::process_raise_queue(PropagateStats* stats) {
  while (!raise_.empty()) {
    const GlobalVoxelIndex g = raise_.front();
    raise_.pop_front();
    EsdfVoxel* v = esdf_voxel(g);
    assert(v != nullptr);
    v->set_in_raise(false);
    ++stats->raise_pops;

    // Fixed-band voxels are never modified by the wavefronts, but a raise may
    // pass through one whose value rose: it still hands its children on.
    std::array<int16_t, 3> old_parent = v->parent;
    if (!v->fixed()) {
      v->distance = v->distance < 0.0f ? -config_.d_max : config_.d_max;
      v->clear_parent();
      ++stats->raised;
    }

    for (const Neighbor& n : neighbors_) {
      const GlobalVoxelIndex ng = g + n.offset;
      EsdfVoxel* nv = esdf_voxel(ng);
      if (nv == nullptr || !nv->observed()) continue;
      bool is_child;
      if (config_.metric == DistanceMetric::kQuasiEuclidean) {
        is_child = nv->parent[0] == -n.offset.x() && nv->parent[1] == -n.offset.y() &&
                   nv->parent[2] == -n.offset.z();
      } else {
        // Euclidean parents hold the full seed offset; the child's offset is
        // the parent's shifted by the connecting direction.
        is_child = nv->has_parent() &&
                   nv->parent[0] == old_parent[0] - n.offset.x() &&
                   nv->parent[1] == old_parent[1] - n.offset.y() &&
                   nv->parent[2] == old_parent[2] - n.offset.z();
      }
      if (is_child && !nv->fixed()) {
        push_raise(ng, nv);
      } else {
        push_lower(ng, nv);
      }
    }
  }
}

void EsdfIntegrator::process_lower_queue(PropagateStats* stats) {
  GlobalVoxelIndex g;
  while (lower_.pop(&g)) {
    EsdfVoxel* v = esdf_voxel(g);
    assert(v != nullptr);
    v->set_in_lower(false);
    ++stats->lower_pops;
    if (!v->observed()) continue;
    relax_neighbors(g, *v, stats);
  }
}

void EsdfIntegrator::relax_neighbors(const GlobalVoxelIndex& g, const EsdfVoxel& v,
                                     PropagateStats* stats) {
  const FloatingPoint voxel_size = esdf_->voxel_size();
  FloatingPoint seed_value = 0.0f;
  if (config_.metric == DistanceMetric::kEuclidean) {
    if (v.has_parent()) {
      // Distances are recomputed from the seed voxel itself rather than
      // accumulated hop by hop, which keeps them exactly seed + ||offset|| v.
      const EsdfVoxel* seed = esdf_voxel(
          g + GlobalVoxelIndex(v.parent[0], v.parent[1], v.parent[2]));
      if (seed != nullptr && seed->fixed()) {
        seed_value = seed->distance;
      } else {
        // Stale chain whose seed left the band before this voxel was raised;
        // recover the seed value from the stored offset instead.
        const FloatingPoint len =
            voxel_size * std::sqrt(static_cast<FloatingPoint>(
                             v.parent[0] * v.parent[0] + v.parent[1] * v.parent[1] +
                             v.parent[2] * v.parent[2]));
        seed_value = v.distance > 0.0f ? v.distance - len : v.distance + len;
      }
    } else {
      seed_value = v.distance;
    }
  }

  for (const Neighbor& n : neighbors_) {
    const GlobalVoxelIndex ng = g + n.offset;
    EsdfVoxel* nv = esdf_voxel(ng);
    if (nv == nullptr || !nv->observed() || nv->fixed()) continue;

    FloatingPoint candidate_pos, candidate_neg;
    std::array<int16_t, 3> new_parent;
    if (config_.metric == DistanceMetric::kQuasiEuclidean) {
      candidate_pos = v.distance + n.step;
      candidate_neg = v.distance - n.step;
      new_parent = {static_cast<int16_t>(-n.offset.x()), static_cast<int16_t>(-n.offset.y()),
                    static_cast<int16_t>(-n.offset.z())};
    } else {
      new_parent = {static_cast<int16_t>(v.parent[0] - n.offset.x()),
                    static_cast<int16_t>(v.parent[1] - n.offset.y()),
                    static_cast<int16_t>(v.parent[2] - n.offset.z())};
      const FloatingPoint seed_distance =
          voxel_size * std::sqrt(static_cast<FloatingPoint>(
                           new_parent[0] * new_parent[0] + new_parent[1] * new_parent[1] +
                           new_parent[2] * new_parent[2]));
      candidate_pos = seed_value + seed_distance;
      candidate_neg = seed_value - seed_distance;
    }

    if (nv->distance > 0.0f && candidate_pos < nv->distance) {
      nv->distance = candidate_pos;
      nv->parent = new_parent;
      push_lower(ng, nv);
      ++stats->lowered;
    } else if (nv->distance < 0.0f && candidate_neg > nv->distance) {
      nv->distance = candidate_neg;
      nv->parent = new_parent;
      push_lower(ng, nv);
      ++stats->lowered;
    }
  }
}

EsdfLayer EsdfIntegrator::build_batch(const TsdfLayer& tsdf, const EsdfConfig& config) {
  EsdfLayer esdf(tsdf.voxel_size(), tsdf.voxels_per_side());
  EsdfIntegrator integrator(config, &tsdf, &esdf);
  integrator.propagate(tsdf.all_block_indices());
  return esdf;
}

EsdfLayer EsdfIntegrator::build_from_occupancy(const TsdfLayer& tsdf, const EsdfConfig& config) {
  EsdfLayer esdf(tsdf.voxel_size(), tsdf.voxels_per_side());
  EsdfIntegrator integrator(config, &tsdf, &esdf);
  const int vps = tsdf.voxels_per_side();

  // Seed every observed negative voxel at distance 0 and keep it immutable;
  // everything else observed starts at d_max and lowers outward.
  for (const auto& [bidx, tsdf_block] : tsdf.blocks()) {
    Block<EsdfVoxel>& esdf_block = esdf.get_or_allocate_block(bidx);
    for (size_t lin = 0; lin < tsdf_block->num_voxels(); ++lin) {
      const TsdfVoxel& tv = tsdf_block->voxel(lin);
      if (!tv.observed()) continue;
      EsdfVoxel& ev = esdf_block.voxel(lin);
      ev.set_observed(true);
      if (tv.distance < 0.0f) {
        ev.distance = 0.0f;
        ev.set_fixed(true);
        integrator.push_lower(combine_indices(bidx, tsdf_block->local_from_linear(lin), vps),
                              &ev);
      } else {
        ev.distance = config.d_max;
      }
    }
  }
  PropagateStats stats;
  integrator.process_lower_queue(&stats);
  return esdf;
}

}  // namespace vxf
