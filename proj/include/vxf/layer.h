#pragma once

#include <cassert>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vxf/core.h"
#include "vxf/voxel.h"

namespace vxf {

/// Fixed-size dense voxel array, laid out x-fastest.
template <typename VoxelT>
class Block {
 public:
  Block(const BlockIndex& index, int voxels_per_side, const VoxelT& init)
      : index_(index),
        voxels_per_side_(voxels_per_side),
        voxels_(static_cast<size_t>(voxels_per_side) * voxels_per_side * voxels_per_side, init) {}

  size_t linear_index(const LocalVoxelIndex& local) const {
    assert(local.x() >= 0 && local.x() < voxels_per_side_);
    assert(local.y() >= 0 && local.y() < voxels_per_side_);
    assert(local.z() >= 0 && local.z() < voxels_per_side_);
    return static_cast<size_t>(local.x()) +
           voxels_per_side_ * (static_cast<size_t>(local.y()) +
                               voxels_per_side_ * static_cast<size_t>(local.z()));
  }

  LocalVoxelIndex local_from_linear(size_t lin) const {
    const int vps = voxels_per_side_;
    return LocalVoxelIndex(static_cast<int>(lin % vps), static_cast<int>((lin / vps) % vps),
                           static_cast<int>(lin / (static_cast<size_t>(vps) * vps)));
  }

  VoxelT& voxel(const LocalVoxelIndex& local) { return voxels_[linear_index(local)]; }
  const VoxelT& voxel(const LocalVoxelIndex& local) const { return voxels_[linear_index(local)]; }
  VoxelT& voxel(size_t lin) { return voxels_[lin]; }
  const VoxelT& voxel(size_t lin) const { return voxels_[lin]; }

  const BlockIndex& index() const { return index_; }
  int voxels_per_side() const { return voxels_per_side_; }
  size_t num_voxels() const { return voxels_.size(); }

 private:
  BlockIndex index_;
  int voxels_per_side_;
  std::vector<VoxelT> voxels_;
};

/// Voxel-hashed map: a hash table from block index to on-demand allocated
/// blocks. Single writer, multiple readers between integration passes; no
/// internal locking.
template <typename VoxelT>
class Layer {
 public:
  using BlockType = Block<VoxelT>;
  using BlockMap = IndexMap<std::unique_ptr<BlockType>>;

  Layer(FloatingPoint voxel_size, int voxels_per_side)
      : voxel_size_(voxel_size), voxels_per_side_(voxels_per_side) {
    if (voxel_size <= 0.0f || voxels_per_side < 1) {
      throw std::invalid_argument("layer requires voxel_size > 0 and voxels_per_side >= 1");
    }
  }

  FloatingPoint voxel_size() const { return voxel_size_; }
  int voxels_per_side() const { return voxels_per_side_; }
  FloatingPoint block_size() const { return voxel_size_ * voxels_per_side_; }
  size_t block_count() const { return blocks_.size(); }

  /// Voxel defaults applied at block allocation (e.g. ESDF voxels start at
  /// +d_max, unobserved).
  void set_default_voxel(const VoxelT& v) { default_voxel_ = v; }
  const VoxelT& default_voxel() const { return default_voxel_; }

  BlockType& get_or_allocate_block(const BlockIndex& index) {
    auto it = blocks_.find(index);
    if (it == blocks_.end()) {
      it = blocks_.emplace(index, std::make_unique<BlockType>(index, voxels_per_side_,
                                                              default_voxel_)).first;
      mark_updated(index);
    }
    return *it->second;
  }

  BlockType* block_ptr(const BlockIndex& index) {
    auto it = blocks_.find(index);
    return it == blocks_.end() ? nullptr : it->second.get();
  }
  const BlockType* block_ptr(const BlockIndex& index) const {
    auto it = blocks_.find(index);
    return it == blocks_.end() ? nullptr : it->second.get();
  }

  /// Absence (nullptr), never a default voxel, when the block is unallocated.
  VoxelT* voxel_ptr(const GlobalVoxelIndex& g) {
    BlockIndex bidx;
    LocalVoxelIndex local;
    split_global_index(g, voxels_per_side_, &bidx, &local);
    BlockType* block = block_ptr(bidx);
    return block ? &block->voxel(local) : nullptr;
  }
  const VoxelT* voxel_ptr(const GlobalVoxelIndex& g) const {
    BlockIndex bidx;
    LocalVoxelIndex local;
    split_global_index(g, voxels_per_side_, &bidx, &local);
    const BlockType* block = block_ptr(bidx);
    return block ? &block->voxel(local) : nullptr;
  }

  VoxelT& get_or_allocate_voxel(const GlobalVoxelIndex& g) {
    BlockIndex bidx;
    LocalVoxelIndex local;
    split_global_index(g, voxels_per_side_, &bidx, &local);
    return get_or_allocate_block(bidx).voxel(local);
  }

  const BlockMap& blocks() const { return blocks_; }

  /// Each downstream consumer drains its own touched-block set.
  void register_consumer(const std::string& name) { updated_[name]; }

  void mark_updated(const BlockIndex& index) {
    for (auto& [name, set] : updated_) {
      set.insert(index);
    }
  }

  IndexSet drain_updated(const std::string& name) {
    auto it = updated_.find(name);
    if (it == updated_.end()) {
      throw std::invalid_argument("unknown updated-block consumer: " + name);
    }
    IndexSet out = std::move(it->second);
    it->second.clear();
    return out;
  }

  const IndexSet& updated_blocks(const std::string& name) const {
    auto it = updated_.find(name);
    if (it == updated_.end()) {
      throw std::invalid_argument("unknown updated-block consumer: " + name);
    }
    return it->second;
  }

  IndexSet all_block_indices() const {
    IndexSet out;
    for (const auto& [idx, block] : blocks_) {
      out.insert(idx);
    }
    return out;
  }

 private:
  FloatingPoint voxel_size_;
  int voxels_per_side_;
  VoxelT default_voxel_;
  BlockMap blocks_;
  std::unordered_map<std::string, IndexSet> updated_;
};

using TsdfLayer = Layer<TsdfVoxel>;
using EsdfLayer = Layer<EsdfVoxel>;

}  // namespace vxf
