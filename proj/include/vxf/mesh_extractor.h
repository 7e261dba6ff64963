#pragma once

#include "vxf/core.h"
#include "vxf/layer.h"
#include "vxf/mesh.h"

namespace vxf {

/// Per-block marching cubes over the TSDF zero isosurface. Cubes span 8 voxel
/// centers and may straddle block boundaries; cubes with any unobserved corner
/// emit nothing. Shared edges interpolate in a canonical corner order so
/// adjacent blocks produce bitwise-identical vertices.
class MeshExtractor {
 public:
  explicit MeshExtractor(const TsdfLayer* tsdf, bool with_colors = true);

  /// (Re-)extracts the given blocks, replacing their previous fragments.
  void extract_blocks(const IndexSet& blocks);

  /// Extracts every allocated block.
  void extract_all();

  /// Concatenated fragments.
  Mesh combined() const;

  const IndexMap<Mesh>& fragments() const { return fragments_; }

 private:
  Mesh extract_block(const BlockIndex& bidx) const;
  Point vertex_normal(const Point& p, const Point& face_normal) const;

  const TsdfLayer* tsdf_;
  bool with_colors_;
  IndexMap<Mesh> fragments_;
};

/// One-shot extraction over the whole layer.
Mesh extract_mesh(const TsdfLayer& tsdf, bool with_colors = true);

}  // namespace vxf
