#include "vxf/mesh_extractor.h"

#include <cmath>

#include "vxf/interpolation.h"
#include "vxf/marching_cubes_tables.h"

namespace vxf {

namespace {

struct CubeCorner {
  GlobalVoxelIndex index;
  FloatingPoint distance;
  Color color;
};

/// Zero crossing along the edge between corners a and b, interpolated from the
/// corner with the lower global index so shared edges match bitwise across
/// blocks.
void edge_vertex(const CubeCorner& a, const CubeCorner& b, FloatingPoint voxel_size,
                 Point* position, Color* color) {
  const CubeCorner* lo = &a;
  const CubeCorner* hi = &b;
  const auto less = [](const GlobalVoxelIndex& u, const GlobalVoxelIndex& w) {
    return std::tie(u.x(), u.y(), u.z()) < std::tie(w.x(), w.y(), w.z());
  };
  if (less(hi->index, lo->index)) std::swap(lo, hi);
  const FloatingPoint t = lo->distance / (lo->distance - hi->distance);
  const Point p_lo = voxel_center(lo->index, voxel_size);
  const Point p_hi = voxel_center(hi->index, voxel_size);
  *position = p_lo + t * (p_hi - p_lo);
  auto blend = [&](uint8_t clo, uint8_t chi) {
    return static_cast<uint8_t>(
        std::clamp(std::lround(clo + t * (static_cast<float>(chi) - clo)), 0l, 255l));
  };
  *color = {blend(lo->color.r, hi->color.r), blend(lo->color.g, hi->color.g),
            blend(lo->color.b, hi->color.b)};
}

}  // namespace

MeshExtractor::MeshExtractor(const TsdfLayer* tsdf, bool with_colors)
    : tsdf_(tsdf), with_colors_(with_colors) {}

void MeshExtractor::extract_blocks(const IndexSet& blocks) {
  for (const BlockIndex& bidx : blocks) {
    if (tsdf_->block_ptr(bidx) == nullptr) continue;
    fragments_[bidx] = extract_block(bidx);
  }
}

void MeshExtractor::extract_all() {
  for (const auto& [bidx, block] : tsdf_->blocks()) {
    fragments_[bidx] = extract_block(bidx);
  }
}

Mesh MeshExtractor::combined() const {
  Mesh out;
  for (const auto& [bidx, fragment] : fragments_) {
    out.append(fragment);
  }
  if (!with_colors_) out.colors.clear();
  return out;
}

Point MeshExtractor::vertex_normal(const Point& p, const Point& face_normal) const {
  const FloatingPoint h = tsdf_->voxel_size();
  Point grad;
  for (int i = 0; i < 3; ++i) {
    Point lo = p, hi = p;
    lo[i] -= h;
    hi[i] += h;
    const auto dlo = interpolate_distance(*tsdf_, lo);
    const auto dhi = interpolate_distance(*tsdf_, hi);
    if (!dlo || !dhi) return face_normal;
    grad[i] = (*dhi - *dlo) / (2.0f * h);
  }
  const FloatingPoint norm = grad.norm();
  if (norm < 1e-10f) return face_normal;
  return grad / norm;
}

Mesh MeshExtractor::extract_block(const BlockIndex& bidx) const {
  using namespace mc_tables;
  Mesh mesh;
  const int vps = tsdf_->voxels_per_side();
  const FloatingPoint voxel_size = tsdf_->voxel_size();
  const GlobalVoxelIndex base_global = bidx * vps;

  CubeCorner corners[8];
  for (int z = 0; z < vps; ++z) {
    for (int y = 0; y < vps; ++y) {
      for (int x = 0; x < vps; ++x) {
        const GlobalVoxelIndex base = base_global + GlobalVoxelIndex(x, y, z);
        int config = 0;
        bool complete = true;
        for (int c = 0; c < 8; ++c) {
          const GlobalVoxelIndex g =
              base + GlobalVoxelIndex(kCornerOffsets[c][0], kCornerOffsets[c][1],
                                      kCornerOffsets[c][2]);
          const TsdfVoxel* voxel = tsdf_->voxel_ptr(g);
          if (voxel == nullptr || !voxel->observed()) {
            complete = false;
            break;
          }
          corners[c] = {g, voxel->distance, voxel->color};
          if (voxel->distance < 0.0f) config |= 1 << c;
        }
        if (!complete || kEdgeTable[config] == 0) continue;

        Point edge_points[12];
        Color edge_colors[12];
        for (int e = 0; e < 12; ++e) {
          if (kEdgeTable[config] & (1 << e)) {
            edge_vertex(corners[kEdgeCorners[e][0]], corners[kEdgeCorners[e][1]], voxel_size,
                        &edge_points[e], &edge_colors[e]);
          }
        }

        for (int t = 0; kTriTable[config][t] != -1; t += 3) {
          // Table winding faces the negative side; swap for outward normals.
          const int e0 = kTriTable[config][t];
          const int e1 = kTriTable[config][t + 2];
          const int e2 = kTriTable[config][t + 1];
          const Point& p0 = edge_points[e0];
          const Point& p1 = edge_points[e1];
          const Point& p2 = edge_points[e2];

          Point face_normal = (p1 - p0).cross(p2 - p0);
          const FloatingPoint fn = face_normal.norm();
          face_normal = fn > 1e-12f ? Point(face_normal / fn) : Point(0, 0, 1);

          const uint32_t idx = static_cast<uint32_t>(mesh.vertices.size());
          for (const Point* p : {&p0, &p1, &p2}) {
            mesh.vertices.push_back(*p);
            mesh.normals.push_back(vertex_normal(*p, face_normal));
          }
          if (with_colors_) {
            mesh.colors.push_back(edge_colors[e0]);
            mesh.colors.push_back(edge_colors[e1]);
            mesh.colors.push_back(edge_colors[e2]);
          }
          mesh.triangles.push_back({idx, idx + 1, idx + 2});
        }
      }
    }
  }
  return mesh;
}

Mesh extract_mesh(const TsdfLayer& tsdf, bool with_colors) {
  MeshExtractor extractor(&tsdf, with_colors);
  extractor.extract_all();
  return extractor.combined();
}

}  // namespace vxf
