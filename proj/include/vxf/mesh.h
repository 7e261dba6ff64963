#pragma once

#include <cstdint>
#include <vector>

#include "vxf/core.h"

namespace vxf {

/// Triangle soup with per-vertex normals and optional colors. Triangles index
/// into the vertex list; no deduplication across cubes in v1 (a post-pass can
/// weld coincident vertices if needed).
struct Mesh {
  std::vector<Point> vertices;
  std::vector<Point> normals;
  std::vector<Color> colors;  // empty or parallel to vertices
  std::vector<std::array<uint32_t, 3>> triangles;

  bool has_colors() const { return !colors.empty(); }
  bool empty() const { return triangles.empty(); }

  void append(const Mesh& other) {
    const uint32_t base = static_cast<uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
    for (const auto& t : other.triangles) {
      triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
  }
};

}  // namespace vxf
