#include <doctest.h>

#include <cstring>
#include <map>

#include "oracles.h"
#include "vxf/interpolation.h"
#include "vxf/mesh_extractor.h"
#include "vxf/scan.h"

using namespace vxf;

namespace {

struct VertexKey {
  uint32_t bits[3];
  bool operator<(const VertexKey& o) const {
    return std::memcmp(bits, o.bits, sizeof(bits)) < 0;
  }
  static VertexKey of(const Point& p) {
    VertexKey k;
    std::memcpy(k.bits, p.data(), sizeof(k.bits));
    return k;
  }
};

/// Counts how many triangles share each (bitwise-welded) undirected edge.
std::map<std::pair<int, int>, int> edge_use_counts(const Mesh& mesh) {
  std::map<VertexKey, int> ids;
  std::vector<int> vertex_id(mesh.vertices.size());
  for (size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto [it, inserted] =
        ids.emplace(VertexKey::of(mesh.vertices[i]), static_cast<int>(ids.size()));
    vertex_id[i] = it->second;
  }
  std::map<std::pair<int, int>, int> counts;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = vertex_id[t[e]], b = vertex_id[t[(e + 1) % 3]];
      if (a > b) std::swap(a, b);
      ++counts[{a, b}];
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("uniform positive field produces an empty mesh") {
  TsdfLayer tsdf(0.1f, 8);
  for (int z = 0; z < 16; ++z) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) {
        TsdfVoxel& v = tsdf.get_or_allocate_voxel(GlobalVoxelIndex(x, y, z));
        v.weight = 1.0f;
        v.distance = 0.7f;
      }
    }
  }
  CHECK(extract_mesh(tsdf).empty());
}

TEST_CASE("axis-aligned plane field meshes exactly at the plane") {
  const float v = 0.1f;
  const float plane_x = 0.83f;
  SimWorld world;
  world.add(Plane{Point(1, 0, 0), plane_x});
  const TsdfLayer tsdf = oracles::analytic_tsdf(world, v, 8, 10.0f, GlobalVoxelIndex(0, 0, 0),
                                                GlobalVoxelIndex(17, 17, 17));
  const Mesh mesh = extract_mesh(tsdf);
  REQUIRE(!mesh.empty());
  for (const Point& p : mesh.vertices) {
    CHECK(std::abs(p.x() - plane_x) < 1e-6f);
  }
  // vertex-distance property: the interpolated field vanishes at vertices
  for (const Point& p : mesh.vertices) {
    const auto d = interpolate_distance(tsdf, p);
    REQUIRE(d.has_value());
    CHECK(std::abs(*d) < 1e-4f * 0.4f);
  }
}

TEST_CASE("sphere mesh: geometry, normals, watertightness across blocks") {
  const float v = 0.05f;
  const Point center(0.52f, 0.48f, 0.5f);
  const float radius = 0.31f;
  SimWorld world;
  world.add(Sphere{center, radius});
  // spans multiple 8^3 blocks so shared faces and edges are exercised
  const TsdfLayer tsdf = oracles::analytic_tsdf(world, v, 8, 10.0f, GlobalVoxelIndex(0, 0, 0),
                                                GlobalVoxelIndex(20, 20, 20));
  const Mesh mesh = extract_mesh(tsdf);
  REQUIRE(mesh.triangles.size() > 100);

  SUBCASE("vertices stay within a voxel of the sphere") {
    for (const Point& p : mesh.vertices) {
      CHECK(std::abs((p - center).norm() - radius) <= v);
    }
  }

  SUBCASE("vertex normals are unit length and point outward") {
    REQUIRE(mesh.normals.size() == mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
      CHECK(std::abs(mesh.normals[i].norm() - 1.0f) < 1e-5f);
      CHECK(mesh.normals[i].dot(mesh.vertices[i] - center) > 0.0f);
    }
  }

  SUBCASE("triangle winding agrees with the outward normals") {
    for (const auto& t : mesh.triangles) {
      const Point face = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                             .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
      const Point outward = mesh.vertices[t[0]] - center;
      CHECK(face.dot(outward) > 0.0f);
    }
  }

  SUBCASE("closed surface: every welded edge borders exactly two triangles") {
    // catches T-junctions at block boundaries and table defects alike
    for (const auto& [edge, count] : edge_use_counts(mesh)) {
      CHECK(count == 2);
    }
  }

  SUBCASE("re-extraction replaces fragments instead of stacking them") {
    MeshExtractor extractor(&tsdf);
    extractor.extract_all();
    const size_t once = extractor.combined().triangles.size();
    extractor.extract_blocks(tsdf.all_block_indices());
    CHECK(extractor.combined().triangles.size() == once);
  }
}

TEST_CASE("cubes with unobserved corners emit nothing") {
  const float v = 0.1f;
  SimWorld world;
  world.add(Plane{Point(0, 0, 1), 0.45f});
  TsdfLayer tsdf = oracles::analytic_tsdf(world, v, 8, 10.0f, GlobalVoxelIndex(0, 0, 0),
                                          GlobalVoxelIndex(9, 9, 9));
  // knock out one voxel adjacent to the isosurface
  tsdf.voxel_ptr(GlobalVoxelIndex(4, 4, 4))->weight = 0.0f;
  const Mesh mesh = extract_mesh(tsdf);
  // no vertex may sit inside the 8 cubes that use the unobserved corner
  const Point hole_center = voxel_center(GlobalVoxelIndex(4, 4, 4), v);
  for (const Point& p : mesh.vertices) {
    const bool near_hole = (p - hole_center).cwiseAbs().maxCoeff() < v * 0.999f;
    CHECK(!near_hole);
  }
}

TEST_CASE("mesh PLY output round-trips as a point cloud") {
  const float v = 0.1f;
  SimWorld world;
  world.add(Sphere{Point(0.5f, 0.5f, 0.5f), 0.3f});
  const TsdfLayer tsdf = oracles::analytic_tsdf(world, v, 8, 10.0f, GlobalVoxelIndex(0, 0, 0),
                                                GlobalVoxelIndex(9, 9, 9));
  const Mesh mesh = extract_mesh(tsdf);
  const std::string path = "/tmp/vxf_test_mesh.ply";
  save_ply_mesh(mesh, path);
  const Scan loaded = load_ply_points(path);
  REQUIRE(loaded.points.size() == mesh.vertices.size());
  for (size_t i = 0; i < loaded.points.size(); ++i) {
    CHECK((loaded.points[i] - mesh.vertices[i]).norm() == 0.0f);
  }
}
