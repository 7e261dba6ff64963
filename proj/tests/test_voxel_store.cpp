#include <doctest.h>

#include <cstring>
#include <sstream>

#include "vxf/core.h"
#include "vxf/interpolation.h"
#include "vxf/layer.h"
#include "vxf/serialization.h"

using namespace vxf;

TEST_CASE("global index from point") {
  CHECK(IndexEqual()(global_index_from_point(Point(0, 0, 0), 0.1f), GlobalVoxelIndex(0, 0, 0)));
  // floor division: floor(-0.5) = -1
  CHECK(IndexEqual()(global_index_from_point(Point(0.25f, -0.05f, 0.10f), 0.1f),
                     GlobalVoxelIndex(2, -1, 1)));
  // strictly below the boundary stays in voxel 0
  CHECK(IndexEqual()(global_index_from_point(Point(0.0999f, 0.0999f, 0.0999f), 0.1f),
                     GlobalVoxelIndex(0, 0, 0)));
}

TEST_CASE("voxel center within half a voxel of the point") {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const float v = static_cast<float>(rng.uniform(0.01, 1.0));
    const Point p(static_cast<float>(rng.uniform(-20, 20)),
                  static_cast<float>(rng.uniform(-20, 20)),
                  static_cast<float>(rng.uniform(-20, 20)));
    const Point center = voxel_center(global_index_from_point(p, v), v);
    CHECK((center - p).cwiseAbs().maxCoeff() <= v * 0.5f + v * 1e-4f);
  }
}

TEST_CASE("split global index") {
  BlockIndex block;
  LocalVoxelIndex local;

  split_global_index(GlobalVoxelIndex(17, -1, 0), 16, &block, &local);
  CHECK(IndexEqual()(block, BlockIndex(1, -1, 0)));
  CHECK(IndexEqual()(local, LocalVoxelIndex(1, 15, 0)));

  split_global_index(GlobalVoxelIndex(0, 0, 0), 16, &block, &local);
  CHECK(IndexEqual()(block, BlockIndex(0, 0, 0)));
  CHECK(IndexEqual()(local, LocalVoxelIndex(0, 0, 0)));

  split_global_index(GlobalVoxelIndex(-16, -17, 15), 16, &block, &local);
  CHECK(IndexEqual()(block, BlockIndex(-1, -2, 0)));
  CHECK(IndexEqual()(local, LocalVoxelIndex(0, 15, 15)));
}

TEST_CASE("split and recombine is the identity") {
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const int vps = rng.uniform_int(1, 32);
    const GlobalVoxelIndex g(rng.uniform_int(-1000, 1000), rng.uniform_int(-1000, 1000),
                             rng.uniform_int(-1000, 1000));
    BlockIndex block;
    LocalVoxelIndex local;
    split_global_index(g, vps, &block, &local);
    for (int k = 0; k < 3; ++k) {
      CHECK(local[k] >= 0);
      CHECK(local[k] < vps);
    }
    CHECK(IndexEqual()(combine_indices(block, local, vps), g));
  }
}

TEST_CASE("block allocation and lookup") {
  TsdfLayer layer(0.1f, 16);
  CHECK(layer.voxel_ptr(GlobalVoxelIndex(1, 2, 3)) == nullptr);

  layer.register_consumer("test");
  auto& block = layer.get_or_allocate_block(BlockIndex(0, 0, 0));
  CHECK(block.num_voxels() == 16 * 16 * 16);
  for (size_t i = 0; i < block.num_voxels(); ++i) {
    CHECK(block.voxel(i).weight == 0.0f);
    CHECK(!block.voxel(i).observed());
  }
  // allocation lands in the consumer set
  CHECK(layer.updated_blocks("test").count(BlockIndex(0, 0, 0)) == 1);

  // idempotent: same index gives the same block
  auto& again = layer.get_or_allocate_block(BlockIndex(0, 0, 0));
  CHECK(&again == &block);
  CHECK(layer.block_count() == 1);
}

TEST_CASE("esdf allocation defaults come from the default voxel") {
  EsdfLayer layer(0.1f, 8);
  EsdfVoxel init;
  init.distance = 4.0f;
  layer.set_default_voxel(init);
  const EsdfVoxel& voxel = layer.get_or_allocate_voxel(GlobalVoxelIndex(-3, 9, 2));
  CHECK(voxel.distance == 4.0f);
  CHECK(!voxel.observed());
}

TEST_CASE("updated blocks drain independently per consumer") {
  TsdfLayer layer(0.1f, 8);
  layer.register_consumer("esdf");
  layer.register_consumer("mesh");
  layer.get_or_allocate_block(BlockIndex(0, 0, 0));
  layer.get_or_allocate_block(BlockIndex(1, 0, 0));

  const IndexSet esdf_set = layer.drain_updated("esdf");
  CHECK(esdf_set.size() == 2);
  CHECK(layer.drain_updated("esdf").empty());
  CHECK(layer.drain_updated("mesh").size() == 2);
  CHECK_THROWS(layer.drain_updated("nobody"));
}

namespace {

void fill_linear_field(TsdfLayer* layer, const Point& gradient, float offset,
                       const GlobalVoxelIndex& lo, const GlobalVoxelIndex& hi) {
  for (int z = lo.z(); z <= hi.z(); ++z) {
    for (int y = lo.y(); y <= hi.y(); ++y) {
      for (int x = lo.x(); x <= hi.x(); ++x) {
        const GlobalVoxelIndex g(x, y, z);
        TsdfVoxel& voxel = layer->get_or_allocate_voxel(g);
        voxel.distance = gradient.dot(voxel_center(g, layer->voxel_size())) + offset;
        voxel.weight = 1.0f;
      }
    }
  }
}

}  // namespace

TEST_CASE("trilinear interpolation") {
  TsdfLayer layer(0.1f, 8);

  SUBCASE("constant field returns the constant") {
    fill_linear_field(&layer, Point::Zero(), 2.5f, GlobalVoxelIndex(-4, -4, -4),
                      GlobalVoxelIndex(4, 4, 4));
    CHECK(*interpolate_distance(layer, Point(0.03f, -0.21f, 0.17f)) == doctest::Approx(2.5f));
  }

  SUBCASE("query at an observed voxel center is exact") {
    fill_linear_field(&layer, Point(1, 0, 0), 0.0f, GlobalVoxelIndex(-4, -4, -4),
                      GlobalVoxelIndex(4, 4, 4));
    const GlobalVoxelIndex g(1, 2, 0);
    const float expected = layer.voxel_ptr(g)->distance;
    CHECK(*interpolate_distance(layer, voxel_center(g, 0.1f)) == doctest::Approx(expected));
  }

  SUBCASE("midway between two centers is the mean on a linear field") {
    fill_linear_field(&layer, Point(1, 0, 0), 0.0f, GlobalVoxelIndex(-4, -4, -4),
                      GlobalVoxelIndex(4, 4, 4));
    const Point a = voxel_center(GlobalVoxelIndex(0, 0, 0), 0.1f);
    const Point b = voxel_center(GlobalVoxelIndex(1, 0, 0), 0.1f);
    const float da = layer.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance;
    const float db = layer.voxel_ptr(GlobalVoxelIndex(1, 0, 0))->distance;
    CHECK(*interpolate_distance(layer, 0.5f * (a + b)) ==
          doctest::Approx(0.5f * (da + db)).epsilon(1e-6));
  }

  SUBCASE("affine fields are reproduced exactly at random queries") {
    const Point gradient(0.7f, -1.3f, 2.1f);
    fill_linear_field(&layer, gradient, 0.4f, GlobalVoxelIndex(-6, -6, -6),
                      GlobalVoxelIndex(6, 6, 6));
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
      const Point p(static_cast<float>(rng.uniform(-0.5, 0.5)),
                    static_cast<float>(rng.uniform(-0.5, 0.5)),
                    static_cast<float>(rng.uniform(-0.5, 0.5)));
      const auto d = interpolate_distance(layer, p);
      REQUIRE(d.has_value());
      CHECK(*d == doctest::Approx(gradient.dot(p) + 0.4f).epsilon(1e-4));
    }
  }

  SUBCASE("absent when any corner is unobserved or unallocated") {
    fill_linear_field(&layer, Point(1, 0, 0), 0.0f, GlobalVoxelIndex(0, 0, 0),
                      GlobalVoxelIndex(3, 3, 3));
    // outside the filled box entirely
    CHECK(!interpolate_distance(layer, Point(5.0f, 5.0f, 5.0f)).has_value());
    // inside the box but next to an unobserved voxel
    layer.voxel_ptr(GlobalVoxelIndex(1, 1, 1))->weight = 0.0f;
    CHECK(!interpolate_distance(layer, voxel_center(GlobalVoxelIndex(1, 1, 1), 0.1f) +
                                           Point(0.05f, 0.05f, 0.05f))
               .has_value());
  }
}

namespace {

TsdfLayer random_tsdf_layer(uint64_t seed, int blocks) {
  Rng rng(seed);
  TsdfLayer layer(0.05f, 16);
  for (int b = 0; b < blocks; ++b) {
    auto& block = layer.get_or_allocate_block(
        BlockIndex(rng.uniform_int(-5, 5), rng.uniform_int(-5, 5), rng.uniform_int(-5, 5)));
    for (size_t i = 0; i < block.num_voxels(); ++i) {
      TsdfVoxel& voxel = block.voxel(i);
      voxel.distance = static_cast<float>(rng.uniform(-0.2, 0.2));
      voxel.weight = static_cast<float>(rng.uniform(0.0, 100.0));
      voxel.color = {static_cast<uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<uint8_t>(rng.uniform_int(0, 255))};
    }
  }
  return layer;
}

EsdfLayer random_esdf_layer(uint64_t seed, int blocks) {
  Rng rng(seed);
  EsdfLayer layer(0.1f, 8);
  for (int b = 0; b < blocks; ++b) {
    auto& block = layer.get_or_allocate_block(
        BlockIndex(rng.uniform_int(-5, 5), rng.uniform_int(-5, 5), rng.uniform_int(-5, 5)));
    for (size_t i = 0; i < block.num_voxels(); ++i) {
      EsdfVoxel& voxel = block.voxel(i);
      voxel.distance = static_cast<float>(rng.uniform(-4.0, 4.0));
      voxel.flags = static_cast<uint8_t>(rng.uniform_int(0, 15));
      voxel.parent = {static_cast<int16_t>(rng.uniform_int(-1, 1)),
                      static_cast<int16_t>(rng.uniform_int(-1, 1)),
                      static_cast<int16_t>(rng.uniform_int(-1, 1))};
    }
  }
  return layer;
}

bool bit_equal(float a, float b) {
  uint32_t ba, bb;
  std::memcpy(&ba, &a, 4);
  std::memcpy(&bb, &b, 4);
  return ba == bb;
}

}  // namespace

TEST_CASE("serialization round trip") {
  SUBCASE("empty layer") {
    TsdfLayer layer(0.25f, 8);
    std::stringstream stream;
    save_layer(layer, stream);
    const TsdfLayer copy = load_tsdf_layer(stream);
    CHECK(copy.block_count() == 0);
    CHECK(copy.voxel_size() == 0.25f);
    CHECK(copy.voxels_per_side() == 8);
  }

  SUBCASE("tsdf payloads are bit-exact") {
    const TsdfLayer layer = random_tsdf_layer(21, 3);
    std::stringstream stream;
    save_layer(layer, stream);
    const TsdfLayer copy = load_tsdf_layer(stream);
    REQUIRE(copy.block_count() == layer.block_count());
    for (const auto& [bidx, block] : layer.blocks()) {
      const auto* other = copy.block_ptr(bidx);
      REQUIRE(other != nullptr);
      for (size_t i = 0; i < block->num_voxels(); ++i) {
        CHECK(bit_equal(block->voxel(i).distance, other->voxel(i).distance));
        CHECK(bit_equal(block->voxel(i).weight, other->voxel(i).weight));
        CHECK(block->voxel(i).color == other->voxel(i).color);
      }
    }
  }

  SUBCASE("esdf payloads are bit-exact") {
    const EsdfLayer layer = random_esdf_layer(22, 3);
    std::stringstream stream;
    save_layer(layer, stream);
    const EsdfLayer copy = load_esdf_layer(stream);
    REQUIRE(copy.block_count() == layer.block_count());
    for (const auto& [bidx, block] : layer.blocks()) {
      const auto* other = copy.block_ptr(bidx);
      REQUIRE(other != nullptr);
      for (size_t i = 0; i < block->num_voxels(); ++i) {
        CHECK(bit_equal(block->voxel(i).distance, other->voxel(i).distance));
        CHECK(block->voxel(i).flags == other->voxel(i).flags);
        CHECK(block->voxel(i).parent == other->voxel(i).parent);
      }
    }
  }

  SUBCASE("corrupt magic raises a parse error") {
    TsdfLayer layer(0.1f, 8);
    std::stringstream stream;
    save_layer(layer, stream);
    std::string bytes = stream.str();
    bytes[0] = 'Z';
    std::stringstream corrupted(bytes);
    CHECK_THROWS_AS(load_tsdf_layer(corrupted), ParseError);
  }

  SUBCASE("truncated payload raises a parse error") {
    const TsdfLayer layer = random_tsdf_layer(5, 2);
    std::stringstream stream;
    save_layer(layer, stream);
    std::string bytes = stream.str();
    bytes.resize(bytes.size() / 2);
    std::stringstream truncated(bytes);
    CHECK_THROWS_AS(load_tsdf_layer(truncated), ParseError);
  }

  SUBCASE("kind mismatch raises a parse error") {
    TsdfLayer layer(0.1f, 8);
    std::stringstream stream;
    save_layer(layer, stream);
    CHECK_THROWS_AS(load_esdf_layer(stream), ParseError);
  }
}
