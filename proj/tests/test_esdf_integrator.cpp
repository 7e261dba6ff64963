#include <doctest.h>

#include <cmath>

#include "oracles.h"
#include "vxf/esdf_integrator.h"

using namespace vxf;

namespace {

constexpr float kVoxel = 0.1f;
constexpr int kVps = 8;

/// Fully observed TSDF over a cube with a single zero-distance voxel at the
/// origin and free space everywhere else.
TsdfLayer point_obstacle_tsdf(int half_span, float free_distance) {
  TsdfLayer layer(kVoxel, kVps);
  for (int z = -half_span; z <= half_span; ++z) {
    for (int y = -half_span; y <= half_span; ++y) {
      for (int x = -half_span; x <= half_span; ++x) {
        TsdfVoxel& v = layer.get_or_allocate_voxel(GlobalVoxelIndex(x, y, z));
        v.weight = 1.0f;
        v.distance = (x == 0 && y == 0 && z == 0) ? 0.0f : free_distance;
      }
    }
  }
  return layer;
}

EsdfConfig test_config(QueueMode queue = QueueMode::kPrioritySingleInsert,
                       DistanceMetric metric = DistanceMetric::kQuasiEuclidean,
                       FixedBandMode band = FixedBandMode::kOneVoxel) {
  EsdfConfig config;
  config.d_max = 2.0f;
  config.truncation = 4.0f * kVoxel;
  config.queue_mode = queue;
  config.metric = metric;
  config.band_mode = band;
  return config;
}

/// Quasi-Euclidean grid distance (steps v, sqrt2 v, sqrt3 v) from the origin.
float grid_distance_to_origin(const GlobalVoxelIndex& g, float v) {
  int a = std::abs(g.x()), b = std::abs(g.y()), c = std::abs(g.z());
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  // a >= b >= c: c triple-diagonal steps, b - c double-diagonal, a - b straight
  return v * (std::sqrt(3.0f) * c + std::sqrt(2.0f) * (b - c) + (a - b));
}

void compare_to_oracle(const EsdfLayer& esdf, const TsdfLayer& tsdf, const EsdfConfig& config,
                       float tolerance = 1e-6f) {
  const float gamma = config.band_radius(tsdf.voxel_size());
  const auto positive = oracles::dijkstra_esdf(tsdf, gamma, config.d_max, false);
  const auto negative = oracles::dijkstra_esdf(tsdf, gamma, config.d_max, true);
  size_t checked = 0;
  for (const auto& [bidx, block] : tsdf.blocks()) {
    for (size_t lin = 0; lin < block->num_voxels(); ++lin) {
      const TsdfVoxel& tv = block->voxel(lin);
      if (!tv.observed()) continue;
      const GlobalVoxelIndex g =
          combine_indices(bidx, block->local_from_linear(lin), tsdf.voxels_per_side());
      const EsdfVoxel* ev = esdf.voxel_ptr(g);
      REQUIRE(ev != nullptr);
      REQUIRE(ev->observed());
      float expected;
      if (is_fixed(tv.distance, gamma)) {
        expected = tv.distance;  // fixed band copies the TSDF
        CHECK(ev->fixed());
      } else if (tv.distance > 0.0f) {
        expected = positive.at(g);
      } else {
        expected = negative.at(g);
      }
      CHECK(std::abs(ev->distance - expected) <= tolerance);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

bool layers_identical(const EsdfLayer& a, const EsdfLayer& b) {
  if (a.block_count() != b.block_count()) return false;
  for (const auto& [bidx, block] : a.blocks()) {
    const auto* other = b.block_ptr(bidx);
    if (other == nullptr) return false;
    for (size_t i = 0; i < block->num_voxels(); ++i) {
      if (block->voxel(i).observed() != other->voxel(i).observed()) return false;
      if (block->voxel(i).observed() &&
          block->voxel(i).distance != other->voxel(i).distance) {
        return false;
      }
    }
  }
  return true;
}

/// No 26-neighbor pair may still admit a lowering step.
void check_convergence(const EsdfLayer& esdf, const EsdfConfig& config) {
  const float v = esdf.voxel_size();
  for (const auto& [bidx, block] : esdf.blocks()) {
    for (size_t lin = 0; lin < block->num_voxels(); ++lin) {
      const EsdfVoxel& voxel = block->voxel(lin);
      if (!voxel.observed()) continue;
      const GlobalVoxelIndex g =
          combine_indices(bidx, block->local_from_linear(lin), esdf.voxels_per_side());
      CHECK(std::abs(voxel.distance) <= config.d_max + 1e-6f);
      if (config.metric != DistanceMetric::kQuasiEuclidean) continue;
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const EsdfVoxel* n = esdf.voxel_ptr(g + GlobalVoxelIndex(dx, dy, dz));
            if (n == nullptr || !n->observed() || n->fixed()) continue;
            const float step = v * std::sqrt(static_cast<float>(dx * dx + dy * dy + dz * dz));
            if (n->distance > 0.0f) {
              CHECK(voxel.distance + step >= n->distance - 1e-6f);
            } else if (n->distance < 0.0f) {
              CHECK(voxel.distance - step <= n->distance + 1e-6f);
            }
          }
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("is_fixed band membership") {
  const float gamma = kVoxel;
  CHECK(is_fixed(0.0f, gamma));
  CHECK(!is_fixed(gamma, gamma));   // strict inequality
  CHECK(!is_fixed(-gamma, gamma));  // strict on the negative side too
  CHECK(is_fixed(-gamma / 2.0f, gamma));
}

TEST_CASE("single fixed voxel propagates grid distances") {
  const TsdfLayer tsdf = point_obstacle_tsdf(5, 1.0f);
  const EsdfConfig config = test_config();
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);

  for (int z = -5; z <= 5; ++z) {
    for (int y = -5; y <= 5; ++y) {
      for (int x = -5; x <= 5; ++x) {
        const GlobalVoxelIndex g(x, y, z);
        const EsdfVoxel* v = esdf.voxel_ptr(g);
        REQUIRE(v != nullptr);
        CHECK(v->observed());
        const float expected = std::min(config.d_max, grid_distance_to_origin(g, kVoxel));
        CHECK(v->distance == doctest::Approx(expected).epsilon(1e-5));
      }
    }
  }
  compare_to_oracle(esdf, tsdf, config);
  check_convergence(esdf, config);
}

TEST_CASE("no updates cause no changes") {
  const TsdfLayer tsdf = point_obstacle_tsdf(3, 1.0f);
  EsdfLayer esdf(kVoxel, kVps);
  EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
  integrator.propagate(tsdf.all_block_indices());

  const PropagateStats stats = integrator.propagate(IndexSet{});
  CHECK(stats.raise_pops == 0);
  CHECK(stats.lower_pops == 0);
  CHECK(stats.raised == 0);
  CHECK(stats.lowered == 0);
}

TEST_CASE("re-propagating unchanged blocks is a no-op") {
  const TsdfLayer tsdf = point_obstacle_tsdf(3, 1.0f);
  EsdfLayer esdf(kVoxel, kVps);
  EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
  integrator.propagate(tsdf.all_block_indices());

  const PropagateStats stats = integrator.propagate(tsdf.all_block_indices());
  CHECK(stats.raised == 0);
  CHECK(stats.lowered == 0);
}

TEST_CASE("two obstacles: every voxel takes the smaller propagated distance") {
  TsdfLayer tsdf = point_obstacle_tsdf(6, 1.0f);
  tsdf.voxel_ptr(GlobalVoxelIndex(4, 4, 0))->distance = 0.0f;
  const EsdfConfig config = test_config();
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);

  for (int x = -6; x <= 6; ++x) {
    const GlobalVoxelIndex g(x, 2, 1);
    const float from_origin = grid_distance_to_origin(g, kVoxel);
    const float from_second = grid_distance_to_origin(g - GlobalVoxelIndex(4, 4, 0), kVoxel);
    const float expected = std::min({from_origin, from_second, config.d_max});
    CHECK(esdf.voxel_ptr(g)->distance == doctest::Approx(expected).epsilon(1e-5));
  }
  compare_to_oracle(esdf, tsdf, config);
}

TEST_CASE("negative side lowers away from the surface, floored at -d_max") {
  // wall of fixed voxels at x = 0 with interior (negative) on the +x side
  TsdfLayer tsdf(kVoxel, kVps);
  for (int z = -3; z <= 3; ++z) {
    for (int y = -3; y <= 3; ++y) {
      for (int x = -8; x <= 30; ++x) {
        TsdfVoxel& v = tsdf.get_or_allocate_voxel(GlobalVoxelIndex(x, y, z));
        v.weight = 1.0f;
        if (x < 0) {
          v.distance = 1.0f;  // free outside
        } else if (x == 0) {
          v.distance = -kVoxel / 2.0f;  // fixed surface voxel, negative side
        } else {
          v.distance = -1.0f;  // deep interior
        }
      }
    }
  }
  const EsdfConfig config = test_config();
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);

  float previous = 0.0f;
  for (int x = 1; x <= 30; ++x) {
    const float d = esdf.voxel_ptr(GlobalVoxelIndex(x, 0, 0))->distance;
    CHECK(d < 0.0f);
    CHECK(d <= previous + 1e-6f);  // monotone away from the surface
    CHECK(d >= -config.d_max - 1e-6f);
    previous = d;
  }
  // deep enough interior reaches the floor
  CHECK(esdf.voxel_ptr(GlobalVoxelIndex(30, 0, 0))->distance == doctest::Approx(-config.d_max));
  compare_to_oracle(esdf, tsdf, config);
  check_convergence(esdf, config);
}

TEST_CASE("queue modes converge to identical fields") {
  TsdfLayer tsdf = point_obstacle_tsdf(6, 1.0f);
  tsdf.voxel_ptr(GlobalVoxelIndex(-3, 5, 2))->distance = 0.05f;
  tsdf.voxel_ptr(GlobalVoxelIndex(2, -4, -1))->distance = -0.04f;

  const EsdfLayer fifo = EsdfIntegrator::build_batch(tsdf, test_config(QueueMode::kFifo));
  const EsdfLayer single =
      EsdfIntegrator::build_batch(tsdf, test_config(QueueMode::kPrioritySingleInsert));
  const EsdfLayer multi =
      EsdfIntegrator::build_batch(tsdf, test_config(QueueMode::kPriorityMultiInsert));

  CHECK(layers_identical(fifo, single));
  CHECK(layers_identical(fifo, multi));
  compare_to_oracle(fifo, tsdf, test_config(QueueMode::kFifo));
}

TEST_CASE("raise wavefront") {
  SUBCASE("removing the only obstacle raises everything back to d_max") {
    TsdfLayer tsdf = point_obstacle_tsdf(4, 1.0f);
    EsdfLayer esdf(kVoxel, kVps);
    EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
    integrator.propagate(tsdf.all_block_indices());
    CHECK(esdf.voxel_ptr(GlobalVoxelIndex(1, 0, 0))->distance < 0.2f);

    // obstacle vanishes: the voxel jumps to free space
    tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = 1.0f;
    const PropagateStats stats = integrator.propagate(tsdf.all_block_indices());
    CHECK(stats.raised > 0);

    for (int x = -4; x <= 4; ++x) {
      CHECK(esdf.voxel_ptr(GlobalVoxelIndex(x, 0, 0))->distance ==
            doctest::Approx(test_config().d_max));
    }
    check_convergence(esdf, test_config());
  }

  SUBCASE("a removed surface re-lowers from the remaining one, equal to batch") {
    TsdfLayer tsdf = point_obstacle_tsdf(6, 1.0f);
    tsdf.voxel_ptr(GlobalVoxelIndex(6, 0, 0))->distance = 0.0f;
    EsdfLayer esdf(kVoxel, kVps);
    EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
    integrator.propagate(tsdf.all_block_indices());

    tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = 1.0f;
    integrator.propagate(tsdf.all_block_indices());

    const EsdfLayer batch = EsdfIntegrator::build_batch(tsdf, test_config());
    CHECK(layers_identical(esdf, batch));
  }

  SUBCASE("fixed-band voxels are never modified by a raise") {
    TsdfLayer tsdf = point_obstacle_tsdf(5, 1.0f);
    tsdf.voxel_ptr(GlobalVoxelIndex(3, 0, 0))->distance = 0.02f;
    EsdfLayer esdf(kVoxel, kVps);
    EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
    integrator.propagate(tsdf.all_block_indices());

    // origin obstacle rises; the nearby fixed voxel must keep its value
    tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = 1.0f;
    integrator.propagate(tsdf.all_block_indices());
    CHECK(esdf.voxel_ptr(GlobalVoxelIndex(3, 0, 0))->distance == doctest::Approx(0.02f));
  }
}

TEST_CASE("incremental equals batch over random update partitions") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    // random analytic world over a 24^3 box
    SimWorld world;
    world.add(Sphere{Point(static_cast<float>(rng.uniform(0.4, 2.0)),
                           static_cast<float>(rng.uniform(0.4, 2.0)),
                           static_cast<float>(rng.uniform(0.4, 2.0))),
                     static_cast<float>(rng.uniform(0.2, 0.6))});
    world.add(AxisAlignedBox{Point(static_cast<float>(rng.uniform(0.4, 2.0)),
                                   static_cast<float>(rng.uniform(0.4, 2.0)),
                                   static_cast<float>(rng.uniform(0.4, 2.0))),
                             Point(static_cast<float>(rng.uniform(0.15, 0.5)),
                                   static_cast<float>(rng.uniform(0.15, 0.5)),
                                   static_cast<float>(rng.uniform(0.15, 0.5)))});
    const TsdfLayer tsdf =
        oracles::analytic_tsdf(world, kVoxel, kVps, 0.4f, GlobalVoxelIndex(0, 0, 0),
                               GlobalVoxelIndex(23, 23, 23));

    const EsdfConfig config = test_config();
    const EsdfLayer batch = EsdfIntegrator::build_batch(tsdf, config);

    // partition the block set into random propagate calls
    std::vector<BlockIndex> blocks;
    for (const auto& [bidx, block] : tsdf.blocks()) blocks.push_back(bidx);
    for (size_t i = blocks.size(); i > 1; --i) {
      std::swap(blocks[i - 1], blocks[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }
    EsdfLayer incremental(kVoxel, kVps);
    EsdfIntegrator integrator(config, &tsdf, &incremental);
    size_t cursor = 0;
    while (cursor < blocks.size()) {
      const size_t take =
          std::min(blocks.size() - cursor,
                   static_cast<size_t>(rng.uniform_int(1, static_cast<int>(blocks.size()))));
      IndexSet chunk;
      for (size_t i = 0; i < take; ++i) chunk.insert(blocks[cursor++]);
      integrator.propagate(chunk);
    }

    CHECK(layers_identical(incremental, batch));
    compare_to_oracle(batch, tsdf, config);
    check_convergence(batch, config);
  }
}

TEST_CASE("euclidean metric matches the analytic point-to-seed distance") {
  TsdfLayer tsdf = point_obstacle_tsdf(8, 1.0f);
  const EsdfConfig config =
      test_config(QueueMode::kPrioritySingleInsert, DistanceMetric::kEuclidean);
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);

  for (int z = -8; z <= 8; ++z) {
    for (int y = -8; y <= 8; ++y) {
      for (int x = -8; x <= 8; ++x) {
        if (x == 0 && y == 0 && z == 0) continue;
        const float euclid = kVoxel * std::sqrt(static_cast<float>(x * x + y * y + z * z));
        const float expected = std::min(euclid, config.d_max);
        CHECK(esdf.voxel_ptr(GlobalVoxelIndex(x, y, z))->distance ==
              doctest::Approx(expected).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("euclidean incremental equals euclidean batch") {
  TsdfLayer tsdf = point_obstacle_tsdf(6, 1.0f);
  tsdf.voxel_ptr(GlobalVoxelIndex(5, -2, 3))->distance = 0.03f;
  const EsdfConfig config =
      test_config(QueueMode::kPriorityMultiInsert, DistanceMetric::kEuclidean);

  EsdfLayer incremental(kVoxel, kVps);
  EsdfIntegrator integrator(config, &tsdf, &incremental);
  integrator.propagate(tsdf.all_block_indices());

  // surface moves: raise followed by re-lowering
  tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = 1.0f;
  tsdf.voxel_ptr(GlobalVoxelIndex(-4, 0, 0))->distance = 0.0f;
  integrator.propagate(tsdf.all_block_indices());

  const EsdfLayer batch = EsdfIntegrator::build_batch(tsdf, config);
  CHECK(layers_identical(incremental, batch));
}

TEST_CASE("half-truncation band copies a thicker shell") {
  TsdfLayer tsdf = point_obstacle_tsdf(5, 1.0f);
  tsdf.voxel_ptr(GlobalVoxelIndex(1, 0, 0))->distance = 0.15f;  // inside delta/2 = 0.2
  const EsdfConfig config = test_config(QueueMode::kPrioritySingleInsert,
                                        DistanceMetric::kQuasiEuclidean,
                                        FixedBandMode::kHalfTruncation);
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);
  CHECK(esdf.voxel_ptr(GlobalVoxelIndex(1, 0, 0))->fixed());
  CHECK(esdf.voxel_ptr(GlobalVoxelIndex(1, 0, 0))->distance == doctest::Approx(0.15f));
  compare_to_oracle(esdf, tsdf, config);
}

TEST_CASE("fixed band immutability and parent conventions") {
  TsdfLayer tsdf = point_obstacle_tsdf(5, 1.0f);
  const EsdfConfig config = test_config();
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, config);
  const float gamma = config.band_radius(kVoxel);

  for (const auto& [bidx, block] : tsdf.blocks()) {
    for (size_t lin = 0; lin < block->num_voxels(); ++lin) {
      const TsdfVoxel& tv = block->voxel(lin);
      if (!tv.observed()) continue;
      const GlobalVoxelIndex g = combine_indices(bidx, block->local_from_linear(lin), kVps);
      const EsdfVoxel* ev = esdf.voxel_ptr(g);
      if (is_fixed(tv.distance, gamma)) {
        CHECK(ev->distance == tv.distance);
        CHECK(!ev->has_parent());
      } else if (ev->observed() && std::abs(ev->distance) < config.d_max) {
        // lowered voxels carry a quasi-Euclidean parent direction
        CHECK(ev->has_parent());
        for (int k = 0; k < 3; ++k) {
          CHECK(ev->parent[k] >= -1);
          CHECK(ev->parent[k] <= 1);
        }
      }
    }
  }
}

TEST_CASE("observed flags are monotone") {
  TsdfLayer tsdf = point_obstacle_tsdf(3, 1.0f);
  EsdfLayer esdf(kVoxel, kVps);
  EsdfIntegrator integrator(test_config(), &tsdf, &esdf);
  integrator.propagate(tsdf.all_block_indices());

  IndexSet observed;
  for (const auto& [bidx, block] : esdf.blocks()) {
    for (size_t i = 0; i < block->num_voxels(); ++i) {
      if (block->voxel(i).observed()) {
        observed.insert(combine_indices(bidx, block->local_from_linear(i), kVps));
      }
    }
  }
  // a removed obstacle must not clear any flag
  tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = 1.0f;
  integrator.propagate(tsdf.all_block_indices());
  for (const GlobalVoxelIndex& g : observed) {
    CHECK(esdf.voxel_ptr(g)->observed());
  }
}

TEST_CASE("occupancy-seeded baseline") {
  SUBCASE("single occupied voxel spreads grid distances, never negative") {
    TsdfLayer tsdf = point_obstacle_tsdf(5, 1.0f);
    tsdf.voxel_ptr(GlobalVoxelIndex(0, 0, 0))->distance = -0.05f;  // occupied
    const EsdfLayer esdf = EsdfIntegrator::build_from_occupancy(tsdf, test_config());

    for (int x = -5; x <= 5; ++x) {
      const GlobalVoxelIndex g(x, 0, 0);
      const float expected = std::min(test_config().d_max, grid_distance_to_origin(g, kVoxel));
      CHECK(esdf.voxel_ptr(g)->distance == doctest::Approx(expected).epsilon(1e-5));
      CHECK(esdf.voxel_ptr(g)->distance >= 0.0f);
    }
  }

  SUBCASE("all-free map stays at d_max") {
    TsdfLayer free_tsdf(kVoxel, kVps);
    for (int z = -3; z <= 3; ++z) {
      for (int y = -3; y <= 3; ++y) {
        for (int x = -3; x <= 3; ++x) {
          TsdfVoxel& v = free_tsdf.get_or_allocate_voxel(GlobalVoxelIndex(x, y, z));
          v.weight = 1.0f;
          v.distance = 1.0f;
        }
      }
    }
    const EsdfLayer esdf = EsdfIntegrator::build_from_occupancy(free_tsdf, test_config());
    for (const auto& [bidx, block] : esdf.blocks()) {
      for (size_t i = 0; i < block->num_voxels(); ++i) {
        if (block->voxel(i).observed()) {
          CHECK(block->voxel(i).distance == doctest::Approx(test_config().d_max));
        }
      }
    }
  }
}

TEST_CASE("unobserved tsdf voxels are skipped entirely") {
  TsdfLayer tsdf(kVoxel, kVps);
  for (int x = -3; x <= 3; ++x) {
    TsdfVoxel& v = tsdf.get_or_allocate_voxel(GlobalVoxelIndex(x, 0, 0));
    v.weight = (x == 2) ? 0.0f : 1.0f;  // hole at x = 2
    v.distance = (x == 0) ? 0.0f : 1.0f;
  }
  const EsdfLayer esdf = EsdfIntegrator::build_batch(tsdf, test_config());
  CHECK(!esdf.voxel_ptr(GlobalVoxelIndex(2, 0, 0))->observed());
  // the wavefront does not pass through the unobserved voxel
  CHECK(esdf.voxel_ptr(GlobalVoxelIndex(3, 0, 0))->distance >
        grid_distance_to_origin(GlobalVoxelIndex(3, 0, 0), kVoxel) + 1e-4f);
}
