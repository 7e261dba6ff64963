#pragma once

#include <string>
#include <vector>

#include "vxf/analysis.h"
#include "vxf/esdf_integrator.h"
#include "vxf/sim_world.h"
#include "vxf/tsdf_integrator.h"

namespace vxf {

/// One ESDF construction strategy to benchmark against the analytic ground
/// truth.
struct EsdfVariant {
  std::string name;
  bool occupancy_seeded = false;  // occupancy baseline ignores band/metric
  EsdfConfig config;
};

struct BenchmarkConfig {
  FloatingPoint voxel_size = 0.1f;
  int voxels_per_side = 16;
  TsdfConfig tsdf;  // truncation/dropoff re-derived from voxel_size
  CameraModel camera;
  int num_viewpoints = 50;
  FloatingPoint min_clearance = 1.0f;
  FloatingPoint d_max = 2.0f;
  uint64_t seed = 1;

  static BenchmarkConfig for_voxel_size(FloatingPoint v) {
    BenchmarkConfig c;
    c.voxel_size = v;
    c.tsdf = TsdfConfig::for_voxel_size(v);
    c.tsdf.max_ray_length = c.camera.max_range;
    return c;
  }
};

struct VariantReport {
  std::string name;
  ErrorStats esdf_error;
  double esdf_seconds_total = 0.0;
  double esdf_seconds_median = 0.0;  // per propagate call
  std::vector<double> esdf_seconds;  // per scan
};

struct BenchmarkReport {
  FloatingPoint voxel_size = 0.0f;
  ErrorStats surface;                 // TSDF accuracy against rendered surface points
  double tsdf_seconds_total = 0.0;
  double tsdf_seconds_median = 0.0;
  std::vector<double> tsdf_seconds;   // per scan
  std::vector<VariantReport> variants;
};

/// Renders depth scans from seeded random viewpoints, integrates one shared
/// TSDF, and maintains each ESDF variant incrementally per scan; errors are
/// evaluated against the analytic ground-truth ESDF. Deterministic per seed.
BenchmarkReport run_sim_benchmark(const SimWorld& world, const BenchmarkConfig& config,
                                  const std::vector<EsdfVariant>& variants);

/// The benchmark's standard variant set: fixed-band one-voxel / half-trunc
/// (quasi-Euclidean), both bands in full Euclidean mode, and the
/// occupancy-seeded baseline.
std::vector<EsdfVariant> standard_esdf_variants(const BenchmarkConfig& config);

double median(std::vector<double> values);

}  // namespace vxf
