#include "vxf/benchmark.h"

#include <algorithm>
#include <chrono>
#include <memory>

namespace vxf {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<EsdfVariant> standard_esdf_variants(const BenchmarkConfig& config) {
  EsdfConfig base;
  base.d_max = config.d_max;
  base.truncation = config.tsdf.truncation;
  base.queue_mode = QueueMode::kPrioritySingleInsert;

  std::vector<EsdfVariant> variants;
  {
    EsdfVariant v{"one_voxel_quasi", false, base};
    v.config.band_mode = FixedBandMode::kOneVoxel;
    v.config.metric = DistanceMetric::kQuasiEuclidean;
    variants.push_back(v);
  }
  {
    EsdfVariant v{"half_trunc_quasi", false, base};
    v.config.band_mode = FixedBandMode::kHalfTruncation;
    v.config.metric = DistanceMetric::kQuasiEuclidean;
    variants.push_back(v);
  }
  {
    EsdfVariant v{"one_voxel_euclid", false, base};
    v.config.band_mode = FixedBandMode::kOneVoxel;
    v.config.metric = DistanceMetric::kEuclidean;
    variants.push_back(v);
  }
  {
    EsdfVariant v{"half_trunc_euclid", false, base};
    v.config.band_mode = FixedBandMode::kHalfTruncation;
    v.config.metric = DistanceMetric::kEuclidean;
    variants.push_back(v);
  }
  {
    EsdfVariant v{"occupancy", true, base};
    variants.push_back(v);
  }
  return variants;
}

BenchmarkReport run_sim_benchmark(const SimWorld& world, const BenchmarkConfig& config,
                                  const std::vector<EsdfVariant>& variants) {
  using Clock = std::chrono::steady_clock;
  BenchmarkReport report;
  report.voxel_size = config.voxel_size;

  const auto viewpoints =
      world.sample_viewpoints(config.num_viewpoints, config.min_clearance, config.seed);

  TsdfLayer tsdf(config.voxel_size, config.voxels_per_side);
  TsdfIntegrator tsdf_integrator(config.tsdf, &tsdf);

  struct LiveVariant {
    const EsdfVariant* spec;
    std::string consumer;
    std::unique_ptr<EsdfLayer> layer;
    std::unique_ptr<EsdfIntegrator> integrator;
    std::vector<double> seconds;
  };
  std::vector<LiveVariant> live;
  for (const EsdfVariant& v : variants) {
    LiveVariant lv;
    lv.spec = &v;
    lv.consumer = "esdf:" + v.name;
    tsdf.register_consumer(lv.consumer);
    if (!v.occupancy_seeded) {
      lv.layer = std::make_unique<EsdfLayer>(config.voxel_size, config.voxels_per_side);
      lv.integrator = std::make_unique<EsdfIntegrator>(v.config, &tsdf, lv.layer.get());
    }
    live.push_back(std::move(lv));
  }

  std::vector<Point> surface_points;
  for (const Transform& pose : viewpoints) {
    const Scan scan = world.render_depth(pose, config.camera);
    for (const Point& p : scan.points) {
      surface_points.push_back(pose * p);
    }

    const auto t0 = Clock::now();
    tsdf_integrator.integrate(scan);
    report.tsdf_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());

    for (LiveVariant& lv : live) {
      const IndexSet updated = tsdf.drain_updated(lv.consumer);
      if (lv.integrator) {
        const PropagateStats stats = lv.integrator->propagate(updated);
        lv.seconds.push_back(stats.seconds);
      }
    }
  }

  report.surface = surface_error(tsdf, surface_points, config.tsdf.truncation);
  report.tsdf_seconds_total = 0.0;
  for (double s : report.tsdf_seconds) report.tsdf_seconds_total += s;
  report.tsdf_seconds_median = median(report.tsdf_seconds);

  const EsdfLayer ground_truth =
      world.ground_truth_esdf(config.voxel_size, config.voxels_per_side, config.d_max);

  for (LiveVariant& lv : live) {
    VariantReport vr;
    vr.name = lv.spec->name;
    if (lv.spec->occupancy_seeded) {
      // The occupancy baseline has no incremental path; rebuild per the final
      // TSDF and time the single batch construction.
      EsdfConfig cfg = lv.spec->config;
      const auto t0 = Clock::now();
      const EsdfLayer occupancy = EsdfIntegrator::build_from_occupancy(tsdf, cfg);
      vr.esdf_seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
      vr.esdf_error = esdf_error(occupancy, ground_truth);
    } else {
      vr.esdf_error = esdf_error(*lv.layer, ground_truth);
      vr.esdf_seconds = lv.seconds;
    }
    for (double s : vr.esdf_seconds) vr.esdf_seconds_total += s;
    vr.esdf_seconds_median = median(vr.esdf_seconds);
    report.variants.push_back(std::move(vr));
  }
  return report;
}

}  // namespace vxf
