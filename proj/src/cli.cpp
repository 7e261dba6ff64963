#include "vxf/cli.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "vxf/analysis.h"
#include "vxf/benchmark.h"
#include "vxf/esdf_integrator.h"
#include "vxf/interpolation.h"
#include "vxf/mesh_extractor.h"
#include "vxf/scan.h"
#include "vxf/serialization.h"
#include "vxf/sim_world.h"
#include "vxf/tsdf_integrator.h"

namespace vxf {

namespace fs = std::filesystem;

namespace {

/// Removes declared outputs unless commit() ran, so failed commands leave no
/// partial files behind.
class OutputGuard {
 public:
  void declare(const std::string& path) { paths_.push_back(path); }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

struct CommonFlags {
  double voxel_size = 0.1;
  int voxels_per_side = 16;
  double truncation_mult = 4.0;
  std::string weight = "z2-dropoff";
  std::string merge = "grouped";
  std::string esdf_band = "one-voxel";
  std::string metric = "quasi";
  std::string queue = "prio-single";
  double d_max = 4.0;
  double min_ray = 0.05;
  double max_ray = 10.0;
  uint64_t seed = 1;
};

void add_common_flags(CLI::App* cmd, CommonFlags* flags) {
  cmd->add_option("--voxel-size", flags->voxel_size, "Voxel edge length in meters")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--voxels-per-side", flags->voxels_per_side, "Voxels per block side")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--truncation-mult", flags->truncation_mult,
                  "Truncation distance as a multiple of the voxel size");
  cmd->add_option("--weight", flags->weight, "Weighting: const, z2, z2-dropoff")
      ->check(CLI::IsMember({"const", "z2", "z2-dropoff"}));
  cmd->add_option("--merge", flags->merge, "Merging: simple, grouped, antigraze")
      ->check(CLI::IsMember({"simple", "grouped", "antigraze"}));
  cmd->add_option("--esdf-band", flags->esdf_band, "Fixed band: one-voxel, half-trunc")
      ->check(CLI::IsMember({"one-voxel", "half-trunc"}));
  cmd->add_option("--metric", flags->metric, "Distance metric: quasi, euclid")
      ->check(CLI::IsMember({"quasi", "euclid"}));
  cmd->add_option("--queue", flags->queue, "Queue: fifo, prio-single, prio-multi")
      ->check(CLI::IsMember({"fifo", "prio-single", "prio-multi"}));
  cmd->add_option("--d-max", flags->d_max, "Maximum ESDF distance in meters")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-ray", flags->min_ray, "Minimum ray length in meters");
  cmd->add_option("--max-ray", flags->max_ray, "Maximum ray length in meters");
  cmd->add_option("--seed", flags->seed, "Seed for all randomness");
}

TsdfConfig tsdf_config_from(const CommonFlags& f) {
  TsdfConfig c = TsdfConfig::for_voxel_size(static_cast<FloatingPoint>(f.voxel_size));
  c.truncation = static_cast<FloatingPoint>(f.truncation_mult * f.voxel_size);
  if (f.weight == "const") c.weight_mode = WeightMode::kConstant;
  if (f.weight == "z2") c.weight_mode = WeightMode::kInverseZ2;
  if (f.weight == "z2-dropoff") c.weight_mode = WeightMode::kInverseZ2Dropoff;
  if (f.merge == "simple") c.merge_mode = MergeMode::kSimpleRaycast;
  if (f.merge == "grouped") c.merge_mode = MergeMode::kGroupedRaycast;
  if (f.merge == "antigraze") c.merge_mode = MergeMode::kGroupedAntiGraze;
  c.min_ray_length = static_cast<FloatingPoint>(f.min_ray);
  c.max_ray_length = static_cast<FloatingPoint>(f.max_ray);
  return c;
}

EsdfConfig esdf_config_from(const CommonFlags& f) {
  EsdfConfig c;
  c.d_max = static_cast<FloatingPoint>(f.d_max);
  c.truncation = static_cast<FloatingPoint>(f.truncation_mult * f.voxel_size);
  c.band_mode =
      f.esdf_band == "one-voxel" ? FixedBandMode::kOneVoxel : FixedBandMode::kHalfTruncation;
  c.metric = f.metric == "quasi" ? DistanceMetric::kQuasiEuclidean : DistanceMetric::kEuclidean;
  if (f.queue == "fifo") c.queue_mode = QueueMode::kFifo;
  if (f.queue == "prio-single") c.queue_mode = QueueMode::kPrioritySingleInsert;
  if (f.queue == "prio-multi") c.queue_mode = QueueMode::kPriorityMultiInsert;
  return c;
}

void echo_effective_config(const CommonFlags& f) {
  std::cerr << "config: voxel-size=" << f.voxel_size << " voxels-per-side=" << f.voxels_per_side
            << " truncation-mult=" << f.truncation_mult << " weight=" << f.weight
            << " merge=" << f.merge << " esdf-band=" << f.esdf_band << " metric=" << f.metric
            << " queue=" << f.queue << " d-max=" << f.d_max << " seed=" << f.seed << "\n";
}

int cmd_integrate(const std::string& scans_dir, const std::string& trajectory_file,
                  const std::string& out_path, const std::string& esdf_out,
                  const CommonFlags& flags) {
  echo_effective_config(flags);

  std::vector<std::string> scan_files;
  if (!fs::is_directory(scans_dir)) {
    std::cerr << "error: scan directory does not exist: " << scans_dir << "\n";
    return 1;
  }
  for (const auto& entry : fs::directory_iterator(scans_dir)) {
    if (entry.path().extension() == ".ply") scan_files.push_back(entry.path().string());
  }
  std::sort(scan_files.begin(), scan_files.end());
  if (scan_files.empty()) {
    std::cerr << "error: no scans found in " << scans_dir << "\n";
    return 1;
  }
  const auto trajectory = load_tum_trajectory(trajectory_file);
  if (trajectory.size() != scan_files.size()) {
    std::cerr << "error: trajectory has " << trajectory.size() << " poses but " << scans_dir
              << " has " << scan_files.size() << " scans\n";
    return 1;
  }

  OutputGuard guard;
  guard.declare(out_path);

  TsdfLayer tsdf(static_cast<FloatingPoint>(flags.voxel_size), flags.voxels_per_side);
  TsdfIntegrator integrator(tsdf_config_from(flags), &tsdf);

  std::unique_ptr<EsdfLayer> esdf;
  std::unique_ptr<EsdfIntegrator> esdf_integrator;
  if (!esdf_out.empty()) {
    guard.declare(esdf_out);
    tsdf.register_consumer("esdf");
    esdf = std::make_unique<EsdfLayer>(static_cast<FloatingPoint>(flags.voxel_size),
                                       flags.voxels_per_side);
    esdf_integrator = std::make_unique<EsdfIntegrator>(esdf_config_from(flags), &tsdf,
                                                       esdf.get());
  }

  std::vector<double> insert_seconds;
  size_t total_updates = 0;
  for (size_t i = 0; i < scan_files.size(); ++i) {
    Scan scan = load_ply_points(scan_files[i]);
    scan.pose = trajectory[i].pose;
    const auto t0 = std::chrono::steady_clock::now();
    total_updates += integrator.integrate(scan);
    insert_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (esdf_integrator) {
      esdf_integrator->propagate(tsdf.drain_updated("esdf"));
    }
  }

  save_layer_file(tsdf, out_path);
  if (esdf) save_layer_file(*esdf, esdf_out);
  guard.commit();

  std::cout << "integrated " << scan_files.size() << " scans, " << total_updates
            << " voxel updates, median insert " << median(insert_seconds) * 1e3
            << " ms, blocks " << tsdf.block_count() << "\n";
  return 0;
}

int cmd_mesh(const std::string& layer_path, const std::string& out_path) {
  const LayerFileHeader header = read_layer_header_file(layer_path);
  if (header.kind != LayerKind::kTsdf) {
    std::cerr << "error: mesh extraction needs a TSDF layer file\n";
    return 1;
  }
  OutputGuard guard;
  guard.declare(out_path);
  const TsdfLayer tsdf = load_tsdf_layer_file(layer_path);
  const Mesh mesh = extract_mesh(tsdf);
  save_ply_mesh(mesh, out_path);
  guard.commit();
  std::cout << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
            << " triangles\n";
  return 0;
}

int cmd_slice(const std::string& layer_path, const std::string& axis, double coordinate,
              const std::string& out_path) {
  if (axis != "x" && axis != "y" && axis != "z") {
    std::cerr << "error: slice axis must be one of x, y, z\n";
    return 1;
  }
  const LayerFileHeader header = read_layer_header_file(layer_path);
  if (header.kind != LayerKind::kEsdf) {
    std::cerr << "error: slice needs an ESDF layer file\n";
    return 1;
  }
  const EsdfLayer layer = load_esdf_layer_file(layer_path);
  const FloatingPoint v = layer.voxel_size();
  const int vps = layer.voxels_per_side();
  const int normal_axis = axis == "x" ? 0 : (axis == "y" ? 1 : 2);
  const int row_axis = normal_axis == 2 ? 1 : 2;  // y for z-slices, z otherwise
  const int col_axis = normal_axis == 0 ? 1 : 0;

  // Voxel index along the slice normal, then the slice extent from the
  // allocated blocks.
  const int slice_idx = static_cast<int>(std::floor(coordinate / v));
  GlobalVoxelIndex lo = GlobalVoxelIndex::Constant(std::numeric_limits<int>::max());
  GlobalVoxelIndex hi = GlobalVoxelIndex::Constant(std::numeric_limits<int>::min());
  for (const auto& [bidx, block] : layer.blocks()) {
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], bidx[i] * vps);
      hi[i] = std::max(hi[i], bidx[i] * vps + vps - 1);
    }
  }
  OutputGuard guard;
  guard.declare(out_path);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  out << "# axis=" << axis << " index=" << slice_idx << " coord=" << coordinate
      << " voxel_size=" << v << " rows=" << "xyz"[row_axis] << ":" << lo[row_axis] << ".."
      << hi[row_axis] << " cols=" << "xyz"[col_axis] << ":" << lo[col_axis] << ".."
      << hi[col_axis] << "\n";
  if (layer.block_count() > 0) {
    for (int r = lo[row_axis]; r <= hi[row_axis]; ++r) {
      for (int c = lo[col_axis]; c <= hi[col_axis]; ++c) {
        GlobalVoxelIndex g;
        g[normal_axis] = slice_idx;
        g[row_axis] = r;
        g[col_axis] = c;
        const EsdfVoxel* voxel = layer.voxel_ptr(g);
        if (c != lo[col_axis]) out << ",";
        if (voxel == nullptr || !voxel->observed()) {
          out << "nan";
        } else {
          out << voxel->distance;
        }
      }
      out << "\n";
    }
  }
  if (!out) {
    std::cerr << "error: failed writing " << out_path << "\n";
    return 1;
  }
  out.close();
  guard.commit();
  return 0;
}

int cmd_sim_bench(const std::string& world_path, int viewpoints,
                  const std::vector<double>& voxel_sizes, const std::string& out_path,
                  const CommonFlags& flags) {
  echo_effective_config(flags);
  const SimWorld world =
      world_path.empty() ? SimWorld::default_world() : SimWorld::load(world_path);

  OutputGuard guard;
  guard.declare(out_path);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  out << "voxel_size,variant,esdf_rms,esdf_mean,esdf_max,esdf_count,esdf_unknown_fraction,"
         "esdf_total_s,esdf_median_s,tsdf_total_s,tsdf_median_s,surface_rms,"
         "surface_unknown_fraction\n";

  for (double v : voxel_sizes) {
    BenchmarkConfig config = BenchmarkConfig::for_voxel_size(static_cast<FloatingPoint>(v));
    config.voxels_per_side = flags.voxels_per_side;
    config.num_viewpoints = viewpoints;
    config.d_max = static_cast<FloatingPoint>(flags.d_max);
    config.seed = flags.seed;
    config.tsdf.weight_mode = tsdf_config_from(flags).weight_mode;
    config.tsdf.merge_mode = tsdf_config_from(flags).merge_mode;

    const BenchmarkReport report =
        run_sim_benchmark(world, config, standard_esdf_variants(config));
    for (const VariantReport& vr : report.variants) {
      out << v << "," << vr.name << "," << vr.esdf_error.rms << "," << vr.esdf_error.mean << ","
          << vr.esdf_error.max << "," << vr.esdf_error.count << ","
          << vr.esdf_error.unknown_fraction << "," << vr.esdf_seconds_total << ","
          << vr.esdf_seconds_median << "," << report.tsdf_seconds_total << ","
          << report.tsdf_seconds_median << "," << report.surface.rms << ","
          << report.surface.unknown_fraction << "\n";
    }
    std::cerr << "sim-bench: finished voxel size " << v << "\n";
  }
  if (!out) {
    std::cerr << "error: failed writing " << out_path << "\n";
    return 1;
  }
  out.close();
  guard.commit();
  return 0;
}

int cmd_error_analysis(const std::string& out_dir, uint64_t seed) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) {
    std::cerr << "error: cannot create output directory " << out_dir << "\n";
    return 1;
  }
  auto open = [&](const std::string& name, std::ofstream* out) {
    out->open(fs::path(out_dir) / name);
    if (!*out) {
      std::cerr << "error: output directory not writable: " << out_dir << "\n";
      return false;
    }
    return true;
  };

  OutputGuard guard;
  std::ofstream constants;
  guard.declare((fs::path(out_dir) / "constants.csv").string());
  if (!open("constants.csv", &constants)) return 1;
  constants << "constant,value\n";
  constants << "expected_projective_residual_d1," << expected_projective_residual(1.0) << "\n";
  constants << "quasi_residual_pi8_d1," << quasi_euclidean_residual(M_PI / 8.0, 1.0) << "\n";
  constants << "expected_quasi_residual_d1," << expected_quasi_residual(1.0) << "\n";

  std::ofstream proj;
  guard.declare((fs::path(out_dir) / "projective_residual.csv").string());
  if (!open("projective_residual.csv", &proj)) return 1;
  proj << "# expected value at d=1: " << expected_projective_residual(1.0) << "\n";
  proj << "theta,residual_d1\n";
  for (int i = 0; i <= 100; ++i) {
    const double theta = M_PI / 20.0 + (M_PI / 2.0 - M_PI / 20.0) * i / 100.0;
    proj << theta << "," << projective_residual(theta, 1.0) << "\n";
  }

  std::ofstream quasi;
  guard.declare((fs::path(out_dir) / "quasi_residual.csv").string());
  if (!open("quasi_residual.csv", &quasi)) return 1;
  quasi << "# extremal value at phi=pi/8, d=1: " << quasi_euclidean_residual(M_PI / 8.0, 1.0)
        << "; expected value at d=1: " << expected_quasi_residual(1.0) << "\n";
  quasi << "phi,residual_d1\n";
  for (int i = 0; i <= 100; ++i) {
    const double phi = M_PI / 4.0 * i / 100.0;
    quasi << phi << "," << quasi_euclidean_residual(phi, 1.0) << "\n";
  }

  std::ofstream mc;
  guard.declare((fs::path(out_dir) / "monte_carlo.csv").string());
  if (!open("monte_carlo.csv", &mc)) return 1;
  mc << "n_obs,p50,p75,p90,p95,p99\n";
  for (int n : {1, 2, 3, 5, 10, 30, 100}) {
    const QuantileTable t = monte_carlo_merged_error(n, 100000, 1.0, seed);
    mc << n;
    for (double q : t.values) mc << "," << q;
    mc << "\n";
  }
  guard.commit();
  return 0;
}

int cmd_collision_model(double l, double d_max, const std::string& out_path) {
  OutputGuard guard;
  guard.declare(out_path);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  out << "r,v,n_single,n_occupancy,n_esdf_max,n_esdf_min\n";
  for (double r = 0.1; r <= 1.0 + 1e-9; r += 0.1) {
    for (double v = 0.05; v <= 0.5 + 1e-9; v += 0.05) {
      const auto t = trajectory_lookup_counts(r, v, l, d_max);
      out << r << "," << v << "," << occupancy_lookup_count(r, v) << "," << t.n_occupancy << ","
          << t.n_esdf_max << "," << t.n_esdf_min << "\n";
    }
  }
  if (!out) return 1;
  out.close();
  guard.commit();
  return 0;
}

int cmd_info(const std::string& layer_path) {
  const LayerFileHeader h = read_layer_header_file(layer_path);
  std::cout << "kind: " << (h.kind == LayerKind::kTsdf ? "tsdf" : "esdf") << "\n"
            << "version: " << h.version << "\n"
            << "voxel_size: " << h.voxel_size << "\n"
            << "voxels_per_side: " << h.voxels_per_side << "\n"
            << "block_count: " << h.block_count << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"TSDF/ESDF voxel mapping tool"};
  app.require_subcommand(1);
  app.set_config("--config");

  CommonFlags flags;

  auto* integrate = app.add_subcommand("integrate", "Fuse PLY scans into a TSDF layer file");
  std::string scans_dir, trajectory_file, out_path, esdf_out;
  integrate->add_option("--scans", scans_dir, "Directory of PLY scans")->required();
  integrate->add_option("--trajectory", trajectory_file, "TUM-format trajectory file")
      ->required();
  integrate->add_option("--out", out_path, "Output TSDF layer file")->required();
  integrate->add_option("--esdf-out", esdf_out, "Also write an incrementally built ESDF layer");
  add_common_flags(integrate, &flags);

  auto* mesh = app.add_subcommand("mesh", "Extract a marching-cubes mesh from a TSDF layer");
  std::string mesh_layer, mesh_out;
  mesh->add_option("--layer", mesh_layer, "TSDF layer file")->required();
  mesh->add_option("--out", mesh_out, "Output PLY path")->required();

  auto* slice = app.add_subcommand("slice", "Write a CSV slice of an ESDF layer");
  std::string slice_layer, slice_axis = "z", slice_out;
  double slice_coord = 0.0;
  slice->add_option("--layer", slice_layer, "ESDF layer file")->required();
  slice->add_option("--axis", slice_axis, "Slice normal axis: x, y or z");
  slice->add_option("--coord", slice_coord, "Slice coordinate in meters")->required();
  slice->add_option("--out", slice_out, "Output CSV path")->required();

  auto* bench = app.add_subcommand("sim-bench", "Run the analytic-world benchmark");
  std::string world_path, bench_out;
  int viewpoints = 50;
  std::vector<double> voxel_sizes{0.05, 0.10, 0.20};
  bench->add_option("--world", world_path, "World description file (default: built-in world)");
  bench->add_option("--viewpoints", viewpoints, "Number of random viewpoints");
  bench->add_option("--voxel-sizes", voxel_sizes, "Voxel sizes to sweep")->expected(-1);
  bench->add_option("--out", bench_out, "Output report CSV")->required();
  add_common_flags(bench, &flags);

  auto* analysis = app.add_subcommand("error-analysis",
                                      "Emit residual and Monte-Carlo error tables");
  std::string analysis_dir;
  analysis->add_option("--out-dir", analysis_dir, "Output directory")->required();
  analysis->add_option("--seed", flags.seed, "Monte-Carlo seed");

  auto* collision = app.add_subcommand("collision-model",
                                       "Emit the collision-lookup cost model curves");
  std::string collision_out;
  double collision_l = 10.0, collision_dmax = 2.0;
  collision->add_option("--out", collision_out, "Output CSV path")->required();
  collision->add_option("--length", collision_l, "Trajectory arc length in meters");
  collision->add_option("--d-max", collision_dmax, "Maximum ESDF distance in meters");

  auto* info = app.add_subcommand("info", "Print a layer file header");
  std::string info_layer;
  info->add_option("--layer", info_layer, "Layer file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (integrate->parsed()) {
      return cmd_integrate(scans_dir, trajectory_file, out_path, esdf_out, flags);
    }
    if (mesh->parsed()) return cmd_mesh(mesh_layer, mesh_out);
    if (slice->parsed()) return cmd_slice(slice_layer, slice_axis, slice_coord, slice_out);
    if (bench->parsed()) {
      return cmd_sim_bench(world_path, viewpoints, voxel_sizes, bench_out, flags);
    }
    if (analysis->parsed()) return cmd_error_analysis(analysis_dir, flags.seed);
    if (collision->parsed()) return cmd_collision_model(collision_l, collision_dmax,
                                                        collision_out);
    if (info->parsed()) return cmd_info(info_layer);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vxf
