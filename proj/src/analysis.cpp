#include "vxf/analysis.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vxf/interpolation.h"

namespace vxf {

namespace {

constexpr double kThetaLo = M_PI / 20.0;
constexpr double kThetaHi = M_PI / 2.0;

struct Accumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  double max_abs = 0.0;
  size_t count = 0;

  void add(double e) {
    sum += e;
    sum_sq += e * e;
    max_abs = std::max(max_abs, std::abs(e));
    ++count;
  }

  void fill(ErrorStats* stats) const {
    stats->count = count;
    if (count > 0) {
      stats->mean = sum / count;
      stats->rms = std::sqrt(sum_sq / count);
      stats->max = max_abs;
    }
  }
};

}  // namespace

ErrorStats surface_error(const TsdfLayer& tsdf, const std::vector<Point>& ground_truth_points,
                         FloatingPoint truncation) {
  ErrorStats stats;
  Accumulator acc;
  size_t unknown = 0;
  for (const Point& p : ground_truth_points) {
    const auto d = interpolate_distance(tsdf, p);
    if (!d) {
      ++unknown;
      continue;
    }
    acc.add(std::clamp(*d, -truncation, truncation));
  }
  acc.fill(&stats);
  if (!ground_truth_points.empty()) {
    stats.unknown_fraction = static_cast<double>(unknown) / ground_truth_points.size();
  }
  return stats;
}

ErrorStats esdf_error(const EsdfLayer& esdf, const EsdfLayer& ground_truth) {
  if (esdf.voxel_size() != ground_truth.voxel_size() ||
      esdf.voxels_per_side() != ground_truth.voxels_per_side()) {
    throw std::invalid_argument("esdf_error requires matching layer geometry");
  }
  ErrorStats stats;
  Accumulator acc;
  size_t unobserved = 0;
  size_t total = 0;
  for (const auto& [bidx, gt_block] : ground_truth.blocks()) {
    const auto* block = esdf.block_ptr(bidx);
    for (size_t lin = 0; lin < gt_block->num_voxels(); ++lin) {
      const EsdfVoxel& gt = gt_block->voxel(lin);
      if (!gt.observed()) continue;
      ++total;
      if (block == nullptr || !block->voxel(lin).observed()) {
        ++unobserved;
        continue;
      }
      acc.add(static_cast<double>(block->voxel(lin).distance) - gt.distance);
    }
  }
  acc.fill(&stats);
  if (total > 0) stats.unknown_fraction = static_cast<double>(unobserved) / total;
  return stats;
}

double projective_residual(double theta, double d) { return d * std::sin(theta) - d; }

double expected_projective_residual(double d) {
  // Closed form of the uniform average of d sin(theta) - d over the incidence
  // range: mean sin = (cos lo - cos hi) / (hi - lo).
  const double mean_sin = (std::cos(kThetaLo) - std::cos(kThetaHi)) / (kThetaHi - kThetaLo);
  return d * (mean_sin - 1.0);
}

double quasi_euclidean_residual(double phi, double d) {
  return d * (1.0 - std::sin(5.0 * M_PI / 8.0 - phi) / std::sin(3.0 * M_PI / 8.0));
}

double expected_quasi_residual(double d) {
  // Mean of sin(5pi/8 - phi) over [0, pi/4] is (cos(3pi/8) - cos(5pi/8)) / (pi/4).
  const double span = M_PI / 4.0;
  const double mean_sin = (std::cos(3.0 * M_PI / 8.0) - std::cos(5.0 * M_PI / 8.0)) / span;
  return d * (1.0 - mean_sin / std::sin(3.0 * M_PI / 8.0));
}

double QuantileTable::quantile(double p) const {
  if (values.empty()) return 0.0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= p) return values[i];
  }
  return values.back();
}

QuantileTable monte_carlo_merged_error(int n_obs, int n_trials, double truncation, uint64_t seed,
                                       bool inverse_z2_weights) {
  if (n_obs < 1 || n_trials < 1) {
    throw std::invalid_argument("monte carlo requires n_obs >= 1 and n_trials >= 1");
  }
  Rng rng(seed);
  std::vector<double> errors(n_trials);
  for (int trial = 0; trial < n_trials; ++trial) {
    double weighted_sum = 0.0;
    double weight_sum = 0.0;
    for (int i = 0; i < n_obs; ++i) {
      const double theta = rng.uniform(kThetaLo, kThetaHi);
      const double side = rng.flip() ? 1.0 : -1.0;
      const double residual = side * truncation * (1.0 - std::sin(theta));
      double w = 1.0;
      if (inverse_z2_weights) {
        const double z = rng.uniform(1.0, 5.0);
        w = 1.0 / (z * z);
      }
      weighted_sum += w * residual;
      weight_sum += w;
    }
    errors[trial] = std::abs(weighted_sum / weight_sum) / truncation;
  }
  std::sort(errors.begin(), errors.end());

  QuantileTable table;
  for (double p : {0.5, 0.75, 0.9, 0.95, 0.99}) {
    size_t idx = static_cast<size_t>(std::ceil(p * n_trials));
    idx = std::min(std::max<size_t>(idx, 1), errors.size()) - 1;
    table.probabilities.push_back(p);
    table.values.push_back(errors[idx]);
  }
  return table;
}

long occupancy_lookup_count(double r, double v, bool literal_v) {
  if (r <= 0.0 || v <= 0.0) throw std::invalid_argument("radius and voxel size must be positive");
  const double volume = 4.0 / 3.0 * M_PI * r * r * r;
  return static_cast<long>(std::ceil(volume / (literal_v ? v : v * v * v)));
}

TrajectoryLookups trajectory_lookup_counts(double r, double v, double l, double d_max,
                                           bool literal_v) {
  if (r <= 0.0 || v <= 0.0 || l <= 0.0 || d_max <= 0.0) {
    throw std::invalid_argument("trajectory lookup arguments must be positive");
  }
  TrajectoryLookups out;
  // Overlapping spheres spaced r apart; the subtracted lens is half the
  // overlap volume, leaving 9/8 pi r^3 of new volume per check.
  const double volume = 9.0 / 8.0 * M_PI * r * r * r;
  const double per_check = std::ceil(volume / (literal_v ? v : v * v * v));
  out.n_occupancy = static_cast<long>(std::ceil(per_check * (l / r)));
  out.n_esdf_max = static_cast<long>(std::ceil(l / r));
  out.n_esdf_min = static_cast<long>(std::ceil(l / d_max));
  return out;
}

}  // namespace vxf
