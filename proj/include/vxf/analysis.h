#pragma once

#include <cstdint>
#include <vector>

#include "vxf/core.h"
#include "vxf/layer.h"

namespace vxf {

struct ErrorStats {
  double rms = 0.0;
  double mean = 0.0;   // signed
  double max = 0.0;    // max |error|
  size_t count = 0;
  double unknown_fraction = 0.0;
};

/// Reconstruction accuracy: each ground-truth surface point is projected into
/// the TSDF, the trilinearly interpolated distance is the error (clamped to
/// the truncation distance). Points landing in unknown voxels are excluded
/// from the stats and counted in unknown_fraction.
ErrorStats surface_error(const TsdfLayer& tsdf, const std::vector<Point>& ground_truth_points,
                         FloatingPoint truncation);

/// Per mutually-observed voxel: error = esdf.distance - ground_truth.distance.
ErrorStats esdf_error(const EsdfLayer& esdf, const EsdfLayer& ground_truth);

/// Residual of a projective measurement at incidence angle theta against a
/// locally planar surface: d sin(theta) - d.
double projective_residual(double theta, double d);

/// Expectation of the projective residual over theta uniform on [pi/20, pi/2];
/// evaluates to -0.3014 d.
double expected_projective_residual(double d);

/// Quasi-Euclidean residual at surface-normal angle phi in [0, pi/4]:
/// d (1 - sin(5 pi/8 - phi) / sin(3 pi/8)); extremal -0.0824 d at pi/8.
double quasi_euclidean_residual(double phi, double d);

/// Expectation over phi uniform on [0, pi/4]; evaluates to -0.0548 d.
double expected_quasi_residual(double d);

struct QuantileTable {
  std::vector<double> probabilities;
  std::vector<double> values;  // |error| as a fraction of the truncation distance

  double quantile(double p) const;
  double p95() const { return quantile(0.95); }
};

/// Monte Carlo of merging n_obs independent measurements of a surface-band
/// voxel. Each observation draws an incidence angle uniform on [pi/20, pi/2]
/// and a side (in front of / behind the surface), giving a signed residual
/// +-delta (1 - sin theta); residuals merge with unit weights and |error| is
/// recorded per trial. Optional 1/z^2 weighting draws z uniform on [1, 5].
QuantileTable monte_carlo_merged_error(int n_obs, int n_trials, double truncation, uint64_t seed,
                                       bool inverse_z2_weights = false);

/// Map lookups to collision-check a sphere of radius r once in an occupancy
/// grid. The voxel measure defaults to v^3; literal_v reproduces the printed
/// form that divides by v.
long occupancy_lookup_count(double r, double v, bool literal_v = false);

struct TrajectoryLookups {
  long n_occupancy = 0;
  long n_esdf_max = 0;  // ceil(l / r)
  long n_esdf_min = 0;  // ceil(l / d_max)
};

/// Lookup counts to collision-check a trajectory of arc length l with sphere
/// radius r: overlapping-sphere occupancy checks vs. the ESDF bounds.
TrajectoryLookups trajectory_lookup_counts(double r, double v, double l, double d_max,
                                           bool literal_v = false);

}  // namespace vxf
