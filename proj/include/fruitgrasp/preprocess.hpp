#pragma once

#include <random>
#include <vector>

#include "fruitgrasp/geometry.hpp"

namespace fruitgrasp::prep {

using geom::Point3;

struct PreprocessConfig {
  double outlier_multiplier = 2.0;  // reject points farther than this times the mean distance
  int outlier_passes = 3;
  double voxel_resolution = 0.003;  // meters
  int sample_points = 200;
};

/// Euclidean outlier rejection: per pass, recompute the centroid and the mean
/// point-to-centroid distance, then drop every point farther than
/// multiplier * mean. Throws TooFewPointsError for fewer than 4 input points.
std::vector<Point3> reject_outliers(const std::vector<Point3>& points,
                                    double multiplier = 2.0, int passes = 3);

/// Voxel-grid downsampling. Cubic voxels of side `resolution` anchored at the
/// world origin; each occupied voxel yields the centroid of its points.
/// Output is ordered by voxel index, so it is deterministic.
std::vector<Point3> voxel_downsample(const std::vector<Point3>& points,
                                     double resolution = 0.003);

/// Uniform sample of exactly n points without replacement. Throws
/// InsufficientPointsError when fewer than n points are available.
std::vector<Point3> sample_fixed(const std::vector<Point3>& points, int n,
                                 std::mt19937_64& rng);

struct CenteredCloud {
  std::vector<Point3> points;
  Point3 centroid;
};

/// Subtract the centroid from every point; the centroid is returned so the
/// prediction can be mapped back to the original frame.
CenteredCloud center_cloud(const std::vector<Point3>& points);

/// Full conditioning pipeline: reject_outliers -> voxel_downsample ->
/// sample_fixed -> center_cloud.
CenteredCloud run_pipeline(const std::vector<Point3>& points, const PreprocessConfig& cfg,
                           std::mt19937_64& rng);

}  // namespace fruitgrasp::prep
