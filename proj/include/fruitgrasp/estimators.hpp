#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fruitgrasp/geometry.hpp"
#include "fruitgrasp/preprocess.hpp"
#include "fruitgrasp/tinynn.hpp"

namespace fruitgrasp::est {

using geom::GraspPose;
using geom::Point3;
using geom::SphereModel;

struct RansacConfig {
  int iterations = 500;
  double inlier_threshold = 0.01;  // meters
  double min_inlier_fraction = 0.2;
  double radius_min = 0.01;  // accepted model radius bounds, meters
  double radius_max = 0.15;
  std::uint64_t seed = 1;
};

struct HoughConfig {
  double center_bin = 0.005;  // meters
  double radius_bin = 0.005;  // meters
  double radius_min = 0.01;
  double radius_max = 0.15;
  int directions = 64;  // Fibonacci-sphere directions voted per point
};

/// Unique sphere through four non-coplanar points, from the linear system
/// obtained by differencing |p - c|^2 = r^2. Throws DegenerateError when the
/// 3x3 system is ill-conditioned (|det| <= 1e-12).
SphereModel sphere_from_4_points(const Point3& p1, const Point3& p2, const Point3& p3,
                                 const Point3& p4);

/// Algebraic least-squares sphere: linear system on
/// x^2 + y^2 + z^2 = 2 c . p + (r^2 - |c|^2). Exact on noiseless sphere points.
SphereModel fit_sphere_least_squares(std::span<const Point3> points);

/// Best-of-N minimal fits scored by inlier count, then refit by algebraic
/// least squares over the inliers. Throws NoConsensusError when the best
/// inlier fraction stays below the minimum.
SphereModel ransac_fit(const std::vector<Point3>& points, const RansacConfig& cfg);

struct HoughStats {
  std::uint64_t total_votes = 0;
  std::int64_t radius_bins = 0;
  Point3 peak_center;
  double peak_radius = 0.0;
  std::uint32_t peak_votes = 0;
};

/// 4D (center, radius) Hough voting over a binned accumulator spanning the
/// cloud's padded bounding box and the radius bounds; the peak bin is refined
/// by algebraic least squares over points within one bin width of the peak
/// sphere. Throws EmptyAccumulatorError when no bin collects >= 4 votes.
SphereModel hough_fit(const std::vector<Point3>& points, const HoughConfig& cfg,
                      HoughStats* stats = nullptr);

/// Grasp rule: position at the sphere center, orientation from the sphere
/// center toward the centroid of the visible points.
GraspPose grasp_from_sphere(const SphereModel& sphere, const std::vector<Point3>& visible);

struct PointnetConfig {
  geom::NormalizationConfig norm;
  prep::PreprocessConfig pre;
  double radius_floor = 0.01;  // meters; below this the output is a sensing defect
};

struct Estimate {
  SphereModel sphere;
  GraspPose pose;
};

/// Full learned pipeline: preprocess, forward, activate, denormalize against
/// the recorded cloud centroid. Throws InsufficientPointsError (propagated)
/// and DegenerateOutputError for a sub-floor predicted radius.
Estimate pointnet_estimate(nn::RegressorModel& model, const std::vector<Point3>& cloud,
                           const PointnetConfig& cfg, std::mt19937_64& rng);

}  // namespace fruitgrasp::est
