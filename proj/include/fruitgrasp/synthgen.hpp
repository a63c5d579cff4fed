#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fruitgrasp/geometry.hpp"

namespace fruitgrasp::synth {

using geom::Point3;
using geom::SphereModel;

enum class Condition { normal, noise, outlier, dense_clutter, combined };

std::string_view to_string(Condition c);
Condition condition_from_string(std::string_view s);
const std::vector<Condition>& all_conditions();

struct GenConfig {
  double radius_min = 0.03;  // meters
  double radius_max = 0.05;
  int points_per_fruit = 600;       // before any corruption
  double noise_sigma = 0.02;        // meters, per axis
  double outlier_fraction_min = 0.01;
  double outlier_fraction_max = 0.05;
  int clutter_neighbors_min = 1;
  int clutter_neighbors_max = 3;
  double camera_distance_min = 0.4;  // meters
  double camera_distance_max = 1.0;
};

struct AugmentConfig {
  double scale_min = 0.8;
  double scale_max = 1.2;
  double translation = 0.15;   // meters, uniform per axis in [-t, t]
  double rotation_deg = 10.0;  // uniform perturbation of theta and phi
};

/// One fruit's single-view point cloud with its ground truth. The sphere and
/// grasp orientation always describe the uncorrupted geometry.
struct LabeledSample {
  std::vector<Point3> points;
  SphereModel sphere;
  double theta = 0.0;
  double phi = 0.0;
  Condition condition = Condition::normal;
  std::uint64_t seed = 0;
};

/// Sample one fruit: sphere center inside the camera frustum at 0.4-1.0 m,
/// radius in range, points uniform on the camera-facing hemisphere. The
/// ground-truth grasp direction is the unit vector from the sphere center to
/// the analytic centroid of the visible hemisphere (center - r/2 * view), and
/// camera geometry is resampled until the angles land in [-pi/4, pi/4].
///
/// The camera sits at the origin and views along -X, so grasp directions
/// cluster about +X, the zero-rotation axis of the pose parametrization.
LabeledSample generate_sample(const GenConfig& cfg, std::mt19937_64& rng);

/// Apply a corruption regime; the stored ground truth is never touched.
LabeledSample corrupt(const LabeledSample& sample, const GenConfig& cfg, Condition condition,
                      std::mt19937_64& rng);

/// Random similarity/rigid augmentation: scale about the cloud centroid,
/// rotation of (theta, phi) about the sphere center, global translation.
/// The label transforms exactly with the points; rotations that would push
/// the label outside +-pi/4 are resampled.
LabeledSample augment(const LabeledSample& sample, const AugmentConfig& cfg,
                      std::mt19937_64& rng);

/// Deterministic dataset: sample i is generated from a sub-seed derived from
/// (seed, i), which is also stored in the sample.
std::vector<LabeledSample> generate_dataset(const GenConfig& cfg, int count, std::uint64_t seed);

/// JSON-lines dataset file, one sample per line. Numbers round-trip exactly.
void write_dataset(const std::vector<LabeledSample>& samples, const std::filesystem::path& path);
std::vector<LabeledSample> read_dataset(const std::filesystem::path& path);

}  // namespace fruitgrasp::synth
