#include "fruitgrasp/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>

#include "fruitgrasp/errors.hpp"

namespace fruitgrasp::prep {
namespace {

Point3 centroid_of(const std::vector<Point3>& pts) {
  Point3 c;
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

}  // namespace

std::vector<Point3> reject_outliers(const std::vector<Point3>& points, double multiplier,
                                    int passes) {
  if (points.size() < 4)
    throw TooFewPointsError("reject_outliers: need at least 4 points, got " +
                            std::to_string(points.size()));
  std::vector<Point3> kept = points;
  for (int pass = 0; pass < passes && !kept.empty(); ++pass) {
    const Point3 c = centroid_of(kept);
    double mean = 0.0;
    for (const auto& p : kept) mean += (p - c).norm();
    mean /= static_cast<double>(kept.size());
    const double limit = multiplier * mean;
    std::erase_if(kept, [&](const Point3& p) { return (p - c).norm() > limit; });
  }
  return kept;
}

std::vector<Point3> voxel_downsample(const std::vector<Point3>& points, double resolution) {
  if (resolution <= 0.0) throw ConfigError("voxel_downsample: resolution must be positive");
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  struct Cell {
    Point3 sum;
    std::size_t n = 0;
  };
  std::map<Key, Cell> grid;  // ordered: output is sorted by voxel index
  for (const auto& p : points) {
    const Key k{static_cast<std::int64_t>(std::floor(p.x / resolution)),
                static_cast<std::int64_t>(std::floor(p.y / resolution)),
                static_cast<std::int64_t>(std::floor(p.z / resolution))};
    auto& cell = grid[k];
    cell.sum += p;
    cell.n += 1;
  }
  std::vector<Point3> out;
  out.reserve(grid.size());
  for (const auto& [k, cell] : grid) out.push_back(cell.sum / static_cast<double>(cell.n));
  return out;
}

std::vector<Point3> sample_fixed(const std::vector<Point3>& points, int n, std::mt19937_64& rng) {
  if (static_cast<int>(points.size()) < n)
    throw InsufficientPointsError("sample_fixed: " + std::to_string(points.size()) +
                                  " points, need " + std::to_string(n));
  // partial Fisher-Yates: the first n slots end up a uniform sample
  std::vector<std::size_t> idx(points.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Point3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
    out.push_back(points[idx[static_cast<std::size_t>(i)]]);
  }
  return out;
}

CenteredCloud center_cloud(const std::vector<Point3>& points) {
  if (points.empty()) throw TooFewPointsError("center_cloud: empty cloud");
  CenteredCloud out;
  out.centroid = centroid_of(points);
  out.points.reserve(points.size());
  for (const auto& p : points) out.points.push_back(p - out.centroid);
  return out;
}

CenteredCloud run_pipeline(const std::vector<Point3>& points, const PreprocessConfig& cfg,
                           std::mt19937_64& rng) {
  const auto filtered = reject_outliers(points, cfg.outlier_multiplier, cfg.outlier_passes);
  const auto voxeled = voxel_downsample(filtered, cfg.voxel_resolution);
  const auto sampled = sample_fixed(voxeled, cfg.sample_points, rng);
  return center_cloud(sampled);
}

}  // namespace fruitgrasp::prep
