#include "fruitgrasp/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/kernels.hpp"

namespace fruitgrasp::est {
namespace {

using geom::Vec3;

// Gaussian elimination with partial pivoting on an n x n system; the tiny
// fixed sizes here (3, 4) do not warrant a linear-algebra dependency.
template <int N>
std::array<double, N> solve_linear(std::array<std::array<double, N + 1>, N> a) {
  for (int col = 0; col < N; ++col) {
    int pivot = col;
    for (int r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-14) throw DegenerateError("singular linear system");
    std::swap(a[col], a[pivot]);
    for (int r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= N; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::array<double, N> x{};
  for (int r = N - 1; r >= 0; --r) {
    double s = a[r][N];
    for (int c = r + 1; c < N; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return x;
}

std::vector<double> flatten(const std::vector<Point3>& pts) {
  std::vector<double> xyz;
  xyz.reserve(pts.size() * 3);
  for (const auto& p : pts) {
    xyz.push_back(p.x);
    xyz.push_back(p.y);
    xyz.push_back(p.z);
  }
  return xyz;
}

/// Deterministic quasi-uniform unit directions (Fibonacci sphere).
std::vector<Vec3> fibonacci_directions(int n) {
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  const double golden = geom::kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double ang = golden * static_cast<double>(i);
    dirs.push_back({rad * std::cos(ang), rad * std::sin(ang), z});
  }
  return dirs;
}

}  // namespace

SphereModel sphere_from_4_points(const Point3& p1, const Point3& p2, const Point3& p3,
                                 const Point3& p4) {
  // Differencing |p_i - c|^2 = r^2 against p4 gives three linear equations:
  // 2 (p_i - p4) . c = |p_i|^2 - |p4|^2
  const std::array<Point3, 3> ps{p1, p2, p3};
  std::array<std::array<double, 4>, 3> sys{};
  const double n4 = p4.dot(p4);
  for (int i = 0; i < 3; ++i) {
    const Vec3 d = ps[static_cast<std::size_t>(i)] - p4;
    sys[static_cast<std::size_t>(i)] = {
        2.0 * d.x, 2.0 * d.y, 2.0 * d.z,
        ps[static_cast<std::size_t>(i)].dot(ps[static_cast<std::size_t>(i)]) - n4};
  }
  const double det =
      sys[0][0] * (sys[1][1] * sys[2][2] - sys[1][2] * sys[2][1]) -
      sys[0][1] * (sys[1][0] * sys[2][2] - sys[1][2] * sys[2][0]) +
      sys[0][2] * (sys[1][0] * sys[2][1] - sys[1][1] * sys[2][0]);
  if (std::abs(det) <= 1e-12) throw DegenerateError("sphere_from_4_points: coplanar points");
  const auto c = solve_linear<3>(sys);
  SphereModel s;
  s.center = {c[0], c[1], c[2]};
  s.radius = (p1 - s.center).norm();
  return s;
}

SphereModel fit_sphere_least_squares(std::span<const Point3> points) {
  if (points.size() < 4) throw TooFewPointsError("sphere fit: need at least 4 points");
  // Normal equations for |p|^2 = 2 c . p + d with d = r^2 - |c|^2.
  std::array<std::array<double, 5>, 4> m{};
  for (const auto& p : points) {
    const std::array<double, 4> row{2.0 * p.x, 2.0 * p.y, 2.0 * p.z, 1.0};
    const double rhs = p.dot(p);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j)
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +=
            row[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(j)];
      m[static_cast<std::size_t>(i)][4] += row[static_cast<std::size_t>(i)] * rhs;
    }
  }
  const auto x = solve_linear<4>(m);
  SphereModel s;
  s.center = {x[0], x[1], x[2]};
  const double r2 = x[3] + s.center.dot(s.center);
  if (!(r2 > 0.0)) throw DegenerateError("sphere fit: non-positive squared radius");
  s.radius = std::sqrt(r2);
  return s;
}

SphereModel ransac_fit(const std::vector<Point3>& points, const RansacConfig& cfg) {
  if (points.size() < 4) throw TooFewPointsError("ransac_fit: need at least 4 points");
  if (cfg.iterations < 1) throw ConfigError("ransac_fit: iterations must be >= 1");
  const auto xyz = flatten(points);
  const auto& k = kernels::active();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::size_t best_inliers = 0;
  SphereModel best{};
  bool have_best = false;

  for (int it = 0; it < cfg.iterations; ++it) {
    std::array<std::size_t, 4> idx{pick(rng), pick(rng), pick(rng), pick(rng)};
    if (idx[0] == idx[1] || idx[0] == idx[2] || idx[0] == idx[3] || idx[1] == idx[2] ||
        idx[1] == idx[3] || idx[2] == idx[3])
      continue;
    SphereModel candidate;
    try {
      candidate = sphere_from_4_points(points[idx[0]], points[idx[1]], points[idx[2]],
                                       points[idx[3]]);
    } catch (const DegenerateError&) {
      continue;
    }
    if (candidate.radius < cfg.radius_min || candidate.radius > cfg.radius_max) continue;
    const double center[3] = {candidate.center.x, candidate.center.y, candidate.center.z};
    const std::size_t inliers =
        k.count_sphere_inliers(xyz.data(), points.size(), center, candidate.radius,
                               cfg.inlier_threshold);
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = candidate;
      have_best = true;
    }
  }

  const auto minimum = static_cast<std::size_t>(
      std::ceil(cfg.min_inlier_fraction * static_cast<double>(points.size())));
  if (!have_best || best_inliers < std::max<std::size_t>(minimum, 4))
    throw NoConsensusError("ransac_fit: best consensus " + std::to_string(best_inliers) + "/" +
                           std::to_string(points.size()));

  // Iterated consensus refit: a displaced minimal fit can hold every true
  // surface point inside a generous band while soaking up stray outliers;
  // re-selecting inliers around each least-squares estimate sheds those
  // contaminants within a few rounds.
  SphereModel model = best;
  for (int round = 0; round < 3; ++round) {
    std::vector<Point3> inlier_pts;
    for (const auto& p : points)
      if (std::abs((p - model.center).norm() - model.radius) <= cfg.inlier_threshold)
        inlier_pts.push_back(p);
    if (inlier_pts.size() < 4) break;
    SphereModel refined;
    try {
      refined = fit_sphere_least_squares(inlier_pts);
    } catch (const DegenerateError&) {
      break;
    }
    if (refined.radius < cfg.radius_min || refined.radius > cfg.radius_max) break;
    model = refined;
  }
  return model;
}

SphereModel hough_fit(const std::vector<Point3>& points, const HoughConfig& cfg,
                      HoughStats* stats) {
  if (points.size() < 4) throw TooFewPointsError("hough_fit: need at least 4 points");
  if (cfg.center_bin <= 0.0 || cfg.radius_bin <= 0.0)
    throw ConfigError("hough_fit: bin sizes must be positive");

  Point3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  Point3 hi = lo * -1.0;
  for (const auto& p : points) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
  // candidate centers live inside the cloud's box padded by the largest radius
  const Point3 pad{cfg.radius_max, cfg.radius_max, cfg.radius_max};
  lo = lo - pad;
  hi = hi + pad;

  const auto nx = static_cast<std::int64_t>(std::floor((hi.x - lo.x) / cfg.center_bin)) + 1;
  const auto ny = static_cast<std::int64_t>(std::floor((hi.y - lo.y) / cfg.center_bin)) + 1;
  const auto nz = static_cast<std::int64_t>(std::floor((hi.z - lo.z) / cfg.center_bin)) + 1;
  const auto nr = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(
             std::ceil((cfg.radius_max - cfg.radius_min) / cfg.radius_bin - 1e-9)));

  const auto dirs = fibonacci_directions(cfg.directions);
  std::unordered_map<std::uint64_t, std::uint32_t> acc;
  acc.reserve(points.size() * dirs.size());
  std::uint64_t votes = 0;

  auto bin_of = [&](const Point3& c, std::int64_t ri) -> std::optional<std::uint64_t> {
    const auto ix = static_cast<std::int64_t>(std::floor((c.x - lo.x) / cfg.center_bin));
    const auto iy = static_cast<std::int64_t>(std::floor((c.y - lo.y) / cfg.center_bin));
    const auto iz = static_cast<std::int64_t>(std::floor((c.z - lo.z) / cfg.center_bin));
    if (ix < 0 || iy < 0 || iz < 0 || ix >= nx || iy >= ny || iz >= nz) return std::nullopt;
    return static_cast<std::uint64_t>(((ix * ny + iy) * nz + iz) * nr + ri);
  };

  for (std::int64_t ri = 0; ri < nr; ++ri) {
    const double r = cfg.radius_min + (static_cast<double>(ri) + 0.5) * cfg.radius_bin;
    for (const auto& p : points) {
      for (const auto& d : dirs) {
        ++votes;
        if (const auto key = bin_of(p + d * r, ri)) acc[*key] += 1;
      }
    }
  }

  auto sphere_of = [&](std::uint64_t key) -> SphereModel {
    const auto ri = static_cast<std::int64_t>(key % static_cast<std::uint64_t>(nr));
    auto rest = key / static_cast<std::uint64_t>(nr);
    const auto iz = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(nz));
    rest /= static_cast<std::uint64_t>(nz);
    const auto iy = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(ny));
    const auto ix = static_cast<std::int64_t>(rest / static_cast<std::uint64_t>(ny));
    SphereModel s;
    s.center = {lo.x + (static_cast<double>(ix) + 0.5) * cfg.center_bin,
                lo.y + (static_cast<double>(iy) + 0.5) * cfg.center_bin,
                lo.z + (static_cast<double>(iz) + 0.5) * cfg.center_bin};
    s.radius = cfg.radius_min + (static_cast<double>(ri) + 0.5) * cfg.radius_bin;
    return s;
  };

  // Raw counts alone favor small radii (a fixed center bin subtends a solid
  // angle that grows as 1/r^2), so voting only nominates candidates; the
  // peak is the candidate whose sphere is directly supported by the most
  // points. Ties break on the lowest packed index, never on map order.
  const auto xyz = flatten(points);
  const auto& k = kernels::active();
  const double band = std::max(cfg.center_bin, cfg.radius_bin);
  std::size_t best_support = 0;
  std::uint32_t best_votes = 0;
  std::uint64_t best_key = 0;
  bool found = false;
  for (const auto& [key, count] : acc) {
    if (count < 4) continue;
    const SphereModel cand = sphere_of(key);
    const double center[3] = {cand.center.x, cand.center.y, cand.center.z};
    const std::size_t support =
        k.count_sphere_inliers(xyz.data(), points.size(), center, cand.radius, band);
    if (!found || support > best_support || (support == best_support && key < best_key)) {
      found = true;
      best_support = support;
      best_votes = count;
      best_key = key;
    }
  }
  if (!found) throw EmptyAccumulatorError("hough_fit: no bin reached 4 votes");

  SphereModel peak = sphere_of(best_key);
  if (stats) {
    stats->total_votes = votes;
    stats->radius_bins = nr;
    stats->peak_center = peak.center;
    stats->peak_radius = peak.radius;
    stats->peak_votes = best_votes;
  }

  // refine over points near the peak sphere surface
  std::vector<Point3> support;
  for (const auto& p : points)
    if (std::abs((p - peak.center).norm() - peak.radius) <= band) support.push_back(p);
  if (support.size() >= 4) {
    try {
      SphereModel refined = fit_sphere_least_squares(support);
      if (refined.radius >= cfg.radius_min && refined.radius <= cfg.radius_max) return refined;
    } catch (const DegenerateError&) {
      // keep the raw peak
    }
  }
  return peak;
}

GraspPose grasp_from_sphere(const SphereModel& sphere, const std::vector<Point3>& visible) {
  if (visible.empty()) throw TooFewPointsError("grasp_from_sphere: no visible points");
  Point3 centroid;
  for (const auto& p : visible) centroid += p;
  centroid = centroid / static_cast<double>(visible.size());
  const Vec3 offset = centroid - sphere.center;
  const double n = offset.norm();
  if (n < 1e-12)
    throw DegenerateError("grasp_from_sphere: visible centroid coincides with the center");
  const auto angles = geom::direction_to_angles(offset / n);
  GraspPose pose;
  pose.position = sphere.center;
  pose.theta = angles.theta;
  pose.phi = angles.phi;
  return pose;
}

Estimate pointnet_estimate(nn::RegressorModel& model, const std::vector<Point3>& cloud,
                           const PointnetConfig& cfg, std::mt19937_64& rng) {
  const auto centered = prep::run_pipeline(cloud, cfg.pre, rng);
  std::vector<double> xyz = flatten(centered.points);
  const auto raw = nn::predict_raw(model, xyz);
  const geom::UnitedParams united = geom::activate(raw);
  const auto denorm = geom::denormalize(united, centered.centroid, cfg.norm);
  if (denorm.sphere.radius < cfg.radius_floor)
    throw DegenerateOutputError("pointnet_estimate: radius " +
                                std::to_string(denorm.sphere.radius) + " m below floor");
  return {denorm.sphere, denorm.pose};
}

}  // namespace fruitgrasp::est
