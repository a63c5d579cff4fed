#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "doctest.h"

#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/preprocess.hpp"

using namespace fruitgrasp;
using namespace fruitgrasp::prep;

namespace {

// ring of equidistant points around the origin in the XY plane
std::vector<Point3> ring(int n, double radius) {
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * geom::kPi * i / n;
    pts.push_back({radius * std::cos(a), radius * std::sin(a), 0.0});
  }
  return pts;
}

}  // namespace

TEST_CASE("reject_outliers removes a planted far point and keeps the rest") {
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(trial) + 100);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Point3> pts;
    for (int i = 0; i < 200; ++i) {
      Point3 p{gauss(rng), gauss(rng), gauss(rng)};
      const double n = p.norm();
      if (n < 1e-6) {
        --i;
        continue;
      }
      pts.push_back(p / n * 0.05);  // shell of radius 5 cm
    }
    // mean distance ~0.05; plant one point at more than 5 times that
    const Point3 planted{0.05 * 7.0, 0.0, 0.0};
    pts.push_back(planted);

    const auto kept = reject_outliers(pts);
    CHECK(kept.size() == 200);
    for (const auto& p : kept) CHECK((p - planted).norm() > 1e-12);
  }
}

TEST_CASE("reject_outliers keeps equidistant points untouched") {
  const auto pts = ring(64, 0.05);
  const auto kept = reject_outliers(pts);
  CHECK(kept.size() == pts.size());
}

TEST_CASE("reject_outliers rerun removes no more than a fourth pass would") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point3> pts;
    for (int i = 0; i < 150; ++i) pts.push_back({gauss(rng), gauss(rng), gauss(rng)});
    const auto once = reject_outliers(pts);
    const auto fourth_pass = reject_outliers(once, 2.0, 1);
    const auto rerun = reject_outliers(once);
    CHECK(rerun.size() <= once.size());
    CHECK(once.size() - rerun.size() <= (once.size() - fourth_pass.size()) + 0);
    // clouds that stabilized pass through unchanged
    if (fourth_pass.size() == once.size()) CHECK(rerun.size() == once.size());
    const auto again = reject_outliers(rerun);
    CHECK(again.size() <= rerun.size());
  }
}

TEST_CASE("reject_outliers needs at least four points") {
  CHECK_THROWS_AS(reject_outliers({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), TooFewPointsError);
}

TEST_CASE("voxel_downsample merges points sharing a voxel into their centroid") {
  const std::vector<Point3> pts{{0.0005, 0.0005, 0.0005}, {0.0015, 0.0005, 0.0005}};
  const auto out = voxel_downsample(pts, 0.003);
  REQUIRE(out.size() == 1);
  CHECK(out[0].x == doctest::Approx(0.001));
  CHECK(out[0].y == doctest::Approx(0.0005));
  CHECK(out[0].z == doctest::Approx(0.0005));
}

TEST_CASE("voxel_downsample keeps well-separated points and the empty cloud") {
  std::vector<Point3> grid;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) grid.push_back({0.010 * i, 0.010 * j, 0.0});
  CHECK(voxel_downsample(grid, 0.003).size() == grid.size());
  CHECK(voxel_downsample({}, 0.003).empty());
}

TEST_CASE("voxel_downsample emits at most one point per voxel") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  std::vector<Point3> pts;
  for (int i = 0; i < 3000; ++i) pts.push_back({u(rng), u(rng), u(rng)});
  const double res = 0.003;
  const auto out = voxel_downsample(pts, res);
  CHECK(out.size() <= pts.size());
  std::set<std::tuple<long long, long long, long long>> seen;
  for (const auto& p : out) {
    const auto key = std::make_tuple(static_cast<long long>(std::floor(p.x / res)),
                                     static_cast<long long>(std::floor(p.y / res)),
                                     static_cast<long long>(std::floor(p.z / res)));
    CHECK(seen.insert(key).second);  // centroid stays inside its own voxel
  }
}

TEST_CASE("sample_fixed draws without replacement and rejects short clouds") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point3> pts;
  for (int i = 0; i < 500; ++i) pts.push_back({u(rng), u(rng), static_cast<double>(i)});

  auto picked = sample_fixed(pts, 200, rng);
  CHECK(picked.size() == 200);
  std::set<double> zs;
  for (const auto& p : picked) {
    CHECK(zs.insert(p.z).second);  // distinct input points
    CHECK(p.z >= 0.0);
    CHECK(p.z < 500.0);
  }

  std::vector<Point3> short_cloud(pts.begin(), pts.begin() + 199);
  CHECK_THROWS_AS(sample_fixed(short_cloud, 200, rng), InsufficientPointsError);

  std::vector<Point3> exact(pts.begin(), pts.begin() + 200);
  const auto perm = sample_fixed(exact, 200, rng);
  std::set<double> in, out;
  for (const auto& p : exact) in.insert(p.z);
  for (const auto& p : perm) out.insert(p.z);
  CHECK(in == out);  // a permutation of the input
}

TEST_CASE("center_cloud subtracts the centroid exactly") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Point3> pts;
  for (int i = 0; i < 321; ++i) pts.push_back({u(rng), u(rng), u(rng)});
  const auto centered = center_cloud(pts);
  Point3 sum;
  for (const auto& p : centered.points) sum += p;
  CHECK(std::abs(sum.x / 321.0) <= 1e-12);
  CHECK(std::abs(sum.y / 321.0) <= 1e-12);
  CHECK(std::abs(sum.z / 321.0) <= 1e-12);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK((centered.points[i] + centered.centroid - pts[i]).norm() <= 1e-15);

  const auto single = center_cloud({{1.5, -2.0, 3.0}});
  CHECK(single.points[0].norm() == 0.0);
  CHECK(single.centroid.x == doctest::Approx(1.5));
}

TEST_CASE("full pipeline is deterministic given the seed") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Point3> pts;
  for (int i = 0; i < 800; ++i) pts.push_back({u(gen), u(gen), u(gen)});

  PreprocessConfig cfg;
  std::mt19937_64 rng1(42), rng2(42);
  const auto a = run_pipeline(pts, cfg, rng1);
  const auto b = run_pipeline(pts, cfg, rng2);
  REQUIRE(a.points.size() == b.points.size());
  CHECK(a.points.size() == 200);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].y == b.points[i].y);
    CHECK(a.points[i].z == b.points[i].z);
  }
  CHECK(a.centroid.x == b.centroid.x);
}
