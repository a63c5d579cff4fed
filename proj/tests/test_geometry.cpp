#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"

#include "fruitgrasp/geometry.hpp"

using namespace fruitgrasp;
using namespace fruitgrasp::geom;

namespace {

const double kHalfSqrt2 = std::sqrt(2.0) / 2.0;

void check_matrix(const Mat3& m, const std::array<double, 9>& expected, double tol) {
  for (std::size_t i = 0; i < 9; ++i) CHECK(std::abs(m.m[i] - expected[i]) <= tol);
}

}  // namespace

TEST_CASE("euler_zyx_rotation at zero angles is the identity") {
  const Mat3 r = euler_zyx_rotation(0.0, 0.0);
  check_matrix(r, {1, 0, 0, 0, 1, 0, 0, 0, 1}, 1e-15);
}

TEST_CASE("euler_zyx_rotation matches the closed form at (0, pi/4) and (pi/4, 0)") {
  check_matrix(euler_zyx_rotation(0.0, kPi / 4.0),
               {kHalfSqrt2, 0, kHalfSqrt2, 0, 1, 0, -kHalfSqrt2, 0, kHalfSqrt2}, 1e-12);
  check_matrix(euler_zyx_rotation(kPi / 4.0, 0.0),
               {kHalfSqrt2, -kHalfSqrt2, 0, kHalfSqrt2, kHalfSqrt2, 0, 0, 0, 1}, 1e-12);
}

TEST_CASE("rotations are orthonormal with determinant +1 across the angle range") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-kQuarterPi, kQuarterPi);
  for (int i = 0; i < 2000; ++i) {
    const Mat3 r = euler_zyx_rotation(angle(rng), angle(rng));
    const Mat3 rtr = r.transposed() * r;
    const Mat3 id = Mat3::identity();
    for (int k = 0; k < 9; ++k)
      CHECK(std::abs(rtr.m[static_cast<std::size_t>(k)] - id.m[static_cast<std::size_t>(k)]) <=
            1e-12);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-12);
  }
}

TEST_CASE("grasp_direction is the first rotation column and unit length") {
  const Vec3 d0 = grasp_direction(0.0, 0.0);
  CHECK(d0.x == doctest::Approx(1.0));
  CHECK(d0.y == doctest::Approx(0.0));
  CHECK(d0.z == doctest::Approx(0.0));

  const Vec3 d1 = grasp_direction(0.0, kPi / 4.0);
  CHECK(d1.x == doctest::Approx(kHalfSqrt2).epsilon(1e-12));
  CHECK(d1.y == doctest::Approx(0.0));
  CHECK(d1.z == doctest::Approx(-kHalfSqrt2).epsilon(1e-12));

  const Vec3 d2 = grasp_direction(kPi / 4.0, 0.0);
  CHECK(d2.x == doctest::Approx(kHalfSqrt2).epsilon(1e-12));
  CHECK(d2.y == doctest::Approx(kHalfSqrt2).epsilon(1e-12));
  CHECK(d2.z == doctest::Approx(0.0));

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> angle(-kQuarterPi, kQuarterPi);
  for (int i = 0; i < 500; ++i) {
    const double theta = angle(rng), phi = angle(rng);
    const Vec3 d = grasp_direction(theta, phi);
    CHECK(std::abs(d.norm() - 1.0) <= 1e-14);
    const Mat3 r = euler_zyx_rotation(theta, phi);
    CHECK(std::abs(d.x - r(0, 0)) <= 1e-15);
    CHECK(std::abs(d.y - r(1, 0)) <= 1e-15);
    CHECK(std::abs(d.z - r(2, 0)) <= 1e-15);
  }
}

TEST_CASE("direction_to_angles inverts grasp_direction within the valid range") {
  const Angles a0 = direction_to_angles({1, 0, 0});
  CHECK(a0.theta == doctest::Approx(0.0));
  CHECK(a0.phi == doctest::Approx(0.0));

  const Angles a1 = direction_to_angles({kHalfSqrt2, 0, -kHalfSqrt2});
  CHECK(a1.theta == doctest::Approx(0.0));
  CHECK(a1.phi == doctest::Approx(kPi / 4.0).epsilon(1e-12));

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> angle(-kQuarterPi, kQuarterPi);
  for (int i = 0; i < 2000; ++i) {
    const double theta = angle(rng), phi = angle(rng);
    const Angles back = direction_to_angles(grasp_direction(theta, phi));
    CHECK(std::abs(back.theta - theta) <= 1e-9);
    CHECK(std::abs(back.phi - phi) <= 1e-9);
    const Vec3 d = grasp_direction(back.theta, back.phi);
    const Vec3 orig = grasp_direction(theta, phi);
    CHECK((d - orig).norm() <= 1e-9);
  }
}

TEST_CASE("direction_to_angles rejects out-of-range directions") {
  CHECK_THROWS_AS(direction_to_angles({0, 0, 1}), OutOfRangeError);   // phi = -pi/2
  CHECK_THROWS_AS(direction_to_angles({0, 1, 0}), OutOfRangeError);   // theta = pi/2
  CHECK_THROWS_AS(direction_to_angles({-1, 0, 0}), OutOfRangeError);  // theta = pi
}

TEST_CASE("normalize_label maps the stated examples") {
  const NormalizationConfig cfg;  // S = 0.30
  SphereModel s;
  s.center = {0, 0, 0};
  s.radius = 0.30;
  const UnitedParams u = normalize_label({0, 0, 0}, s, kQuarterPi, 0.0, cfg);
  CHECK(u.r == doctest::Approx(1.0));
  CHECK(u.theta == doctest::Approx(1.0));
  CHECK(u.x == doctest::Approx(0.0));
  CHECK(u.y == doctest::Approx(0.0));
  CHECK(u.z == doctest::Approx(0.0));
}

TEST_CASE("normalize_label rejects out-of-range angles") {
  SphereModel s;
  s.radius = 0.05;
  CHECK_THROWS_AS(normalize_label({0, 0, 0}, s, kQuarterPi * 1.01, 0.0, {}), OutOfRangeError);
}

TEST_CASE("denormalize inverts normalize_label to machine precision") {
  const NormalizationConfig cfg;
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> radius(0.01, 0.2);
  std::uniform_real_distribution<double> angle(-kQuarterPi, kQuarterPi);
  for (int i = 0; i < 1000; ++i) {
    const Point3 centroid{coord(rng), coord(rng), coord(rng)};
    SphereModel s;
    s.center = {coord(rng), coord(rng), coord(rng)};
    s.radius = radius(rng);
    const double theta = angle(rng), phi = angle(rng);
    const UnitedParams u = normalize_label(centroid, s, theta, phi, cfg);
    const Denormalized d = denormalize(u, centroid, cfg);
    CHECK(std::abs(d.sphere.center.x - s.center.x) <= 1e-12);
    CHECK(std::abs(d.sphere.center.y - s.center.y) <= 1e-12);
    CHECK(std::abs(d.sphere.center.z - s.center.z) <= 1e-12);
    CHECK(std::abs(d.sphere.radius - s.radius) <= 1e-12);
    CHECK(std::abs(d.pose.theta - theta) <= 1e-12);
    CHECK(std::abs(d.pose.phi - phi) <= 1e-12);
  }
}

TEST_CASE("denormalize of unit radius at zero offsets lands on the centroid") {
  UnitedParams u;
  u.r = 1.0;
  const Denormalized d = denormalize(u, {0.4, -0.1, 0.7}, {});
  CHECK(d.sphere.center.x == doctest::Approx(0.4));
  CHECK(d.sphere.radius == doctest::Approx(0.30));
  CHECK(d.pose.theta == doctest::Approx(0.0));

  UnitedParams u2;
  u2.x = 1.0;
  u2.r = 1.0;
  const Denormalized d2 = denormalize(u2, {0, 0, 0}, {});
  CHECK(d2.sphere.center.x == doctest::Approx(0.3));
  CHECK(d2.sphere.center.y == doctest::Approx(0.0));
  CHECK(d2.sphere.radius == doctest::Approx(0.3));
}

TEST_CASE("activate applies identity/exp/tanh per output slot") {
  const UnitedParams u = activate({0.5, -0.25, 2.0, 0.0, 0.0, 10.0});
  CHECK(u.x == doctest::Approx(0.5));
  CHECK(u.y == doctest::Approx(-0.25));
  CHECK(u.z == doctest::Approx(2.0));
  CHECK(u.r == doctest::Approx(1.0));         // exp(0)
  CHECK(u.theta == doctest::Approx(0.0));     // tanh(0)
  CHECK(std::abs(u.phi - 1.0) <= 1e-8);       // tanh saturates
  const UnitedParams v = activate({0, 0, 0, 1.0, -10.0, 0});
  CHECK(v.r == doctest::Approx(std::exp(1.0)));
  CHECK(std::abs(v.theta + 1.0) <= 1e-8);
}

TEST_CASE("sphere_aabb is the tight cube around the sphere") {
  SphereModel s;
  s.center = {0, 0, 0};
  s.radius = 1.0;
  const Aabb3 b = sphere_aabb(s);
  CHECK(b.min.x == doctest::Approx(-1.0));
  CHECK(b.max.z == doctest::Approx(1.0));
  CHECK(aabb_volume(b) == doctest::Approx(8.0));

  SphereModel s2;
  s2.center = {1, 2, 3};
  s2.radius = 0.5;
  const Aabb3 b2 = sphere_aabb(s2);
  CHECK(b2.min.x == doctest::Approx(0.5));
  CHECK(b2.min.y == doctest::Approx(1.5));
  CHECK(b2.min.z == doctest::Approx(2.5));
  CHECK(b2.max.x == doctest::Approx(1.5));
  CHECK(b2.max.y == doctest::Approx(2.5));
  CHECK(b2.max.z == doctest::Approx(3.5));
  CHECK(aabb_volume(b2) == doctest::Approx(1.0));
}

TEST_CASE("iou_3d handles the closed-form cases") {
  const Aabb3 unit{{0, 0, 0}, {1, 1, 1}};
  CHECK(iou_3d(unit, unit) == doctest::Approx(1.0));

  const Aabb3 far{{5, 5, 5}, {6, 6, 6}};
  CHECK(iou_3d(unit, far) == doctest::Approx(0.0));

  const Aabb3 shifted{{0.5, 0, 0}, {1.5, 1, 1}};
  CHECK(iou_3d(unit, shifted) == doctest::Approx(1.0 / 3.0));
  CHECK(iou_3d(shifted, unit) == doctest::Approx(iou_3d(unit, shifted)));
}

TEST_CASE("iou_3d agrees with the Monte-Carlo volume oracle") {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 60; ++i) {
    const Aabb3 a = testsupport::random_box(rng);
    const Aabb3 b = i % 2 == 0 ? testsupport::nearby_box(a, rng) : testsupport::random_box(rng);
    const double expected = testsupport::mc_iou(a, b, 1000 + static_cast<std::uint64_t>(i));
    CHECK(std::abs(iou_3d(a, b) - expected) <= 0.01);
  }
}

TEST_CASE("iou_3d decreases monotonically as a cube slides away") {
  const Aabb3 base{{0, 0, 0}, {1, 1, 1}};
  for (int axis = 0; axis < 3; ++axis) {
    double prev = 1.0;
    for (int step = 1; step <= 12; ++step) {
      const double offset = 0.1 * step;
      Point3 shift;
      (axis == 0 ? shift.x : axis == 1 ? shift.y : shift.z) = offset;
      const Aabb3 moved{base.min + shift, base.max + shift};
      const double iou = iou_3d(base, moved);
      CHECK(iou <= prev + 1e-15);
      prev = iou;
    }
  }
}

TEST_CASE("orientation_error_deg is the angle between grasp directions") {
  GraspPose a, b;
  CHECK(orientation_error_deg(a, b) == doctest::Approx(0.0));
  b.phi = kPi / 4.0;
  CHECK(orientation_error_deg(a, b) == doctest::Approx(45.0).epsilon(1e-10));
  CHECK(orientation_error_deg(b, a) == doctest::Approx(orientation_error_deg(a, b)));
}
