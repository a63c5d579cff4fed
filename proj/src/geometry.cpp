#include "fruitgrasp/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace fruitgrasp::geom {

Mat3 Mat3::operator*(const Mat3& o) const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
      r(i, j) = s;
    }
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
  return r;
}

double Mat3::determinant() const {
  const auto& a = m;
  return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Mat3 Mat3::identity() {
  Mat3 r;
  r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
  return r;
}

Mat3 euler_zyx_rotation(double theta, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(phi), sp = std::sin(phi);
  Mat3 r;
  r(0, 0) = ct * cp;
  r(0, 1) = -st;
  r(0, 2) = ct * sp;
  r(1, 0) = st * cp;
  r(1, 1) = ct;
  r(1, 2) = st * sp;
  r(2, 0) = -sp;
  r(2, 1) = 0.0;
  r(2, 2) = cp;
  return r;
}

Vec3 grasp_direction(double theta, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(phi), sp = std::sin(phi);
  return {ct * cp, st * cp, -sp};
}

Angles direction_to_angles(const Vec3& d) {
  if (std::abs(d.norm() - 1.0) > 1e-9)
    throw DegenerateError("direction_to_angles: input is not a unit vector");
  double theta = std::atan2(d.y, d.x);
  double phi = -std::asin(std::clamp(d.z, -1.0, 1.0));
  // inclusive bound with a rounding guard: directions computed from angles at
  // exactly +-pi/4 may land a few ulps past it
  constexpr double kGuard = 1e-12;
  if (std::abs(theta) > kQuarterPi + kGuard || std::abs(phi) > kQuarterPi + kGuard)
    throw OutOfRangeError("grasp angles outside [-pi/4, pi/4]");
  theta = std::clamp(theta, -kQuarterPi, kQuarterPi);
  phi = std::clamp(phi, -kQuarterPi, kQuarterPi);
  return {theta, phi};
}

UnitedParams normalize_label(const Point3& centroid, const SphereModel& sphere,
                             double theta, double phi, const NormalizationConfig& cfg) {
  if (std::abs(theta) > kQuarterPi || std::abs(phi) > kQuarterPi)
    throw OutOfRangeError("normalize_label: angles outside [-pi/4, pi/4]");
  const Vec3 off = (sphere.center - centroid) / cfg.scale;
  return {off.x, off.y, off.z, sphere.radius / cfg.scale, theta / kQuarterPi, phi / kQuarterPi};
}

Denormalized denormalize(const UnitedParams& u, const Point3& centroid,
                         const NormalizationConfig& cfg) {
  Denormalized out;
  out.sphere.center = centroid + Vec3{u.x, u.y, u.z} * cfg.scale;
  out.sphere.radius = u.r * cfg.scale;
  out.pose.position = out.sphere.center;
  out.pose.theta = u.theta * kQuarterPi;
  out.pose.phi = u.phi * kQuarterPi;
  return out;
}

UnitedParams activate(const std::array<double, 6>& raw) {
  return {raw[0], raw[1], raw[2], std::exp(raw[3]), std::tanh(raw[4]), std::tanh(raw[5])};
}

Aabb3 sphere_aabb(const SphereModel& s) {
  const Vec3 r{s.radius, s.radius, s.radius};
  return {s.center - r, s.center + r};
}

double aabb_volume(const Aabb3& b) {
  return (b.max.x - b.min.x) * (b.max.y - b.min.y) * (b.max.z - b.min.z);
}

double iou_3d(const Aabb3& a, const Aabb3& b) {
  const double ix = std::min(a.max.x, b.max.x) - std::max(a.min.x, b.min.x);
  const double iy = std::min(a.max.y, b.max.y) - std::max(a.min.y, b.min.y);
  const double iz = std::min(a.max.z, b.max.z) - std::max(a.min.z, b.min.z);
  if (ix <= 0.0 || iy <= 0.0 || iz <= 0.0) return 0.0;
  const double inter = ix * iy * iz;
  const double uni = aabb_volume(a) + aabb_volume(b) - inter;
  return inter / uni;
}

double orientation_error_deg(const GraspPose& pred, const GraspPose& gt) {
  const Vec3 a = grasp_direction(pred.theta, pred.phi);
  const Vec3 b = grasp_direction(gt.theta, gt.phi);
  const double c = std::clamp(a.dot(b), -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

}  // namespace fruitgrasp::geom
