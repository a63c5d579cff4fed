#pragma once

#include <array>
#include <cmath>

#include "fruitgrasp/errors.hpp"

namespace fruitgrasp::geom {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kQuarterPi = kPi / 4.0;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
};

/// A point in the working frame, meters. Grasp directions cluster about +X
/// (zero-rotation axis of the Euler-ZYX parametrization).
using Point3 = Vec3;

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{};

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  Mat3 operator*(const Mat3& o) const;
  Mat3 transposed() const;
  double determinant() const;
  static Mat3 identity();
};

/// Five-parameter grasp pose: fruit center plus Euler-ZYX theta (about Z) and
/// phi (about Y). The roll about X is identically zero and not stored.
struct GraspPose {
  Point3 position;
  double theta = 0.0;  // radians, in [-pi/4, pi/4]
  double phi = 0.0;    // radians, in [-pi/4, pi/4]
};

struct SphereModel {
  Point3 center;
  double radius = 0.0;  // meters, > 0
};

/// Normalized regression targets: offsets and radius divided by the mean
/// scale S, angles divided by pi/4.
struct UnitedParams {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double r = 0.0;
  double theta = 0.0;  // in [-1, 1]
  double phi = 0.0;    // in [-1, 1]
};

struct NormalizationConfig {
  double scale = 0.30;  // meters; the mean fruit scale S
};

struct Aabb3 {
  Point3 min;
  Point3 max;
};

struct Angles {
  double theta = 0.0;
  double phi = 0.0;
};

/// Rotation block of the grasp-pose transform with zero roll:
/// Rz(theta) * Ry(phi). Orthonormal with determinant +1.
Mat3 euler_zyx_rotation(double theta, double phi);

/// Grasp approach direction: the rotated X axis,
/// (cos(theta)cos(phi), sin(theta)cos(phi), -sin(phi)). Unit length.
Vec3 grasp_direction(double theta, double phi);

/// Inverse of grasp_direction for unit d. Throws OutOfRangeError when the
/// recovered angles leave [-pi/4, pi/4]; labels are rejected, never clamped.
Angles direction_to_angles(const Vec3& d);

/// Map a labeled sphere and grasp orientation to united parameters:
/// offsets and radius divided by S, angles divided by pi/4.
UnitedParams normalize_label(const Point3& centroid, const SphereModel& sphere,
                             double theta, double phi, const NormalizationConfig& cfg);

struct Denormalized {
  SphereModel sphere;
  GraspPose pose;
};

/// Exact inverse of normalize_label relative to the given cloud centroid.
Denormalized denormalize(const UnitedParams& u, const Point3& centroid,
                         const NormalizationConfig& cfg);

/// Output activations applied to the raw 6-vector of the regression head:
/// identity on the offsets, exp on the radius, tanh on the angles.
UnitedParams activate(const std::array<double, 6>& raw);

/// Axis-aligned cube of side 2r around the sphere center.
Aabb3 sphere_aabb(const SphereModel& s);

double aabb_volume(const Aabb3& b);

/// Intersection volume over union volume of two boxes; in [0, 1].
double iou_3d(const Aabb3& a, const Aabb3& b);

/// Angle in degrees between the two grasp directions.
double orientation_error_deg(const GraspPose& pred, const GraspPose& gt);

}  // namespace fruitgrasp::geom
