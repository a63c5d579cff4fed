#include "fruitgrasp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "fruitgrasp/errors.hpp"
#include "fruitgrasp/rng.hpp"

namespace fruitgrasp::synth {
namespace {

using geom::Vec3;

constexpr int kMaxResampleTries = 1000;

// Lateral extent of the synthetic frustum: tan of the half-angle. Keeps the
// base labels inside ~33 degrees so augmentation headroom remains before the
// +-45 degree bound.
constexpr double kFrustumTan = 0.55;

Vec3 uniform_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (true) {
    const Vec3 v{gauss(rng), gauss(rng), gauss(rng)};
    const double n = v.norm();
    if (n > 1e-12) return v / n;
  }
}

Point3 cloud_centroid(const std::vector<Point3>& pts) {
  Point3 c;
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

struct Bounds {
  Point3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  Point3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()};
  void absorb(const Point3& p) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    lo.z = std::min(lo.z, p.z);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
    hi.z = std::max(hi.z, p.z);
  }
};

/// Uniform point on the hemisphere of `sphere` facing away from `view`
/// (surface points p with (p - center) . view < 0).
Point3 hemisphere_point(const SphereModel& sphere, const Vec3& view, std::mt19937_64& rng) {
  Vec3 w = uniform_unit_vector(rng);
  if (w.dot(view) > 0.0) w = w * -1.0;
  return sphere.center + w * sphere.radius;
}

void add_noise(std::vector<Point3>& pts, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  for (auto& p : pts) {
    p.x += gauss(rng);
    p.y += gauss(rng);
    p.z += gauss(rng);
  }
}

void add_outliers(std::vector<Point3>& pts, const GenConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> frac(cfg.outlier_fraction_min, cfg.outlier_fraction_max);
  const auto count =
      static_cast<std::size_t>(std::llround(frac(rng) * static_cast<double>(pts.size())));
  Bounds b;
  for (const auto& p : pts) b.absorb(p);
  const Point3 mid = (b.lo + b.hi) / 2.0;
  const Vec3 half = (b.hi - b.lo) * 0.5 * 3.0;  // box three times the cloud extent
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < count; ++i)
    pts.push_back(mid + Vec3{u(rng) * half.x, u(rng) * half.y, u(rng) * half.z});
}

void add_clutter(std::vector<Point3>& pts, const LabeledSample& sample, const GenConfig& cfg,
                 std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ncount(cfg.clutter_neighbors_min, cfg.clutter_neighbors_max);
  std::uniform_real_distribution<double> radius(cfg.radius_min, cfg.radius_max);
  const int neighbors = ncount(rng);
  const double crop = 1.6 * sample.sphere.radius;  // neighbor points inside the target's crop ball
  for (int k = 0; k < neighbors; ++k) {
    SphereModel nb;
    nb.radius = radius(rng);
    const double rsum = sample.sphere.radius + nb.radius;
    std::uniform_real_distribution<double> gap(rsum, 1.2 * rsum);
    nb.center = sample.sphere.center + uniform_unit_vector(rng) * gap(rng);
    const Vec3 view = nb.center.normalized();  // camera at origin
    for (int i = 0; i < cfg.points_per_fruit; ++i) {
      const Point3 p = hemisphere_point(nb, view, rng);
      if ((p - sample.sphere.center).norm() <= crop) pts.push_back(p);
    }
  }
}

nlohmann::json to_json(const LabeledSample& s) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : s.points) pts.push_back({p.x, p.y, p.z});
  return {{"points", std::move(pts)},
          {"center", {s.sphere.center.x, s.sphere.center.y, s.sphere.center.z}},
          {"radius", s.sphere.radius},
          {"theta", s.theta},
          {"phi", s.phi},
          {"condition", std::string(to_string(s.condition))},
          {"seed", s.seed}};
}

LabeledSample sample_from_json(const nlohmann::json& j) {
  LabeledSample s;
  const auto& pts = j.at("points");
  if (!pts.is_array() || pts.empty()) throw ParseError("'points' must be a non-empty array");
  s.points.reserve(pts.size());
  for (const auto& p : pts) {
    if (!p.is_array() || p.size() != 3) throw ParseError("point entries must be [x, y, z]");
    s.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  const auto& c = j.at("center");
  if (!c.is_array() || c.size() != 3) throw ParseError("'center' must be [x, y, z]");
  s.sphere.center = {c[0].get<double>(), c[1].get<double>(), c[2].get<double>()};
  s.sphere.radius = j.at("radius").get<double>();
  if (!(s.sphere.radius > 0.0)) throw ParseError("'radius' must be positive");
  s.theta = j.at("theta").get<double>();
  s.phi = j.at("phi").get<double>();
  if (std::abs(s.theta) > geom::kQuarterPi || std::abs(s.phi) > geom::kQuarterPi)
    throw ParseError("grasp angles outside [-pi/4, pi/4]");
  s.condition = condition_from_string(j.at("condition").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::normal: return "normal";
    case Condition::noise: return "noise";
    case Condition::outlier: return "outlier";
    case Condition::dense_clutter: return "dense_clutter";
    case Condition::combined: return "combined";
  }
  return "normal";
}

Condition condition_from_string(std::string_view s) {
  for (Condition c : all_conditions())
    if (s == to_string(c)) return c;
  throw ParseError("unknown condition: " + std::string(s));
}

const std::vector<Condition>& all_conditions() {
  static const std::vector<Condition> all{Condition::normal, Condition::noise, Condition::outlier,
                                          Condition::dense_clutter, Condition::combined};
  return all;
}

LabeledSample generate_sample(const GenConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(cfg.camera_distance_min, cfg.camera_distance_max);
  std::uniform_real_distribution<double> lateral(-kFrustumTan, kFrustumTan);
  std::uniform_real_distribution<double> radius(cfg.radius_min, cfg.radius_max);

  for (int attempt = 0; attempt < kMaxResampleTries; ++attempt) {
    // Grasp direction d = unit(1, a, b); the fruit sits at distance L along -d
    // so the visible hemisphere faces the camera at the origin.
    const Vec3 d = Vec3{1.0, lateral(rng), lateral(rng)}.normalized();
    geom::Angles angles;
    try {
      angles = geom::direction_to_angles(d);
    } catch (const OutOfRangeError&) {
      continue;
    }
    LabeledSample s;
    s.sphere.center = d * -dist(rng);
    s.sphere.radius = radius(rng);
    s.theta = angles.theta;
    s.phi = angles.phi;
    const Vec3 view = s.sphere.center.normalized();  // equals -d
    s.points.reserve(static_cast<std::size_t>(cfg.points_per_fruit));
    for (int i = 0; i < cfg.points_per_fruit; ++i)
      s.points.push_back(hemisphere_point(s.sphere, view, rng));
    return s;
  }
  throw OutOfRangeError("generate_sample: no in-range grasp pose after 1000 tries");
}

LabeledSample corrupt(const LabeledSample& sample, const GenConfig& cfg, Condition condition,
                      std::mt19937_64& rng) {
  LabeledSample out = sample;
  out.condition = condition;
  switch (condition) {
    case Condition::normal:
      break;
    case Condition::noise:
      add_noise(out.points, cfg.noise_sigma, rng);
      break;
    case Condition::outlier:
      add_outliers(out.points, cfg, rng);
      break;
    case Condition::dense_clutter:
      add_clutter(out.points, sample, cfg, rng);
      break;
    case Condition::combined:
      add_clutter(out.points, sample, cfg, rng);
      add_noise(out.points, cfg.noise_sigma, rng);
      add_outliers(out.points, cfg, rng);
      break;
  }
  return out;
}

LabeledSample augment(const LabeledSample& sample, const AugmentConfig& cfg,
                      std::mt19937_64& rng) {
  LabeledSample out = sample;

  // scale about the cloud centroid; offsets and radius scale identically
  std::uniform_real_distribution<double> scale_dist(cfg.scale_min, cfg.scale_max);
  const double s = scale_dist(rng);
  const Point3 m = cloud_centroid(out.points);
  for (auto& p : out.points) p = m + (p - m) * s;
  out.sphere.center = m + (out.sphere.center - m) * s;
  out.sphere.radius *= s;

  // rotate (theta, phi) jointly with the points about the sphere center
  const double rot = cfg.rotation_deg * geom::kPi / 180.0;
  std::uniform_real_distribution<double> rot_dist(-rot, rot);
  double new_theta = out.theta, new_phi = out.phi;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= kMaxResampleTries)
      throw OutOfRangeError("augment: no in-range rotation after 1000 tries");
    const double t = out.theta + rot_dist(rng);
    const double p = out.phi + rot_dist(rng);
    if (std::abs(t) <= geom::kQuarterPi && std::abs(p) <= geom::kQuarterPi) {
      new_theta = t;
      new_phi = p;
      break;
    }
  }
  const geom::Mat3 rel = geom::euler_zyx_rotation(new_theta, new_phi) *
                         geom::euler_zyx_rotation(out.theta, out.phi).transposed();
  for (auto& p : out.points) p = out.sphere.center + rel * (p - out.sphere.center);
  out.theta = new_theta;
  out.phi = new_phi;

  // global translation
  std::uniform_real_distribution<double> trans(-cfg.translation, cfg.translation);
  const Vec3 t{trans(rng), trans(rng), trans(rng)};
  for (auto& p : out.points) p += t;
  out.sphere.center += t;

  return out;
}

std::vector<LabeledSample> generate_dataset(const GenConfig& cfg, int count, std::uint64_t seed) {
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t sub = derive_seed(seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(sub);
    LabeledSample s = generate_sample(cfg, rng);
    s.seed = sub;
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::vector<LabeledSample>& samples,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  for (const auto& s : samples) out << to_json(s).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<LabeledSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<LabeledSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

}  // namespace fruitgrasp::synth
