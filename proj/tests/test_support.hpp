#pragma once

// Shared test-only helpers. The Monte-Carlo volume oracle is deliberately
// independent of the library's IoU implementation: it estimates the
// intersection and union volumes by uniform sampling over the union's
// bounding box.

#include <cstdint>
#include <random>

#include "fruitgrasp/geometry.hpp"

namespace testsupport {

using fruitgrasp::geom::Aabb3;
using fruitgrasp::geom::Point3;

// xorshift64* : fast enough to afford 1e6 samples per oracle call
struct FastRng {
  std::uint64_t state;
  explicit FastRng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next() {
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return state * 0x2545f4914f6cdd1dULL;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// IoU of two boxes by uniform sampling over the union's bounding box.
///
/// The sample coordinate along each axis is o + s * (k * 2^-53) with k the
/// top 53 bits of the generator; "coordinate inside [lo, hi]" is equivalent
/// to an integer test on k against precomputed thresholds (the map is
/// monotone), which keeps the 1e6-iteration loop in pure integer ops. Four
/// interleaved rng streams break the generator's serial dependency chain.
inline double mc_iou(const Aabb3& a, const Aabb3& b, std::uint64_t seed,
                     std::uint64_t samples = 1'000'000) {
  Aabb3 bbox;
  bbox.min = {std::min(a.min.x, b.min.x), std::min(a.min.y, b.min.y), std::min(a.min.z, b.min.z)};
  bbox.max = {std::max(a.max.x, b.max.x), std::max(a.max.y, b.max.y), std::max(a.max.z, b.max.z)};

  constexpr double kScale = 9007199254740992.0;  // 2^53
  struct AxisBand {
    std::uint64_t lo, hi;
  };
  auto band = [&](double o, double s, double lo, double hi) -> AxisBand {
    const double klo = std::ceil((lo - o) / s * kScale);
    const double khi = std::floor((hi - o) / s * kScale);
    return {static_cast<std::uint64_t>(std::max(0.0, klo)),
            static_cast<std::uint64_t>(std::min(kScale, khi))};
  };
  auto bands = [&](const Aabb3& box) -> std::array<AxisBand, 3> {
    return {band(bbox.min.x, bbox.max.x - bbox.min.x, box.min.x, box.max.x),
            band(bbox.min.y, bbox.max.y - bbox.min.y, box.min.y, box.max.y),
            band(bbox.min.z, bbox.max.z - bbox.min.z, box.min.z, box.max.z)};
  };
  const auto ba = bands(a);
  const auto bb = bands(b);

  FastRng lanes[4] = {FastRng(seed * 4 + 1), FastRng(seed * 4 + 2), FastRng(seed * 4 + 3),
                      FastRng(seed * 4 + 4)};
  std::uint64_t in_union = 0, in_inter = 0;
  auto in_band = [](const AxisBand& band, std::uint64_t k) -> int {
    return static_cast<int>(k >= band.lo) & static_cast<int>(k <= band.hi);
  };
  for (std::uint64_t i = 0; i < samples / 4; ++i) {
    for (int lane = 0; lane < 4; ++lane) {
      const std::uint64_t kx = lanes[lane].next() >> 11;
      const std::uint64_t ky = lanes[lane].next() >> 11;
      const std::uint64_t kz = lanes[lane].next() >> 11;
      const int ia = in_band(ba[0], kx) & in_band(ba[1], ky) & in_band(ba[2], kz);
      const int ib = in_band(bb[0], kx) & in_band(bb[1], ky) & in_band(bb[2], kz);
      in_union += static_cast<std::uint64_t>(ia | ib);
      in_inter += static_cast<std::uint64_t>(ia & ib);
    }
  }
  if (in_union == 0) return 0.0;
  return static_cast<double>(in_inter) / static_cast<double>(in_union);
}

/// Random box with half-extents in [0.05, 1] around a center in [-1, 1]^3.
inline Aabb3 random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> center(-1.0, 1.0);
  std::uniform_real_distribution<double> half(0.05, 1.0);
  const Point3 c{center(rng), center(rng), center(rng)};
  const Point3 h{half(rng), half(rng), half(rng)};
  return {c - h, c + h};
}

/// A second box correlated with the first so the pair usually overlaps.
inline Aabb3 nearby_box(const Aabb3& base, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shift(-0.5, 0.5);
  std::uniform_real_distribution<double> half(0.05, 1.0);
  const Point3 c = (base.min + base.max) / 2.0 + Point3{shift(rng), shift(rng), shift(rng)};
  const Point3 h{half(rng), half(rng), half(rng)};
  return {c - h, c + h};
}

}  // namespace testsupport
