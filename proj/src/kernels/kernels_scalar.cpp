#include <cmath>
#include <cstddef>
#include <cstdint>

#include "fruitgrasp/kernels.hpp"

// Reference kernels. Plain loops, no manual unrolling; these define the
// semantics the vectorized variants are tested against.

namespace fruitgrasp::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void dot4_scalar(const double* a, const double* const b[4], std::size_t n, double out[4]) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ai = a[i];
    s0 += ai * b[0][i];
    s1 += ai * b[1][i];
    s2 += ai * b[2][i];
    s3 += ai * b[3][i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void axpy4_scalar(const double alpha[4], const double* const x[4], double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    y[i] += alpha[0] * x[0][i] + alpha[1] * x[1][i] + alpha[2] * x[2][i] + alpha[3] * x[3][i];
}

void colwise_max_argmax_scalar(const double* m, std::size_t rows, std::size_t cols,
                               double* out_max, std::int32_t* out_arg) {
  for (std::size_t c = 0; c < cols; ++c) {
    out_max[c] = m[c];
    out_arg[c] = 0;
  }
  for (std::size_t r = 1; r < rows; ++r) {
    const double* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) {
      if (row[c] > out_max[c]) {
        out_max[c] = row[c];
        out_arg[c] = static_cast<std::int32_t>(r);
      }
    }
  }
}

std::size_t count_sphere_inliers_scalar(const double* xyz, std::size_t n,
                                        const double center[3], double radius, double tol) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xyz[3 * i] - center[0];
    const double dy = xyz[3 * i + 1] - center[1];
    const double dz = xyz[3 * i + 2] - center[2];
    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (std::abs(d - radius) <= tol) ++count;
  }
  return count;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{"scalar",      dot_scalar,  axpy_scalar,
                       dot4_scalar,   axpy4_scalar, colwise_max_argmax_scalar,
                       count_sphere_inliers_scalar};
  return ops;
}

}  // namespace fruitgrasp::kernels
