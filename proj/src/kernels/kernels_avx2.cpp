#include "fruitgrasp/kernels.hpp"

// AVX2+FMA variants, 4 doubles per vector. This translation unit is compiled
// with -mavx2 -mfma and must only be entered after a runtime CPU check.

#if defined(FRUITGRASP_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace fruitgrasp::kernels {
namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double s = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void dot4_avx2(const double* a, const double* const b[4], std::size_t n, double out[4]) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[0] + i), acc0);
    acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[1] + i), acc1);
    acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[2] + i), acc2);
    acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b[3] + i), acc3);
  }
  // horizontal sums: transpose the four accumulators and add
  const __m256d t0 = _mm256_hadd_pd(acc0, acc1);
  const __m256d t1 = _mm256_hadd_pd(acc2, acc3);
  const __m256d swapped = _mm256_permute2f128_pd(t0, t1, 0x21);
  const __m256d blended = _mm256_blend_pd(t0, t1, 0b1100);
  __m256d sums = _mm256_add_pd(swapped, blended);
  double tmp[4];
  _mm256_storeu_pd(tmp, sums);
  for (; i < n; ++i) {
    const double ai = a[i];
    tmp[0] += ai * b[0][i];
    tmp[1] += ai * b[1][i];
    tmp[2] += ai * b[2][i];
    tmp[3] += ai * b[3][i];
  }
  out[0] = tmp[0];
  out[1] = tmp[1];
  out[2] = tmp[2];
  out[3] = tmp[3];
}

void axpy4_avx2(const double alpha[4], const double* const x[4], double* y, std::size_t n) {
  const __m256d a0 = _mm256_set1_pd(alpha[0]);
  const __m256d a1 = _mm256_set1_pd(alpha[1]);
  const __m256d a2 = _mm256_set1_pd(alpha[2]);
  const __m256d a3 = _mm256_set1_pd(alpha[3]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    acc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(x[0] + i), acc);
    acc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(x[1] + i), acc);
    acc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(x[2] + i), acc);
    acc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(x[3] + i), acc);
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < n; ++i)
    y[i] += alpha[0] * x[0][i] + alpha[1] * x[1][i] + alpha[2] * x[2][i] + alpha[3] * x[3][i];
}

void colwise_max_argmax_avx2(const double* m, std::size_t rows, std::size_t cols,
                             double* out_max, std::int32_t* out_arg) {
  std::size_t c = 0;
  for (; c + 4 <= cols; c += 4) {
    __m256d best = _mm256_loadu_pd(m + c);
    __m256d bestidx = _mm256_setzero_pd();
    for (std::size_t r = 1; r < rows; ++r) {
      const __m256d v = _mm256_loadu_pd(m + r * cols + c);
      // strictly-greater update keeps the first row on ties
      const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
      best = _mm256_blendv_pd(best, v, gt);
      bestidx = _mm256_blendv_pd(bestidx, _mm256_set1_pd(static_cast<double>(r)), gt);
    }
    double idx[4];
    _mm256_storeu_pd(out_max + c, best);
    _mm256_storeu_pd(idx, bestidx);
    for (int k = 0; k < 4; ++k) out_arg[c + k] = static_cast<std::int32_t>(idx[k]);
  }
  for (; c < cols; ++c) {
    double best = m[c];
    std::int32_t arg = 0;
    for (std::size_t r = 1; r < rows; ++r) {
      const double v = m[r * cols + c];
      if (v > best) {
        best = v;
        arg = static_cast<std::int32_t>(r);
      }
    }
    out_max[c] = best;
    out_arg[c] = arg;
  }
}

std::size_t count_sphere_inliers_avx2(const double* xyz, std::size_t n,
                                      const double center[3], double radius, double tol) {
  const __m256d cx = _mm256_set1_pd(center[0]);
  const __m256d cy = _mm256_set1_pd(center[1]);
  const __m256d cz = _mm256_set1_pd(center[2]);
  const __m256d vr = _mm256_set1_pd(radius);
  const __m256d vtol = _mm256_set1_pd(tol);
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // de-interleave 4 xyz triplets
    const double* p = xyz + 3 * i;
    const __m256d x = _mm256_set_pd(p[9], p[6], p[3], p[0]);
    const __m256d y = _mm256_set_pd(p[10], p[7], p[4], p[1]);
    const __m256d z = _mm256_set_pd(p[11], p[8], p[5], p[2]);
    const __m256d dx = _mm256_sub_pd(x, cx);
    const __m256d dy = _mm256_sub_pd(y, cy);
    const __m256d dz = _mm256_sub_pd(z, cz);
    __m256d d2 = _mm256_mul_pd(dx, dx);
    d2 = _mm256_fmadd_pd(dy, dy, d2);
    d2 = _mm256_fmadd_pd(dz, dz, d2);
    const __m256d res = _mm256_and_pd(_mm256_sub_pd(_mm256_sqrt_pd(d2), vr), absmask);
    const __m256d ok = _mm256_cmp_pd(res, vtol, _CMP_LE_OQ);
    count += static_cast<std::size_t>(__builtin_popcount(
        static_cast<unsigned>(_mm256_movemask_pd(ok))));
  }
  for (; i < n; ++i) {
    const double dx = xyz[3 * i] - center[0];
    const double dy = xyz[3 * i + 1] - center[1];
    const double dz = xyz[3 * i + 2] - center[2];
    double d2 = dx * dx;
    d2 = std::fma(dy, dy, d2);
    d2 = std::fma(dz, dz, d2);
    if (std::abs(std::sqrt(d2) - radius) <= tol) ++count;
  }
  return count;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{"avx2",     dot_avx2,   axpy_avx2,
                       dot4_avx2,  axpy4_avx2, colwise_max_argmax_avx2,
                       count_sphere_inliers_avx2};
  return ops;
}

}  // namespace fruitgrasp::kernels

#else

namespace fruitgrasp::kernels {

const Ops& avx2_ops() { return scalar_ops(); }

}  // namespace fruitgrasp::kernels

#endif
