#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace fruitgrasp::kernels {

// Hot inner-loop kernels used by the network and the classical fitters.
// Every entry has a scalar reference implementation and, on x86-64 with
// AVX2+FMA, a vectorized variant selected at runtime. The two variants are
// equivalence-tested against each other; reductions may differ by rounding
// only, element-independent kernels are bit-identical.
struct Ops {
  const char* name;

  /// Inner product of two length-n arrays.
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// y += alpha * x, length n.
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// Four inner products sharing one left operand: out[k] = a . b[k].
  /// Loads of `a` are amortized across the four streams.
  void (*dot4)(const double* a, const double* const b[4], std::size_t n, double out[4]);

  /// Fused accumulation y += sum_k alpha[k] * x[k], length n.
  void (*axpy4)(const double alpha[4], const double* const x[4], double* y, std::size_t n);

  /// Column-wise max and first-occurrence argmax of a row-major rows x cols
  /// matrix. Ties keep the lowest row index. rows >= 1.
  void (*colwise_max_argmax)(const double* m, std::size_t rows, std::size_t cols,
                             double* out_max, std::int32_t* out_arg);

  /// Number of interleaved xyz points with | |p - c| - radius | <= tol.
  std::size_t (*count_sphere_inliers)(const double* xyz, std::size_t n,
                                      const double center[3], double radius, double tol);
};

const Ops& scalar_ops();

/// True when the AVX2+FMA variant was compiled in and the CPU supports it.
bool avx2_available();
const Ops& avx2_ops();

/// The active backend. Resolved once: FRUITGRASP_KERNELS=scalar|avx2 wins,
/// otherwise CPU detection.
const Ops& active();

/// Override the active backend ("scalar", "avx2", "auto"). Throws on an
/// unknown name or when avx2 is requested but unavailable.
void force_backend(std::string_view name);

}  // namespace fruitgrasp::kernels
