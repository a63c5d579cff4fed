#include "fruitgrasp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace fruitgrasp::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(FRUITGRASP_HAVE_AVX2) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* detect() {
  if (const char* env = std::getenv("FRUITGRASP_KERNELS")) {
    const std::string v{env};
    if (v == "scalar") return &scalar_ops();
    if (v == "avx2" && avx2_available()) return &avx2_ops();
    // anything else (including unavailable avx2) falls through to detection
  }
  return avx2_available() ? &avx2_ops() : &scalar_ops();
}

std::atomic<const Ops*> g_active{nullptr};

}  // namespace

bool avx2_available() {
#if defined(FRUITGRASP_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok;
#else
  return false;
#endif
}

const Ops& active() {
  const Ops* ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = detect();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_ops(), std::memory_order_release);
  } else if (name == "avx2") {
    if (!avx2_available()) throw std::runtime_error("avx2 kernels unavailable on this host");
    g_active.store(&avx2_ops(), std::memory_order_release);
  } else if (name == "auto") {
    g_active.store(detect(), std::memory_order_release);
  } else {
    throw std::runtime_error("unknown kernel backend: " + std::string(name));
  }
}

}  // namespace fruitgrasp::kernels
