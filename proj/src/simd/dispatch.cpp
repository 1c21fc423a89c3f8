#include <atomic>
#include <cstdlib>
#include <string>

#include "smswap/errors.hpp"
#include "smswap/simd/kernels.hpp"

namespace smswap::simd {

namespace {

std::atomic<Backend>& active_slot() {
  static std::atomic<Backend> slot{detect()};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

bool available(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(SMSWAP_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Backend detect() noexcept {
  if (const char* env = std::getenv("SMSWAP_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Backend::Scalar;
  }
  return available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

Backend active() noexcept { return active_slot().load(std::memory_order_relaxed); }

void set_active(Backend backend) {
  if (!available(backend)) {
    throw Error(ErrorKind::InvalidArgument, std::string("SIMD backend not available: ") + std::string(to_string(backend)));
  }
  active_slot().store(backend, std::memory_order_relaxed);
}

const KernelTable& kernels(Backend backend) {
  if (!available(backend)) {
    throw Error(ErrorKind::InvalidArgument, std::string("SIMD backend not available: ") + std::string(to_string(backend)));
  }
#if defined(SMSWAP_HAVE_AVX2)
  if (backend == Backend::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& kernels() noexcept {
#if defined(SMSWAP_HAVE_AVX2)
  if (active() == Backend::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace smswap::simd
