#pragma once

#include <cstddef>
#include <string_view>

// Inner loops of the generator product and the time steppers. Every backend
// evaluates the same expression tree per element with no fused multiply-add,
// so all backends agree bit for bit with the scalar reference.

namespace smswap::simd {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend) noexcept;

struct KernelTable {
  /// out[j] = inv_h*(f[j+1]-f[j]) + rate[j]*(renewal - f[j]) for j < n-1,
  /// out[n-1] = rate[n-1]*(renewal - f[n-1]).
  void (*transport_renewal)(const double* f, const double* rate, double inv_h, double renewal, double* out,
                            std::size_t n);
  /// out[i] = x[i] + a*y[i]   (out may alias x)
  void (*axpy)(double* out, const double* x, double a, const double* y, std::size_t n);
  /// u[i] += (dt/6)*((k1[i]+k4[i]) + 2*(k2[i]+k3[i]))
  void (*rk4_combine)(double* u, const double* k1, const double* k2, const double* k3, const double* k4, double dt,
                      std::size_t n);
  /// out[i] = a[i]*b[i]
  void (*multiply)(double* out, const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;
#if defined(SMSWAP_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif

/// True when the backend was compiled in and the CPU supports it.
bool available(Backend backend) noexcept;

/// Best available backend, unless SMSWAP_SIMD=scalar is set in the environment.
Backend detect() noexcept;

Backend active() noexcept;

/// Throws InvalidArgument if the backend is not available.
void set_active(Backend backend);

const KernelTable& kernels() noexcept;
const KernelTable& kernels(Backend backend);

}  // namespace smswap::simd
