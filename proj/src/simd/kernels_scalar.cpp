#include "smswap/simd/kernels.hpp"

namespace smswap::simd {

namespace {

void transport_renewal(const double* f, const double* rate, double inv_h, double renewal, double* out,
                       std::size_t n) {
  if (n == 0) return;
  const std::size_t last = n - 1;
  for (std::size_t j = 0; j < last; ++j) {
    const double transport = inv_h * (f[j + 1] - f[j]);
    const double renew = rate[j] * (renewal - f[j]);
    out[j] = transport + renew;
  }
  out[last] = rate[last] * (renewal - f[last]);
}

void axpy(double* out, const double* x, double a, const double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}

void rk4_combine(double* u, const double* k1, const double* k2, const double* k3, const double* k4, double dt,
                 std::size_t n) {
  const double w = dt / 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double outer = k1[i] + k4[i];
    const double inner = k2[i] + k3[i];
    u[i] = u[i] + w * (outer + 2.0 * inner);
  }
}

void multiply(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

constexpr KernelTable kTable{transport_renewal, axpy, rk4_combine, multiply};

}  // namespace

const KernelTable& scalar_kernels() noexcept { return kTable; }

}  // namespace smswap::simd
