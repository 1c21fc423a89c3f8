// Compiled with -mavx2 only. Selected at runtime after a CPU check.
#include <immintrin.h>

#include "smswap/simd/kernels.hpp"

namespace smswap::simd {

namespace {

void transport_renewal(const double* f, const double* rate, double inv_h, double renewal, double* out,
                       std::size_t n) {
  if (n == 0) return;
  const std::size_t last = n - 1;
  const __m256d vh = _mm256_set1_pd(inv_h);
  const __m256d vr = _mm256_set1_pd(renewal);
  std::size_t j = 0;
  for (; j + 4 <= last; j += 4) {
    const __m256d fj = _mm256_loadu_pd(f + j);
    const __m256d fn = _mm256_loadu_pd(f + j + 1);
    const __m256d lam = _mm256_loadu_pd(rate + j);
    const __m256d transport = _mm256_mul_pd(vh, _mm256_sub_pd(fn, fj));
    const __m256d renew = _mm256_mul_pd(lam, _mm256_sub_pd(vr, fj));
    _mm256_storeu_pd(out + j, _mm256_add_pd(transport, renew));
  }
  for (; j < last; ++j) {
    const double transport = inv_h * (f[j + 1] - f[j]);
    const double renew = rate[j] * (renewal - f[j]);
    out[j] = transport + renew;
  }
  out[last] = rate[last] * (renewal - f[last]);
}

void axpy(double* out, const double* x, double a, const double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), prod));
  }
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

void rk4_combine(double* u, const double* k1, const double* k2, const double* k3, const double* k4, double dt,
                 std::size_t n) {
  const double w = dt / 6.0;
  const __m256d vw = _mm256_set1_pd(w);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d outer = _mm256_add_pd(_mm256_loadu_pd(k1 + i), _mm256_loadu_pd(k4 + i));
    const __m256d inner = _mm256_add_pd(_mm256_loadu_pd(k2 + i), _mm256_loadu_pd(k3 + i));
    const __m256d incr = _mm256_mul_pd(vw, _mm256_add_pd(outer, _mm256_mul_pd(two, inner)));
    _mm256_storeu_pd(u + i, _mm256_add_pd(_mm256_loadu_pd(u + i), incr));
  }
  for (; i < n; ++i) {
    const double outer = k1[i] + k4[i];
    const double inner = k2[i] + k3[i];
    u[i] = u[i] + w * (outer + 2.0 * inner);
  }
}

void multiply(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

constexpr KernelTable kTable{transport_renewal, axpy, rk4_combine, multiply};

}  // namespace

const KernelTable& avx2_kernels() noexcept { return kTable; }

}  // namespace smswap::simd
