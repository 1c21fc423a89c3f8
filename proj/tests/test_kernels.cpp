#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <vector>

#include "smswap/generator.hpp"
#include "smswap/simd/kernels.hpp"

using namespace smswap;
using simd::Backend;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

class BackendRestore : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!simd::available(Backend::Avx2)) GTEST_SKIP() << "AVX2 backend not available";
    saved_ = simd::active();
  }
  void TearDown() override {
    if (simd::available(Backend::Avx2)) simd::set_active(saved_);
  }
  Backend saved_ = Backend::Scalar;
};

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 1001};

}  // namespace

TEST(Kernels, ScalarTransportMatchesFormula) {
  const std::vector<double> f{1.0, 3.0, 2.0, 5.0};
  const std::vector<double> rate{0.5, 1.0, 2.0, 4.0};
  std::vector<double> out(4);
  simd::scalar_kernels().transport_renewal(f.data(), rate.data(), 10.0, 1.5, out.data(), 4);
  EXPECT_DOUBLE_EQ(out[0], 10.0 * 2.0 + 0.5 * 0.5);
  EXPECT_DOUBLE_EQ(out[1], 10.0 * -1.0 + 1.0 * -1.5);
  EXPECT_DOUBLE_EQ(out[2], 10.0 * 3.0 + 2.0 * -0.5);
  EXPECT_DOUBLE_EQ(out[3], 4.0 * -3.5);
}

TEST_F(BackendRestore, TransportRenewalBitIdentical) {
  std::mt19937_64 rng(11);
  for (std::size_t n : kSizes) {
    const auto f = random_vector(n, rng);
    const auto rate = random_vector(n, rng, 0.0, 5.0);
    std::vector<double> a(n), b(n);
    if (n > 0) {
      simd::kernels(Backend::Scalar).transport_renewal(f.data(), rate.data(), 123.4, 0.7, a.data(), n);
      simd::kernels(Backend::Avx2).transport_renewal(f.data(), rate.data(), 123.4, 0.7, b.data(), n);
    }
    EXPECT_TRUE(same_bits(a, b)) << "n = " << n;
  }
}

TEST_F(BackendRestore, AxpyBitIdenticalIncludingAliasing) {
  std::mt19937_64 rng(12);
  for (std::size_t n : kSizes) {
    const auto x = random_vector(n, rng);
    const auto y = random_vector(n, rng);
    std::vector<double> a(n), b(n);
    simd::kernels(Backend::Scalar).axpy(a.data(), x.data(), 0.37, y.data(), n);
    simd::kernels(Backend::Avx2).axpy(b.data(), x.data(), 0.37, y.data(), n);
    EXPECT_TRUE(same_bits(a, b)) << "n = " << n;
    auto in_place = x;
    simd::kernels(Backend::Avx2).axpy(in_place.data(), in_place.data(), 0.37, y.data(), n);
    EXPECT_TRUE(same_bits(a, in_place)) << "n = " << n;
  }
}

TEST_F(BackendRestore, Rk4CombineAndMultiplyBitIdentical) {
  std::mt19937_64 rng(13);
  for (std::size_t n : kSizes) {
    const auto k1 = random_vector(n, rng), k2 = random_vector(n, rng);
    const auto k3 = random_vector(n, rng), k4 = random_vector(n, rng);
    auto ua = random_vector(n, rng);
    auto ub = ua;
    simd::kernels(Backend::Scalar).rk4_combine(ua.data(), k1.data(), k2.data(), k3.data(), k4.data(), 1e-3, n);
    simd::kernels(Backend::Avx2).rk4_combine(ub.data(), k1.data(), k2.data(), k3.data(), k4.data(), 1e-3, n);
    EXPECT_TRUE(same_bits(ua, ub)) << "n = " << n;

    std::vector<double> ma(n), mb(n);
    simd::kernels(Backend::Scalar).multiply(ma.data(), k1.data(), k2.data(), n);
    simd::kernels(Backend::Avx2).multiply(mb.data(), k1.data(), k2.data(), n);
    EXPECT_TRUE(same_bits(ma, mb)) << "n = " << n;
  }
}

TEST_F(BackendRestore, PropagationBitIdenticalAcrossBackends) {
  const SemiMarkovModel model({{0.0, 1.0}, {1.0, 0.0}}, {SojournLaw::weibull(2.0, 0.5), SojournLaw::gamma(2.0, 0.3)});
  const auto q = build_generator(model, RecurrenceGrid::covering(model, 301));
  const auto f = GridFunction::sample(q.shape(), [](std::size_t x, double g) { return (x + 1.0) * (0.1 + g * g); });

  simd::set_active(Backend::Scalar);
  const auto a = propagate(q, f, 0.7);
  simd::set_active(Backend::Avx2);
  const auto b = propagate(q, f, 0.7);
  const std::vector<double> va(a.values().begin(), a.values().end());
  const std::vector<double> vb(b.values().begin(), b.values().end());
  EXPECT_TRUE(same_bits(va, vb));
}

TEST(Kernels, DispatchReportsScalarAlwaysAvailable) {
  EXPECT_TRUE(simd::available(Backend::Scalar));
  EXPECT_NO_THROW(simd::kernels(Backend::Scalar));
  EXPECT_EQ(simd::to_string(Backend::Scalar), "scalar");
}
