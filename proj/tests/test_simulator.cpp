#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <vector>

#include "smswap/errors.hpp"
#include "smswap/generator.hpp"
#include "smswap/simulator.hpp"

using namespace smswap;

namespace {

SemiMarkovModel exp_model() {
  return SemiMarkovModel({{0, 1}, {1, 0}}, {SojournLaw::exponential(1.0), SojournLaw::exponential(1.0)});
}

SemiMarkovModel weibull_gamma() {
  return SemiMarkovModel({{0, 1}, {1, 0}}, {SojournLaw::weibull(2.0, 0.5), SojournLaw::gamma(2.0, 0.3)});
}

const auto kVol1 = VolatilityField::state_constant({0.1, 0.3});
const auto kVol2 = VolatilityField::state_constant({0.25, 0.15});
const auto kSwitch = CorrelationCurve::piecewise({0.5}, {0.8, 0.3});

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) {
    if (const char* old = std::getenv("SMSWAP_THREADS")) saved_ = old, had_ = true;
    setenv("SMSWAP_THREADS", value, 1);
  }
  ~ThreadsEnv() {
    if (had_) {
      setenv("SMSWAP_THREADS", saved_.c_str(), 1);
    } else {
      unsetenv("SMSWAP_THREADS");
    }
  }

 private:
  std::string saved_;
  bool had_ = false;
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

SwapContract variance_contract(double rate = 0.0) {
  SwapContract c;
  c.kind = SwapKind::Variance;
  c.rate = rate;
  return c;
}

}  // namespace

TEST(SamplePath, DeterministicSojourns) {
  const SemiMarkovModel m({{1.0}}, {SojournLaw::deterministic(0.5)});
  Rng rng(1);
  const auto path = sample_path(m, 0, 1.0, rng);
  ASSERT_EQ(path.jumps(), 2u);
  EXPECT_EQ(path.jump_times[1], 0.5);
  EXPECT_EQ(path.jump_times[2], 1.0);
  EXPECT_EQ(path.sojourn_at(0.5), 1u);
  EXPECT_EQ(path.recurrence_at(0.75), 0.25);
}

TEST(SamplePath, PoissonJumpCount) {
  const SemiMarkovModel m({{1.0}}, {SojournLaw::exponential(3.0)});
  const std::size_t n = 100000;
  std::vector<double> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_substream(17, i);
    counts[i] = static_cast<double>(sample_path(m, 0, 1.0, rng).jumps());
  }
  const auto est = summarize(counts);
  EXPECT_NEAR(est.mean, 3.0, 3.0 * est.standard_error);
}

TEST(SamplePath, LongRunOccupation) {
  // Alternating states: occupation fractions are proportional to mean sojourns.
  const auto m = weibull_gamma();
  const double m0 = 0.5 * std::tgamma(1.5), m1 = 2.0 * 0.3;
  std::vector<double> total(2, 0.0);
  const int paths = 50;
  for (int i = 0; i < paths; ++i) {
    Rng rng = make_substream(5, i);
    const auto occ = sample_path(m, 0, 200.0, rng).occupation_times(2);
    for (std::size_t x = 0; x < 2; ++x) total[x] += occ[x] / 200.0 / paths;
  }
  EXPECT_NEAR(total[0], m0 / (m0 + m1), 0.01);
  EXPECT_NEAR(total[0] + total[1], 1.0, 1e-12);
}

TEST(SamplePath, ExplosionIsReported) {
  const SemiMarkovModel m({{1.0}}, {SojournLaw::deterministic(5e-8)});
  Rng rng(3);
  try {
    sample_path(m, 0, 1.0, rng);
    FAIL() << "expected PathExplosion";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PathExplosion);
  }
}

TEST(SamplePath, OccupationMatchesDenseExponential) {
  const SemiMarkovModel m({{0, 0.3, 0.7}, {0.5, 0, 0.5}, {0.9, 0.1, 0}},
                          {SojournLaw::exponential(1.5), SojournLaw::exponential(0.8), SojournLaw::exponential(2.5)});
  const auto q = build_generator(m, RecurrenceGrid::covering(m, 300));
  const double t = 0.7;
  const auto e = expm_dense(q, t);
  const std::size_t origin = q.shape().index(0, 0);
  const std::size_t n = 100000;
  std::vector<std::vector<double>> hits(3, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_substream(41, i);
    hits[sample_path(m, 0, 1.0, rng).state_at(t)][i] = 1.0;
  }
  for (std::size_t y = 0; y < 3; ++y) {
    double p = 0.0;
    for (std::size_t g = 0; g < q.shape().nodes; ++g) p += e(origin, q.shape().index(y, g));
    const auto est = summarize(hits[y]);
    EXPECT_NEAR(est.mean, p, 3.0 * est.standard_error) << "state " << y;
  }
}

TEST(RealizedVariance, PiecewiseConstantPaths) {
  MrpPath path{1.0, {0.0, 0.3}, {0, 1}};
  EXPECT_NEAR(realized_variance_path(path, VolatilityField::state_constant({0.2, 0.2})), 0.04, 1e-15);
  EXPECT_NEAR(realized_variance_path(path, kVol1), 0.3 * 0.01 + 0.7 * 0.09, 1e-15);
}

TEST(RealizedVariance, LinearInRecurrenceTime) {
  const double a = 0.1, b = 0.2, d = 1.5;
  const auto field = VolatilityField::gridded({0.0, 2.0}, {{a, a + 2.0 * b}});
  MrpPath path{d, {0.0}, {0}};
  const double exact = (a * a * d + a * b * d * d + b * b * d * d * d / 3.0) / d;
  EXPECT_NEAR(realized_variance_path(path, field), exact, 1e-12);

  // A knot inside the sojourn splits the Simpson pieces.
  const auto kinked = VolatilityField::gridded({0.0, 0.5, 2.0}, {{0.1, 0.3, 0.0}});
  // sigma = 0.1 + 0.4 g on [0, 0.5], then 0.3 - 0.2 (g - 0.5).
  const double left = 0.01 * 0.5 + 0.1 * 0.4 * 0.25 + 0.16 * 0.125 / 3.0;
  const double right = 0.09 - 0.3 * 0.2 + 0.04 / 3.0;
  const double by_hand = (left + right) / d;
  EXPECT_NEAR(realized_variance_path(path, kinked), by_hand, 1e-12);
}

TEST(RealizedCovariance, ReducesToVarianceAndZero) {
  Rng rng = make_substream(8, 0);
  const auto path = sample_path(weibull_gamma(), 0, 1.0, rng);
  EXPECT_NEAR(realized_covariance_path(path, kVol1, kVol1, CorrelationCurve::constant(1.0)),
              realized_variance_path(path, kVol1), 1e-15);
  EXPECT_EQ(realized_covariance_path(path, kVol1, kVol2, CorrelationCurve::constant(0.0)), 0.0);
}

TEST(RealizedCovariance, PolarizationIdentity) {
  const auto m = weibull_gamma();
  const auto g1 = VolatilityField::gridded({0.0, 0.4, 1.0}, {{0.1, 0.35, 0.2}, {0.3, 0.1, 0.25}});
  for (std::size_t i = 0; i < 200; ++i) {
    Rng rng = make_substream(12, i);
    const auto path = sample_path(m, i % 2, 1.3, rng);
    const double plus = realized_quadratic_variation_path(path, g1, kVol2, kSwitch, +1);
    const double minus = realized_quadratic_variation_path(path, g1, kVol2, kSwitch, -1);
    EXPECT_NEAR(0.25 * (plus - minus), realized_covariance_path(path, g1, kVol2, kSwitch), 1e-12);
  }
}

TEST(SimulateAssets, CorrelationOfReturns) {
  const SemiMarkovModel m({{1.0}}, {SojournLaw::exponential(1.0)});
  const auto flat = VolatilityField::state_constant({0.2});
  const auto flat2 = VolatilityField::state_constant({0.3});
  Rng rng = make_substream(21, 0);
  const auto path = sample_path(m, 0, 10000.0, rng);
  const std::size_t n = 100000;
  const auto a = simulate_assets(path, flat, flat2, CorrelationCurve::constant(0.6), 0.05, n, rng);
  const double corr = discrete_correlation(a.log_price1, a.log_price2);
  EXPECT_NEAR(corr, 0.6, 3.0 * (1.0 - 0.36) / std::sqrt(static_cast<double>(n)));
  // Drift of log S1 is r - sigma^2 / 2 with standard error sigma / sqrt(T).
  EXPECT_NEAR(a.log_price1.back() / 10000.0, 0.05 - 0.02, 3.0 * 0.2 / 100.0);
  EXPECT_NEAR(a.log_price2.back() / 10000.0, 0.05 - 0.045, 3.0 * 0.3 / 100.0);
}

TEST(SimulateAssets, RejectsZeroSteps) {
  MrpPath path{1.0, {0.0}, {0}};
  Rng rng(1);
  EXPECT_THROW(simulate_assets(path, kVol1, kVol2, kSwitch, 0.0, 0, rng), Error);
}

TEST(DiscreteEstimators, ConvergeAtMonteCarloRate) {
  const auto m = exp_model();
  const std::vector<std::size_t> steps{100, 400, 1600, 6400};
  const std::size_t reps = 300;
  std::vector<double> rms_cov, rms_corr;
  for (std::size_t n : steps) {
    double sc = 0.0, sr = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
      Rng rng = make_substream(77, i);
      const auto path = sample_path(m, 0, 1.0, rng);
      const auto a = simulate_assets(path, kVol1, kVol2, kSwitch, 0.0, n, rng);
      const double cov = realized_covariance_path(path, kVol1, kVol2, kSwitch);
      const double corr =
          cov / std::sqrt(realized_variance_path(path, kVol1) * realized_variance_path(path, kVol2));
      const double dc = discrete_covariance(a.log_price1, a.log_price2, 1.0) - cov;
      const double dr = discrete_correlation(a.log_price1, a.log_price2) - corr;
      sc += dc * dc;
      sr += dr * dr;
    }
    rms_cov.push_back(std::sqrt(sc / reps));
    rms_corr.push_back(std::sqrt(sr / reps));
  }
  auto slope = [&](const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      lx.push_back(std::log(static_cast<double>(steps[k])));
      ly.push_back(std::log(y[k]));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      num += (lx[k] - mx) * (ly[k] - my);
      den += (lx[k] - mx) * (lx[k] - mx);
    }
    return num / den;
  };
  EXPECT_NEAR(slope(rms_cov), -0.5, 0.1);
  EXPECT_NEAR(slope(rms_corr), -0.5, 0.1);
}

TEST(DiscreteEstimators, UncenteredScaling) {
  const std::vector<double> x{0.0, 0.1, 0.3, 0.2};
  const std::vector<double> y{0.0, -0.1, 0.1, 0.4};
  // Returns (0.1, 0.2, -0.1) and (-0.1, 0.2, 0.3).
  const double sum = -0.01 + 0.04 - 0.03;
  EXPECT_NEAR(discrete_covariance(x, y, 2.0), 3.0 / (2.0 * 2.0) * sum, 1e-15);
  EXPECT_NEAR(discrete_variance(x, 2.0), 3.0 / 4.0 * (0.01 + 0.04 + 0.01), 1e-15);
  EXPECT_NEAR(discrete_correlation(x, y), sum / std::sqrt(0.06 * (0.01 + 0.04 + 0.09)), 1e-14);
}

TEST(EstimateSwap, ConstantVolatilityHasNoNoise) {
  const auto m = weibull_gamma();
  const auto flat = VolatilityField::state_constant({0.2, 0.2});
  auto c = variance_contract(0.05);
  c.strike = 0.03;
  const auto est = estimate_swap(m, 0, c, flat, nullptr, nullptr, 1000, 4);
  EXPECT_NEAR(est.mean, std::exp(-0.05) * 0.01, 1e-15);
  EXPECT_NEAR(est.standard_error, 0.0, 1e-15);
  EXPECT_THROW(estimate_swap(m, 0, c, flat, nullptr, nullptr, 999, 4), Error);
}

TEST(EstimateSwap, TwoStateExponentialVarianceSwap) {
  const auto m = exp_model();
  const auto est = estimate_swap(m, 0, variance_contract(), kVol1, nullptr, nullptr, 100000, 9);
  const double exact = 0.05 - 0.04 * (1.0 - std::exp(-2.0)) / 2.0;
  EXPECT_NEAR(est.mean, exact, 3.0 * est.standard_error);
}

TEST(EstimateSwap, SquareRootBelowMeanVariance) {
  const auto m = exp_model();
  auto c = variance_contract();
  c.kind = SwapKind::Volatility;
  const auto vol = estimate_swap(m, 0, c, kVol1, nullptr, nullptr, 20000, 9);
  const auto var = estimate_swap(m, 0, variance_contract(), kVol1, nullptr, nullptr, 20000, 9);
  EXPECT_LT(vol.mean, std::sqrt(var.mean));
}

TEST(EstimateSwap, ReproducibleAcrossWorkerCounts) {
  const auto m = weibull_gamma();
  SwapContract c;
  c.kind = SwapKind::Correlation;
  McEstimate one, three, again;
  {
    ThreadsEnv env("1");
    one = estimate_swap(m, 0, c, kVol1, &kVol2, &kSwitch, 5000, 123);
  }
  {
    ThreadsEnv env("3");
    three = estimate_swap(m, 0, c, kVol1, &kVol2, &kSwitch, 5000, 123);
    again = estimate_swap(m, 0, c, kVol1, &kVol2, &kSwitch, 5000, 123);
  }
  EXPECT_TRUE(same_bits(one.mean, three.mean));
  EXPECT_TRUE(same_bits(one.standard_error, three.standard_error));
  EXPECT_TRUE(same_bits(three.mean, again.mean));
  EXPECT_EQ(one.seed, 123u);
  EXPECT_EQ(one.n_paths, 5000u);
}

TEST(EstimateSwap, DisjointSeedsAgree) {
  const auto m = weibull_gamma();
  SwapContract c;
  c.kind = SwapKind::Covariance;
  const auto a = estimate_swap(m, 0, c, kVol1, &kVol2, &kSwitch, 20000, 1);
  const auto b = estimate_swap(m, 0, c, kVol1, &kVol2, &kSwitch, 20000, 2);
  EXPECT_NE(a.mean, b.mean);
  EXPECT_LT(std::abs(a.mean - b.mean), 4.0 * std::hypot(a.standard_error, b.standard_error));
}

TEST(Summaries, KnownValues) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(v, 5);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.standard_error, std::sqrt(5.0 / 3.0 / 4.0));
  EXPECT_EQ(s.seed, 5u);
  EXPECT_THROW(summarize(std::vector<double>{1.0}), Error);
  const auto sv = summarize_variance(v);
  EXPECT_DOUBLE_EQ(sv.variance, 5.0 / 3.0);
  EXPECT_GT(sv.standard_error, 0.0);
}

TEST(Martingale, ConstantFunctionIsZero) {
  const auto m = weibull_gamma();
  const auto q = build_generator(m, RecurrenceGrid::covering(m, 200));
  const auto check = martingale_check(m, 0, q, GridFunction::constant(q.shape(), 0.7), {0.25, 1.0}, 1000, 3);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(check.means[k], 0.0);
    EXPECT_EQ(check.standard_errors[k], 0.0);
  }
}

TEST(Martingale, SquaredVolatilityOnExponentialModel) {
  const auto m = exp_model();
  const auto q = build_generator(m, RecurrenceGrid::covering(m, 400));
  const auto s2 = GridFunction::from_field(q.shape(), kVol1, 2);
  const auto check = martingale_check(m, 0, q, s2, {0.25, 0.5, 1.0}, 100000, 11);
  ASSERT_EQ(check.z_scores.size(), 3u);
  for (double z : check.z_scores) EXPECT_LT(std::abs(z), 3.0);
}
