#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "smswap/errors.hpp"
#include "smswap/pricing.hpp"
#include "smswap/simulator.hpp"

using namespace smswap;

namespace {

SemiMarkovModel exp_model(double rate = 1.0) {
  return SemiMarkovModel({{0, 1}, {1, 0}}, {SojournLaw::exponential(rate), SojournLaw::exponential(rate)});
}

SemiMarkovModel weibull_gamma() {
  return SemiMarkovModel({{0, 1}, {1, 0}}, {SojournLaw::weibull(2.0, 0.5), SojournLaw::gamma(2.0, 0.3)});
}

SwapContract contract(SwapKind kind, double strike = 0.0, double rate = 0.0, double T = 1.0, double notional = 1.0) {
  SwapContract c;
  c.kind = kind;
  c.maturity = T;
  c.rate = rate;
  c.strike = strike;
  c.notional = notional;
  return c;
}

SwapPricer pricer(const SemiMarkovModel& m, std::size_t nodes = 400, std::size_t time_nodes = 64) {
  return SwapPricer(m, 0, NumericalSettings::covering(m, nodes, time_nodes));
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no smswap::Error thrown";
  return ErrorKind::Io;
}

const auto kFlat = VolatilityField::state_constant({0.2, 0.2});
const auto kVol1 = VolatilityField::state_constant({0.1, 0.3});
const auto kVol2 = VolatilityField::state_constant({0.25, 0.15});
const auto kSwitch = CorrelationCurve::piecewise({0.5}, {0.8, 0.3});

struct Case {
  SwapKind kind;
  PricingMethod method;
};

const Case kCases[] = {
    {SwapKind::Variance, PricingMethod::Exact},        {SwapKind::Variance, PricingMethod::FirstOrder},
    {SwapKind::Volatility, PricingMethod::Exact},      {SwapKind::Volatility, PricingMethod::FirstOrder},
    {SwapKind::Covariance, PricingMethod::Exact},      {SwapKind::Covariance, PricingMethod::FirstOrder},
    {SwapKind::Correlation, PricingMethod::Exact},     {SwapKind::Correlation, PricingMethod::FirstOrder},
    {SwapKind::Correlation, PricingMethod::Corrected},
};

PricingReport price_case(const SwapPricer& p, const Case& c, const SwapContract& k) {
  return p.price(k, c.method, kVol1, &kVol2, &kSwitch);
}

}  // namespace

TEST(VarianceSwap, ConstantVolatilityClosedForms) {
  const auto m = weibull_gamma();
  const auto p = pricer(m);
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    EXPECT_NEAR(p.variance_swap(kFlat, contract(SwapKind::Variance, 0.04), method).price, 0.0, 1e-12);
    EXPECT_NEAR(p.variance_swap(kFlat, contract(SwapKind::Variance, 0.03, 0.05), method).price,
                std::exp(-0.05) * 0.01, 1e-12);
  }
  EXPECT_NEAR(std::exp(-0.05) * 0.01, 0.0095123, 1e-7);
}

TEST(VarianceSwap, FirstOrderTwoStateExponential) {
  // Unit-rate switching: Q sigma^2 at the origin of state 0 is 0.09 - 0.01.
  const auto p = pricer(exp_model());
  const auto r = p.variance_swap(kVol1, contract(SwapKind::Variance), PricingMethod::FirstOrder);
  EXPECT_NEAR(r.intermediates.at("generator_variance_at_origin"), 0.08, 1e-12);
  EXPECT_NEAR(r.price, 0.01 + 0.5 * 0.08, 1e-12);
}

TEST(VolatilitySwap, ConstantVolatilityHasNoConvexity) {
  const auto p = pricer(weibull_gamma());
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    const auto r = p.volatility_swap(kFlat, contract(SwapKind::Volatility, 0.1), method);
    EXPECT_NEAR(r.price, 0.1, 1e-12);
    EXPECT_NEAR(r.intermediates.at("convexity_adjustment"), 0.0, 1e-12);
    EXPECT_FALSE(r.flags.at("expansion_untrusted"));
  }
}

TEST(VolatilitySwap, FirstOrderTwoStateExponential) {
  const auto p = pricer(exp_model());
  const auto r = p.volatility_swap(kVol1, contract(SwapKind::Volatility), PricingMethod::FirstOrder);
  const double mean = 0.05;
  const double var = (0.0081 - 0.0001 - 2.0 * 0.01 * 0.08) / 3.0;
  EXPECT_NEAR(r.intermediates.at("variance_of_realized_variance"), var, 1e-12);
  EXPECT_NEAR(r.price, std::sqrt(mean) - var / (8.0 * std::pow(mean, 1.5)), 1e-12);
}

TEST(VolatilitySwap, ZeroVarianceReducesToSquareRoot) {
  const auto p = pricer(weibull_gamma());
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    auto r = p.volatility_swap(kVol1, contract(SwapKind::Volatility, 0.12, 0.03), method);
    if (method == PricingMethod::FirstOrder) {
      r.intermediates["generator_fourth_at_origin"] =
          2.0 * r.intermediates.at("variance_at_origin") * r.intermediates.at("generator_variance_at_origin");
    } else {
      r.intermediates["variance_of_realized_variance"] = 0.0;
    }
    const double mean = r.intermediates.at("mean_realized_variance");
    EXPECT_NEAR(recompute_price(r), std::exp(-0.03) * (std::sqrt(mean) - 0.12), 1e-14);
  }
}

TEST(VolatilitySwap, DegenerateMean) {
  const auto p = pricer(weibull_gamma());
  const auto zero = VolatilityField::state_constant({0.0, 0.0});
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    EXPECT_EQ(kind_of([&] { p.volatility_swap(zero, contract(SwapKind::Volatility), method); }),
              ErrorKind::DegenerateMean);
  }
  EXPECT_EQ(kind_of([&] { p.correlation_swap_zero_order(zero, kVol2, kSwitch, contract(SwapKind::Correlation)); }),
            ErrorKind::DegenerateMean);
}

TEST(VolatilitySwap, FlagsUntrustedExpansion) {
  const auto m = exp_model(0.5);
  const auto p = pricer(m);
  const auto wide = VolatilityField::state_constant({0.01, 1.0});
  const auto r = p.volatility_swap(wide, contract(SwapKind::Volatility), PricingMethod::FirstOrder);
  EXPECT_GT(r.diagnostics.at("variance_to_squared_mean"), 0.25);
  EXPECT_TRUE(r.flags.at("expansion_untrusted"));
  EXPECT_FALSE(r.notes.empty());
  const auto mild = VolatilityField::state_constant({0.2, 0.25});
  EXPECT_FALSE(p.volatility_swap(mild, contract(SwapKind::Volatility)).flags.at("expansion_untrusted"));
}

TEST(VolatilitySwap, AgreesWithSimulationWithinExpansionBudget) {
  const auto m = exp_model();
  const auto p = pricer(m, 2000, 128);
  const auto c = contract(SwapKind::Volatility);
  const auto r = p.volatility_swap(kVol1, c);
  const double mean = r.intermediates.at("mean_realized_variance");
  const double var = r.intermediates.at("variance_of_realized_variance");
  const auto mc = estimate_swap(m, 0, c, kVol1, nullptr, nullptr, 100000, 31);
  const double budget = std::max(3.0 * mc.standard_error, 2.0 * var * var / std::pow(mean, 2.5));
  EXPECT_LT(std::abs(r.price - mc.mean), budget);
}

TEST(CovarianceSwap, ClosedForms) {
  const auto p = pricer(weibull_gamma());
  const auto one = CorrelationCurve::constant(1.0);
  const auto zero = CorrelationCurve::constant(0.0);
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    EXPECT_NEAR(p.covariance_swap(kFlat, kFlat, one, contract(SwapKind::Covariance), method).price, 0.04, 1e-12);
    EXPECT_NEAR(p.covariance_swap(kVol1, kVol2, zero, contract(SwapKind::Covariance, 0.02, 0.04), method).price,
                -std::exp(-0.04) * 0.02, 1e-15);
  }
}

TEST(CovarianceSwap, FirstOrderPiecewiseCorrelation) {
  const auto p = pricer(exp_model());
  const auto r = p.covariance_swap(kVol1, kVol2, kSwitch, contract(SwapKind::Covariance), PricingMethod::FirstOrder);
  // p0 = 0.025, Q[p] = 0.045 - 0.025, int rho = 0.55, int t rho = 0.2125.
  EXPECT_NEAR(r.price, 0.025 * 0.55 + 0.02 * 0.2125, 1e-12);
}

TEST(CovarianceSwap, SymmetricInTheAssets) {
  const auto p = pricer(weibull_gamma());
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    const auto c = contract(SwapKind::Covariance, 0.01, 0.02);
    EXPECT_EQ(p.covariance_swap(kVol1, kVol2, kSwitch, c, method).price,
              p.covariance_swap(kVol2, kVol1, kSwitch, c, method).price);
  }
}

TEST(CorrelationSwap, ConstantVolatilityReturnsAveragedRho) {
  const auto p = pricer(weibull_gamma());
  const auto c = contract(SwapKind::Correlation, 0.2, 0.05);
  const double expected = std::exp(-0.05) * (0.55 - 0.2);
  for (auto method : {PricingMethod::Exact, PricingMethod::FirstOrder}) {
    EXPECT_NEAR(p.correlation_swap_zero_order(kFlat, kFlat, kSwitch, c, method).price, expected, 1e-8);
  }
  const auto first = p.correlation_swap_first_order(kFlat, kFlat, kSwitch, c);
  EXPECT_NEAR(first.price, expected, 1e-8);
  EXPECT_NEAR(first.intermediates.at("correction_1"), 0.0, 1e-8);
  EXPECT_NEAR(first.intermediates.at("correction_2"), 0.0, 1e-8);
}

TEST(CorrelationSwap, IdenticalAssetsAreFullyCorrelated) {
  const auto p = pricer(weibull_gamma());
  const auto one = CorrelationCurve::constant(1.0);
  const auto c = contract(SwapKind::Correlation);
  EXPECT_NEAR(p.correlation_swap_zero_order(kVol1, kVol1, one, c).price, 1.0, 1e-12);
  EXPECT_NEAR(p.correlation_swap_zero_order(kVol1, kVol1, one, c, PricingMethod::FirstOrder).price, 1.0, 1e-12);
  EXPECT_NEAR(p.correlation_swap_first_order(kFlat, kFlat, one, c).price, 1.0, 1e-8);
}

TEST(CorrelationSwap, FirstOrderIdenticalAssetsLoseTheSpread) {
  // With X = Y = Z the expansion gives 1 - Var{Y}/Y0^2; the correction
  // terms add rather than cancel.
  const auto m = weibull_gamma();
  const auto p = pricer(m, 500, 257);
  const auto one = CorrelationCurve::constant(1.0);
  const auto r = p.correlation_swap_first_order(kVol1, kVol1, one, contract(SwapKind::Correlation));
  const auto s2 = GridFunction::from_field(p.generator().shape(), kVol1, 2);
  const auto spread = variance_of_realized_variance(p.generator(), s2, 0, 1.0, p.settings().quadrature);
  EXPECT_NEAR(r.intermediates.at("mean_realized_variance_1"), spread.mean, 1e-12);
  // Both double integrals are trapezoid sums with O(dt^2) error.
  const double loss = spread.value / (spread.mean * spread.mean);
  EXPECT_NEAR(1.0 - r.price, loss, 1e-4 * loss);
}

TEST(CorrelationSwap, ZeroOrderStaysInUnitInterval) {
  const auto p = pricer(weibull_gamma());
  const std::vector<VolatilityField> fields{
      kVol1, kVol2, VolatilityField::state_constant({0.01, 0.9}),
      VolatilityField::gridded({0.0, 0.5, 1.0}, {{0.1, 0.4, 0.2}, {0.3, 0.05, 0.3}})};
  for (double rho : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
    const auto curve = CorrelationCurve::constant(rho);
    for (const auto& a : fields) {
      for (const auto& b : fields) {
        const double v = p.correlation_swap_zero_order(a, b, curve, contract(SwapKind::Correlation)).price;
        EXPECT_LE(std::abs(v), 1.0 + 1e-8) << "rho=" << rho;
      }
    }
  }
}

TEST(CorrelationSwap, UnequalVolatilitiesShrinkTowardZero) {
  const auto p = pricer(exp_model());
  const auto v = p.correlation_swap_zero_order(kVol1, kVol2, CorrelationCurve::constant(0.5),
                                               contract(SwapKind::Correlation))
                     .price;
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 0.5);
}

TEST(CorrelationSwap, FirstOrderReportsCorrectionTerms) {
  const auto p = pricer(exp_model());
  const auto r = p.correlation_swap_first_order(kVol1, kVol1, CorrelationCurve::constant(0.5),
                                                contract(SwapKind::Correlation));
  EXPECT_EQ(r.method, PricingMethod::Corrected);
  EXPECT_NEAR(r.intermediates.at("zero_order_correlation"), 0.5, 1e-12);
  EXPECT_LT(r.intermediates.at("correction_1"), 0.0);
  EXPECT_DOUBLE_EQ(r.intermediates.at("correction_1"), r.intermediates.at("correction_2"));
  EXPECT_FALSE(r.notes.empty());
}

TEST(Pricing, StrikeLinearity) {
  const auto p = pricer(weibull_gamma());
  for (const auto& c : kCases) {
    for (double notional : {1.0, -2.5}) {
      const auto lo = contract(c.kind, 0.1, 0.03, 1.0, notional);
      auto hi = lo;
      hi.strike = 0.35;
      const double diff = price_case(p, c, lo).price - price_case(p, c, hi).price;
      EXPECT_NEAR(diff, -std::exp(-0.03) * notional * (0.1 - 0.35), 1e-14) << to_string(c.kind);
    }
  }
}

TEST(Pricing, DiscountingAcrossRates) {
  const auto p = pricer(weibull_gamma());
  for (const auto& c : kCases) {
    const double K = 0.05;
    const auto base = price_case(p, c, contract(c.kind, K, 0.0));
    for (double r : {0.01, 0.05, 0.2}) {
      const double priced = price_case(p, c, contract(c.kind, K, r)).price;
      EXPECT_NEAR(priced, std::exp(-r) * base.price, 1e-14) << to_string(c.kind) << " r=" << r;
    }
  }
}

TEST(Pricing, NotionalScalesPrice) {
  const auto p = pricer(weibull_gamma());
  for (const auto& c : kCases) {
    const double one = price_case(p, c, contract(c.kind, 0.05, 0.02)).price;
    EXPECT_NEAR(price_case(p, c, contract(c.kind, 0.05, 0.02, 1.0, 3.0)).price, 3.0 * one, 1e-15);
  }
}

TEST(Pricing, IntermediatesReproducePrice) {
  const auto p = pricer(weibull_gamma());
  for (const auto& c : kCases) {
    const auto r = price_case(p, c, contract(c.kind, 0.07, 0.02, 1.0, 2.0));
    EXPECT_TRUE(std::isfinite(r.price));
    EXPECT_NEAR(recompute_price(r), r.price, 1e-12) << to_string(c.kind) << " " << to_string(c.method);
    auto broken = r;
    for (const auto& [key, value] : r.intermediates) {
      if (key == "discount_factor" || key == "notional" || key == "strike") continue;
      broken.intermediates.erase(key);
    }
    EXPECT_EQ(kind_of([&] { recompute_price(broken); }), ErrorKind::InvalidArgument);
  }
}

TEST(Pricing, RejectsBadContracts) {
  const auto p = pricer(weibull_gamma());
  EXPECT_EQ(kind_of([&] { p.variance_swap(kVol1, contract(SwapKind::Variance, 0.0, 0.0, 0.0)); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.variance_swap(kVol1, contract(SwapKind::Variance, 0.0, 0.0, 1.0, 0.0)); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.variance_swap(kVol1, contract(SwapKind::Covariance)); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.variance_swap(kVol1, contract(SwapKind::Variance), PricingMethod::Corrected); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { p.price(contract(SwapKind::Covariance), PricingMethod::Exact, kVol1); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { SwapPricer(weibull_gamma(), 2, NumericalSettings::covering(weibull_gamma(), 50)); }),
            ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([] { parse_swap_kind("varswap"); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(parse_pricing_method("first-order"), PricingMethod::FirstOrder);
}

TEST(Pricing, FreeFunctionsMatchPricer) {
  const auto m = weibull_gamma();
  const auto s = NumericalSettings::covering(m, 400);
  const auto p = SwapPricer(m, 0, s);
  const auto c = contract(SwapKind::Covariance, 0.01);
  EXPECT_EQ(price_covariance_swap(m, kVol1, kVol2, kSwitch, 0, c, s).price,
            p.covariance_swap(kVol1, kVol2, kSwitch, c).price);
  const auto v = contract(SwapKind::Variance, 0.01);
  EXPECT_EQ(price_variance_swap(m, kVol1, 0, v, s).price, p.variance_swap(kVol1, v).price);
}
