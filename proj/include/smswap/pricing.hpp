#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smswap/generator.hpp"
#include "smswap/model.hpp"
#include "smswap/moments.hpp"

namespace smswap {

enum class SwapKind { Variance, Volatility, Covariance, Correlation };

const char* to_string(SwapKind kind) noexcept;
/// Accepts "variance", "volatility", "covariance", "correlation".
SwapKind parse_swap_kind(const std::string& text);

struct SwapContract {
  SwapKind kind = SwapKind::Variance;
  double maturity = 1.0;
  double rate = 0.0;
  double strike = 0.0;
  double notional = 1.0;

  /// Throws InvalidArgument for T <= 0 or N == 0.
  void check() const;
  double discount() const;
};

/// exact: e^{tQ} by time stepping. first-order: e^{tQ} ~ I + tQ.
/// corrected: correlation swaps only, adds the first-order correction of
/// the realized-correlation expansion to the exact zero-order value.
enum class PricingMethod { Exact, FirstOrder, Corrected };

const char* to_string(PricingMethod method) noexcept;
PricingMethod parse_pricing_method(const std::string& text);

struct PricingReport {
  SwapContract contract;
  PricingMethod method = PricingMethod::Exact;
  double price = 0.0;
  /// Named quantities the price is assembled from; see recompute_price().
  std::map<std::string, double> intermediates;
  /// Quadrature and grid diagnostics; not used to assemble the price.
  std::map<std::string, double> diagnostics;
  std::map<std::string, bool> flags;
  std::vector<std::string> notes;
};

/// Reassembles the price from report.intermediates with the formula for its
/// kind and method. Throws InvalidArgument when an intermediate is missing.
double recompute_price(const PricingReport& report);

struct NumericalSettings {
  RecurrenceGrid grid;
  QuadratureSpec quadrature;
  StepMethod step = StepMethod::RK4;

  /// Grid covering the model's sojourn laws with `gamma_nodes` nodes.
  static NumericalSettings covering(const SemiMarkovModel& model, std::size_t gamma_nodes = 2000,
                                    std::size_t time_nodes = 64);
};

/// Builds the generator once and prices any number of contracts started
/// from (initial_state, gamma = 0).
class SwapPricer {
 public:
  SwapPricer(const SemiMarkovModel& model, std::size_t initial_state, NumericalSettings settings);

  const GeneratorMatrix& generator() const noexcept { return generator_; }
  std::size_t initial_state() const noexcept { return initial_state_; }
  const NumericalSettings& settings() const noexcept { return settings_; }

  PricingReport variance_swap(const VolatilityField& sigma, const SwapContract& contract,
                              PricingMethod method = PricingMethod::Exact) const;
  /// Throws DegenerateMean when E{V} < 1e-12.
  PricingReport volatility_swap(const VolatilityField& sigma, const SwapContract& contract,
                                PricingMethod method = PricingMethod::Exact) const;
  PricingReport covariance_swap(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                const CorrelationCurve& rho, const SwapContract& contract,
                                PricingMethod method = PricingMethod::Exact) const;
  /// Zero-order ratio estimator. method is Exact or FirstOrder.
  PricingReport correlation_swap_zero_order(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                            const CorrelationCurve& rho, const SwapContract& contract,
                                            PricingMethod method = PricingMethod::Exact) const;
  /// Zero-order plus the first-order correction. Throws
  /// NormalizationCheckFailed if the constant-volatility self test misses.
  PricingReport correlation_swap_first_order(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                             const CorrelationCurve& rho, const SwapContract& contract) const;

  /// Dispatch on contract.kind. Two-asset kinds need sigma2 and rho.
  PricingReport price(const SwapContract& contract, PricingMethod method, const VolatilityField& sigma1,
                      const VolatilityField* sigma2 = nullptr, const CorrelationCurve* rho = nullptr) const;

 private:
  QuadratureSpec quad_with(const CorrelationCurve* rho) const;

  GeneratorMatrix generator_;
  std::size_t initial_state_;
  NumericalSettings settings_;
};

PricingReport price_variance_swap(const SemiMarkovModel& model, const VolatilityField& sigma,
                                  std::size_t initial_state, const SwapContract& contract,
                                  const NumericalSettings& settings, PricingMethod method = PricingMethod::Exact);
PricingReport price_volatility_swap(const SemiMarkovModel& model, const VolatilityField& sigma,
                                    std::size_t initial_state, const SwapContract& contract,
                                    const NumericalSettings& settings, PricingMethod method = PricingMethod::Exact);
PricingReport price_covariance_swap(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                    const VolatilityField& sigma2, const CorrelationCurve& rho,
                                    std::size_t initial_state, const SwapContract& contract,
                                    const NumericalSettings& settings, PricingMethod method = PricingMethod::Exact);
PricingReport price_correlation_swap_zero_order(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                                const VolatilityField& sigma2, const CorrelationCurve& rho,
                                                std::size_t initial_state, const SwapContract& contract,
                                                const NumericalSettings& settings,
                                                PricingMethod method = PricingMethod::Exact);
PricingReport price_correlation_swap_first_order(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                                 const VolatilityField& sigma2, const CorrelationCurve& rho,
                                                 std::size_t initial_state, const SwapContract& contract,
                                                 const NumericalSettings& settings);

}  // namespace smswap
