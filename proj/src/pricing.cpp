#include "smswap/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "smswap/errors.hpp"

namespace smswap {

namespace {

constexpr double kDegenerateMean = 1e-12;
constexpr double kExpansionWarning = 0.25;

double need(const PricingReport& report, const char* key) {
  const auto it = report.intermediates.find(key);
  if (it == report.intermediates.end()) {
    throw Error(ErrorKind::InvalidArgument, std::string("report is missing intermediate '") + key + "'");
  }
  return it->second;
}

void require_kind(const SwapContract& contract, SwapKind kind) {
  contract.check();
  if (contract.kind != kind) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("contract kind is ") + to_string(contract.kind) + ", expected " + to_string(kind));
  }
}

void require_mean(double value, const char* what) {
  if (!(value >= kDegenerateMean)) {
    throw Error(ErrorKind::DegenerateMean, std::string(what) + " = " + std::to_string(value) + " is below 1e-12");
  }
}

double convexity_adjustment(double mean, double variance) { return variance / (8.0 * std::pow(mean, 1.5)); }

double ratio_correlation(double x0, double y0, double z0) { return x0 / (std::sqrt(y0) * std::sqrt(z0)); }

// E{X}/sqrt(Y0 Z0) - Cov(X,Y)/(2 Y0 sqrt(Y0 Z0)) - Cov(X,Z)/(2 Z0 sqrt(Y0 Z0)), which is
// [2 E{X} - E{XY}/(2 Y0) - E{XZ}/(2 Z0)] / sqrt(Y0 Z0) written in centered form.
struct CorrectedCorrelation {
  double zero_order;
  double correction_1;
  double correction_2;
  double value() const { return zero_order + correction_1 + correction_2; }
};

CorrectedCorrelation corrected_correlation(double x0, double y0, double z0, double xy, double xy_ref, double xz,
                                           double xz_ref) {
  const double root = std::sqrt(y0) * std::sqrt(z0);
  return {x0 / root, -(xy - xy_ref) / (2.0 * y0 * root), -(xz - xz_ref) / (2.0 * z0 * root)};
}

double settle(const PricingReport& report, double expected_payoff) {
  const auto& c = report.contract;
  return c.notional * c.discount() * (expected_payoff - c.strike);
}

void add_contract_terms(PricingReport& report) {
  report.intermediates["discount_factor"] = report.contract.discount();
  report.intermediates["notional"] = report.contract.notional;
  report.intermediates["strike"] = report.contract.strike;
}

}  // namespace

const char* to_string(SwapKind kind) noexcept {
  switch (kind) {
    case SwapKind::Variance: return "variance";
    case SwapKind::Volatility: return "volatility";
    case SwapKind::Covariance: return "covariance";
    case SwapKind::Correlation: return "correlation";
  }
  return "unknown";
}

SwapKind parse_swap_kind(const std::string& text) {
  if (text == "variance") return SwapKind::Variance;
  if (text == "volatility") return SwapKind::Volatility;
  if (text == "covariance") return SwapKind::Covariance;
  if (text == "correlation") return SwapKind::Correlation;
  throw Error(ErrorKind::InvalidArgument, "unknown swap kind '" + text + "'");
}

const char* to_string(PricingMethod method) noexcept {
  switch (method) {
    case PricingMethod::Exact: return "exact";
    case PricingMethod::FirstOrder: return "first-order";
    case PricingMethod::Corrected: return "corrected";
  }
  return "unknown";
}

PricingMethod parse_pricing_method(const std::string& text) {
  if (text == "exact") return PricingMethod::Exact;
  if (text == "first-order") return PricingMethod::FirstOrder;
  if (text == "corrected") return PricingMethod::Corrected;
  throw Error(ErrorKind::InvalidArgument, "unknown pricing method '" + text + "'");
}

void SwapContract::check() const {
  if (!(std::isfinite(maturity) && maturity > 0.0)) throw Error(ErrorKind::InvalidArgument, "maturity must be > 0");
  if (!std::isfinite(rate) || !std::isfinite(strike)) {
    throw Error(ErrorKind::InvalidArgument, "rate and strike must be finite");
  }
  if (!std::isfinite(notional) || notional == 0.0) throw Error(ErrorKind::InvalidArgument, "notional must be non-zero");
}

double SwapContract::discount() const { return std::exp(-rate * maturity); }

double recompute_price(const PricingReport& report) {
  const double T = report.contract.maturity;
  const bool first = report.method == PricingMethod::FirstOrder;
  switch (report.contract.kind) {
    case SwapKind::Variance: {
      const double mean = first ? need(report, "variance_at_origin") +
                                      0.5 * T * need(report, "generator_variance_at_origin")
                                : need(report, "mean_realized_variance");
      return settle(report, mean);
    }
    case SwapKind::Volatility: {
      double mean, variance;
      if (first) {
        const double s0 = need(report, "variance_at_origin");
        const double q0 = need(report, "generator_variance_at_origin");
        mean = s0 + 0.5 * T * q0;
        variance = T / 3.0 * (need(report, "generator_fourth_at_origin") - 2.0 * s0 * q0);
      } else {
        mean = need(report, "mean_realized_variance");
        variance = need(report, "variance_of_realized_variance");
      }
      return settle(report, std::sqrt(mean) - convexity_adjustment(mean, variance));
    }
    case SwapKind::Covariance: {
      const double mean = first ? (need(report, "product_at_origin") * need(report, "rho_integral") +
                                   need(report, "generator_product_at_origin") * need(report, "t_rho_integral")) /
                                      T
                                : need(report, "mean_realized_covariance");
      return settle(report, mean);
    }
    case SwapKind::Correlation: {
      if (report.method == PricingMethod::Corrected) {
        const auto c = corrected_correlation(
            need(report, "mean_realized_covariance"), need(report, "mean_realized_variance_1"),
            need(report, "mean_realized_variance_2"), need(report, "cross_moment_1"),
            need(report, "cross_moment_1_reference"), need(report, "cross_moment_2"),
            need(report, "cross_moment_2_reference"));
        return settle(report, c.value());
      }
      double x0, y0, z0;
      if (first) {
        x0 = (need(report, "product_at_origin") * need(report, "rho_integral") +
              need(report, "generator_product_at_origin") * need(report, "t_rho_integral")) /
             T;
        y0 = need(report, "variance1_at_origin") + 0.5 * T * need(report, "generator_variance1_at_origin");
        z0 = need(report, "variance2_at_origin") + 0.5 * T * need(report, "generator_variance2_at_origin");
      } else {
        x0 = need(report, "mean_realized_covariance");
        y0 = need(report, "mean_realized_variance_1");
        z0 = need(report, "mean_realized_variance_2");
      }
      return settle(report, ratio_correlation(x0, y0, z0));
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown swap kind");
}

NumericalSettings NumericalSettings::covering(const SemiMarkovModel& model, std::size_t gamma_nodes,
                                              std::size_t time_nodes) {
  NumericalSettings s;
  s.grid = RecurrenceGrid::covering(model, gamma_nodes);
  s.quadrature.nodes = time_nodes;
  return s;
}

SwapPricer::SwapPricer(const SemiMarkovModel& model, std::size_t initial_state, NumericalSettings settings)
    : generator_(build_generator(model, settings.grid)), initial_state_(initial_state), settings_(std::move(settings)) {
  if (initial_state_ >= model.states()) {
    throw Error(ErrorKind::InvalidArgument, "initial state " + std::to_string(initial_state_) + " out of range");
  }
  settings_.quadrature.check();
}

QuadratureSpec SwapPricer::quad_with(const CorrelationCurve* rho) const {
  QuadratureSpec q = settings_.quadrature;
  if (rho != nullptr) q.breakpoints.insert(q.breakpoints.end(), rho->breakpoints().begin(), rho->breakpoints().end());
  std::sort(q.breakpoints.begin(), q.breakpoints.end());
  return q;
}

namespace {

void add_grid_diagnostics(PricingReport& report, const GeneratorMatrix& q, const NumericalSettings& s) {
  report.diagnostics["gamma_max"] = q.shape().gamma_max;
  report.diagnostics["gamma_nodes"] = static_cast<double>(q.shape().nodes);
  report.diagnostics["gamma_step"] = q.shape().step();
  report.diagnostics["time_nodes"] = static_cast<double>(s.quadrature.nodes);
  report.diagnostics["time_step_max"] = q.stable_step();
}

}  // namespace

PricingReport SwapPricer::variance_swap(const VolatilityField& sigma, const SwapContract& contract,
                                        PricingMethod method) const {
  require_kind(contract, SwapKind::Variance);
  if (method == PricingMethod::Corrected) throw Error(ErrorKind::InvalidArgument, "corrected method is for correlation swaps");
  const double T = contract.maturity;
  const auto sigma2 = GridFunction::from_field(generator_.shape(), sigma, 2);
  PricingReport r{contract, method, 0.0, {}, {}, {}, {}};
  add_contract_terms(r);
  add_grid_diagnostics(r, generator_, settings_);
  if (method == PricingMethod::FirstOrder) {
    const double s0 = sigma2.at_origin(initial_state_);
    const double q0 = generator_.apply(sigma2).at_origin(initial_state_);
    r.intermediates["variance_at_origin"] = s0;
    r.intermediates["generator_variance_at_origin"] = q0;
    r.intermediates["mean_realized_variance"] = s0 + 0.5 * T * q0;
  } else {
    const auto avg = time_average(generator_, sigma2, initial_state_, T, settings_.quadrature, nullptr, settings_.step);
    r.intermediates["mean_realized_variance"] = avg.value;
    r.diagnostics["quadrature_error_estimate"] = avg.error_estimate;
  }
  r.price = recompute_price(r);
  return r;
}

PricingReport SwapPricer::volatility_swap(const VolatilityField& sigma, const SwapContract& contract,
                                          PricingMethod method) const {
  require_kind(contract, SwapKind::Volatility);
  if (method == PricingMethod::Corrected) throw Error(ErrorKind::InvalidArgument, "corrected method is for correlation swaps");
  const double T = contract.maturity;
  const auto sigma2 = GridFunction::from_field(generator_.shape(), sigma, 2);
  PricingReport r{contract, method, 0.0, {}, {}, {}, {}};
  add_contract_terms(r);
  add_grid_diagnostics(r, generator_, settings_);
  double mean, variance;
  if (method == PricingMethod::FirstOrder) {
    const auto sigma4 = sigma2 * sigma2;
    const double s0 = sigma2.at_origin(initial_state_);
    const double q0 = generator_.apply(sigma2).at_origin(initial_state_);
    const double q4 = generator_.apply(sigma4).at_origin(initial_state_);
    mean = s0 + 0.5 * T * q0;
    variance = T / 3.0 * (q4 - 2.0 * s0 * q0);
    r.intermediates["variance_at_origin"] = s0;
    r.intermediates["generator_variance_at_origin"] = q0;
    r.intermediates["generator_fourth_at_origin"] = q4;
  } else {
    const auto spread =
        variance_of_realized_variance(generator_, sigma2, initial_state_, T, settings_.quadrature, settings_.step);
    const auto avg = time_average(generator_, sigma2, initial_state_, T, settings_.quadrature, nullptr, settings_.step);
    mean = avg.value;
    variance = spread.value;
    r.intermediates["variance_of_realized_variance"] = variance;
    r.diagnostics["quadrature_error_estimate"] = avg.error_estimate;
    r.diagnostics["variance_symmetric_assembly"] = spread.symmetric;
    r.diagnostics["variance_unclamped"] = spread.unclamped;
  }
  require_mean(mean, "expected realized variance");
  r.intermediates["mean_realized_variance"] = mean;
  r.intermediates["convexity_adjustment"] = convexity_adjustment(mean, variance);
  if (method == PricingMethod::FirstOrder) r.intermediates["variance_of_realized_variance"] = variance;
  const double spread_ratio = variance / (mean * mean);
  r.diagnostics["variance_to_squared_mean"] = spread_ratio;
  r.flags["expansion_untrusted"] = spread_ratio > kExpansionWarning;
  if (spread_ratio > kExpansionWarning) {
    r.notes.push_back("Var{V}/E{V}^2 exceeds 0.25; the second-order square-root expansion is unreliable here");
  }
  r.price = recompute_price(r);
  return r;
}

PricingReport SwapPricer::covariance_swap(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                          const CorrelationCurve& rho, const SwapContract& contract,
                                          PricingMethod method) const {
  require_kind(contract, SwapKind::Covariance);
  if (method == PricingMethod::Corrected) throw Error(ErrorKind::InvalidArgument, "corrected method is for correlation swaps");
  const double T = contract.maturity;
  const auto product = GridFunction::from_field(generator_.shape(), sigma1) *
                       GridFunction::from_field(generator_.shape(), sigma2);
  PricingReport r{contract, method, 0.0, {}, {}, {}, {}};
  add_contract_terms(r);
  add_grid_diagnostics(r, generator_, settings_);
  if (method == PricingMethod::FirstOrder) {
    const double p0 = product.at_origin(initial_state_);
    const double qp0 = generator_.apply(product).at_origin(initial_state_);
    r.intermediates["product_at_origin"] = p0;
    r.intermediates["generator_product_at_origin"] = qp0;
    r.intermediates["rho_integral"] = rho.integral(0.0, T);
    r.intermediates["t_rho_integral"] = rho.weighted_integral(0.0, T);
  } else {
    const auto avg = time_average(generator_, product, initial_state_, T, quad_with(&rho), &rho, settings_.step);
    r.intermediates["mean_realized_covariance"] = avg.value;
    r.diagnostics["quadrature_error_estimate"] = avg.error_estimate;
  }
  r.price = recompute_price(r);
  return r;
}

PricingReport SwapPricer::correlation_swap_zero_order(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                                      const CorrelationCurve& rho, const SwapContract& contract,
                                                      PricingMethod method) const {
  require_kind(contract, SwapKind::Correlation);
  if (method == PricingMethod::Corrected) return correlation_swap_first_order(sigma1, sigma2, rho, contract);
  const double T = contract.maturity;
  const auto s1 = GridFunction::from_field(generator_.shape(), sigma1);
  const auto s2 = GridFunction::from_field(generator_.shape(), sigma2);
  const auto product = s1 * s2;
  const auto var1 = s1 * s1;
  const auto var2 = s2 * s2;
  PricingReport r{contract, method, 0.0, {}, {}, {}, {}};
  add_contract_terms(r);
  add_grid_diagnostics(r, generator_, settings_);
  double y0, z0;
  if (method == PricingMethod::FirstOrder) {
    const double a1 = var1.at_origin(initial_state_);
    const double a2 = var2.at_origin(initial_state_);
    const double q1 = generator_.apply(var1).at_origin(initial_state_);
    const double q2 = generator_.apply(var2).at_origin(initial_state_);
    r.intermediates["product_at_origin"] = product.at_origin(initial_state_);
    r.intermediates["generator_product_at_origin"] = generator_.apply(product).at_origin(initial_state_);
    r.intermediates["rho_integral"] = rho.integral(0.0, T);
    r.intermediates["t_rho_integral"] = rho.weighted_integral(0.0, T);
    r.intermediates["variance1_at_origin"] = a1;
    r.intermediates["generator_variance1_at_origin"] = q1;
    r.intermediates["variance2_at_origin"] = a2;
    r.intermediates["generator_variance2_at_origin"] = q2;
    y0 = a1 + 0.5 * T * q1;
    z0 = a2 + 0.5 * T * q2;
  } else {
    const auto quad = quad_with(&rho);
    const auto x = time_average(generator_, product, initial_state_, T, quad, &rho, settings_.step);
    const auto y = time_average(generator_, var1, initial_state_, T, quad, nullptr, settings_.step);
    const auto z = time_average(generator_, var2, initial_state_, T, quad, nullptr, settings_.step);
    r.intermediates["mean_realized_covariance"] = x.value;
    r.intermediates["mean_realized_variance_1"] = y.value;
    r.intermediates["mean_realized_variance_2"] = z.value;
    r.diagnostics["quadrature_error_estimate"] = std::max({x.error_estimate, y.error_estimate, z.error_estimate});
    y0 = y.value;
    z0 = z.value;
  }
  require_mean(y0, "expected realized variance of asset 1");
  require_mean(z0, "expected realized variance of asset 2");
  r.price = recompute_price(r);
  r.intermediates["zero_order_correlation"] = r.price / (contract.notional * contract.discount()) + contract.strike;
  return r;
}

namespace {

struct CorrelationInputs {
  double x0, y0, z0;
  CrossMoment xy, xz;
};

CorrelationInputs correlation_inputs(const GeneratorMatrix& q, const GridFunction& s1, const GridFunction& s2,
                                     const CorrelationCurve& rho, std::size_t x0, double T,
                                     const QuadratureSpec& quad, StepMethod step) {
  const auto product = s1 * s2;
  const auto var1 = s1 * s1;
  const auto var2 = s2 * s2;
  CorrelationInputs in{};
  in.x0 = time_average(q, product, x0, T, quad, &rho, step).value;
  in.y0 = time_average(q, var1, x0, T, quad, nullptr, step).value;
  in.z0 = time_average(q, var2, x0, T, quad, nullptr, step).value;
  in.xy = cross_moment(q, product, var1, rho, x0, T, quad, step);
  in.xz = cross_moment(q, product, var2, rho, x0, T, quad, step);
  return in;
}

}  // namespace

PricingReport SwapPricer::correlation_swap_first_order(const VolatilityField& sigma1, const VolatilityField& sigma2,
                                                       const CorrelationCurve& rho,
                                                       const SwapContract& contract) const {
  require_kind(contract, SwapKind::Correlation);
  const double T = contract.maturity;
  const auto quad = quad_with(&rho);

  // Constant volatility must return the time-averaged rho exactly.
  {
    const SemiMarkovModel unit({{1.0}}, {SojournLaw::exponential(1.0)});
    const auto unit_q = build_generator(unit, RecurrenceGrid::covering(unit, 3));
    const auto one = GridFunction::constant(unit_q.shape(), 1.0);
    const auto in = correlation_inputs(unit_q, one, one, rho, 0, T, quad, settings_.step);
    const double got = corrected_correlation(in.x0, in.y0, in.z0, in.xy.value, in.xy.mean_product, in.xz.value,
                                             in.xz.mean_product)
                           .value();
    if (!(std::abs(got - rho.average(T)) <= 1e-8)) {
      throw Error(ErrorKind::NormalizationCheckFailed, "constant-volatility self test returned " +
                                                           std::to_string(got) + " instead of " +
                                                           std::to_string(rho.average(T)));
    }
  }

  const auto s1 = GridFunction::from_field(generator_.shape(), sigma1);
  const auto s2 = GridFunction::from_field(generator_.shape(), sigma2);
  const auto in = correlation_inputs(generator_, s1, s2, rho, initial_state_, T, quad, settings_.step);
  require_mean(in.y0, "expected realized variance of asset 1");
  require_mean(in.z0, "expected realized variance of asset 2");

  PricingReport r{contract, PricingMethod::Corrected, 0.0, {}, {}, {}, {}};
  add_contract_terms(r);
  add_grid_diagnostics(r, generator_, settings_);
  r.intermediates["mean_realized_covariance"] = in.x0;
  r.intermediates["mean_realized_variance_1"] = in.y0;
  r.intermediates["mean_realized_variance_2"] = in.z0;
  r.intermediates["cross_moment_1"] = in.xy.value;
  r.intermediates["cross_moment_1_reference"] = in.xy.mean_product;
  r.intermediates["cross_moment_2"] = in.xz.value;
  r.intermediates["cross_moment_2_reference"] = in.xz.mean_product;
  const auto c = corrected_correlation(in.x0, in.y0, in.z0, in.xy.value, in.xy.mean_product, in.xz.value,
                                       in.xz.mean_product);
  r.intermediates["zero_order_correlation"] = c.zero_order;
  r.intermediates["correction_1"] = c.correction_1;
  r.intermediates["correction_2"] = c.correction_2;
  r.intermediates["expected_correlation"] = c.value();
  r.notes.push_back(
      "expected correlation = E{X}/sqrt(Y0 Z0) - Cov(X,Y)/(2 Y0 sqrt(Y0 Z0)) - Cov(X,Z)/(2 Z0 sqrt(Y0 Z0)), "
      "equivalently [2 E{X} - E{XY}/(2 Y0) - E{XZ}/(2 Z0)] / sqrt(Y0 Z0); constant-volatility self test passed");
  r.price = recompute_price(r);
  return r;
}

PricingReport SwapPricer::price(const SwapContract& contract, PricingMethod method, const VolatilityField& sigma1,
                                const VolatilityField* sigma2, const CorrelationCurve* rho) const {
  switch (contract.kind) {
    case SwapKind::Variance: return variance_swap(sigma1, contract, method);
    case SwapKind::Volatility: return volatility_swap(sigma1, contract, method);
    case SwapKind::Covariance:
    case SwapKind::Correlation: break;
  }
  if (sigma2 == nullptr || rho == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "two-asset swaps need a second volatility field and a correlation curve");
  }
  if (contract.kind == SwapKind::Covariance) return covariance_swap(sigma1, *sigma2, *rho, contract, method);
  if (method == PricingMethod::Corrected) return correlation_swap_first_order(sigma1, *sigma2, *rho, contract);
  return correlation_swap_zero_order(sigma1, *sigma2, *rho, contract, method);
}

PricingReport price_variance_swap(const SemiMarkovModel& model, const VolatilityField& sigma,
                                  std::size_t initial_state, const SwapContract& contract,
                                  const NumericalSettings& settings, PricingMethod method) {
  return SwapPricer(model, initial_state, settings).variance_swap(sigma, contract, method);
}

PricingReport price_volatility_swap(const SemiMarkovModel& model, const VolatilityField& sigma,
                                    std::size_t initial_state, const SwapContract& contract,
                                    const NumericalSettings& settings, PricingMethod method) {
  return SwapPricer(model, initial_state, settings).volatility_swap(sigma, contract, method);
}

PricingReport price_covariance_swap(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                    const VolatilityField& sigma2, const CorrelationCurve& rho,
                                    std::size_t initial_state, const SwapContract& contract,
                                    const NumericalSettings& settings, PricingMethod method) {
  return SwapPricer(model, initial_state, settings).covariance_swap(sigma1, sigma2, rho, contract, method);
}

PricingReport price_correlation_swap_zero_order(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                                const VolatilityField& sigma2, const CorrelationCurve& rho,
                                                std::size_t initial_state, const SwapContract& contract,
                                                const NumericalSettings& settings, PricingMethod method) {
  return SwapPricer(model, initial_state, settings).correlation_swap_zero_order(sigma1, sigma2, rho, contract, method);
}

PricingReport price_correlation_swap_first_order(const SemiMarkovModel& model, const VolatilityField& sigma1,
                                                 const VolatilityField& sigma2, const CorrelationCurve& rho,
                                                 std::size_t initial_state, const SwapContract& contract,
                                                 const NumericalSettings& settings) {
  return SwapPricer(model, initial_state, settings).correlation_swap_first_order(sigma1, sigma2, rho, contract);
}

}  // namespace smswap
