#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "smswap/random.hpp"

namespace smswap {

/// Survival below this level makes the hazard numerically meaningless.
inline constexpr double kSurvivalFloor = 1e-12;

struct Exponential {
  double rate;
};

struct Weibull {
  double shape;
  double scale;
};

struct GammaLaw {
  double shape;
  double scale;
};

struct Deterministic {
  double duration;
};

/// Distribution of the time spent in a state before the next renewal.
class SojournLaw {
 public:
  using Family = std::variant<Exponential, Weibull, GammaLaw, Deterministic>;

  /// Throws InvalidArgument unless every parameter is finite and positive.
  explicit SojournLaw(Family family);

  static SojournLaw exponential(double rate) { return SojournLaw(Exponential{rate}); }
  static SojournLaw weibull(double shape, double scale) { return SojournLaw(Weibull{shape, scale}); }
  static SojournLaw gamma(double shape, double scale) { return SojournLaw(GammaLaw{shape, scale}); }
  static SojournLaw deterministic(double duration) { return SojournLaw(Deterministic{duration}); }

  const Family& family() const noexcept { return family_; }
  std::string_view name() const noexcept;

  /// False only for Deterministic, which has no density and so no generator.
  bool has_density() const noexcept;

  double cdf(double t) const;
  double survival(double t) const;
  /// Density g(t). Infinite at t = 0 for shape < 1 families.
  double density(double t) const;
  double mean() const;
  /// Inverse cdf on (0, 1).
  double quantile(double u) const;
  /// Smallest t with survival(t) <= tail.
  double tail_point(double tail) const;

 private:
  Family family_;
};

/// g(t)/Gbar(t). Throws SurvivalUnderflow when Gbar(t) < kSurvivalFloor and
/// InvalidArgument for Deterministic laws or negative t.
double hazard(const SojournLaw& law, double t);

/// Inverse-cdf draw, strictly positive.
double sample_sojourn(const SojournLaw& law, Rng& rng);

/// Finite-state semi-Markov kernel P(x, y) G_x(t). Construction does not
/// validate; run validate() or require_valid() before numerical use.
class SemiMarkovModel {
 public:
  SemiMarkovModel(std::vector<std::vector<double>> transition, std::vector<SojournLaw> laws);

  std::size_t states() const noexcept { return states_; }
  double transition(std::size_t from, std::size_t to) const { return transition_[from * states_ + to]; }
  std::span<const double> transition_row(std::size_t from) const {
    return {transition_.data() + from * states_, states_};
  }
  const SojournLaw& law(std::size_t state) const { return laws_.at(state); }
  const std::vector<SojournLaw>& laws() const noexcept { return laws_; }
  /// Row lengths as given, used by validation to detect ragged input.
  const std::vector<std::size_t>& row_lengths() const noexcept { return row_lengths_; }

 private:
  std::size_t states_;
  std::vector<double> transition_;
  std::vector<std::size_t> row_lengths_;
  std::vector<SojournLaw> laws_;
};

enum class Severity { Error, Advisory };

struct ValidationIssue {
  Severity severity;
  std::string code;
  int state;  // -1 when not tied to a state
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool valid() const noexcept;
  std::vector<ValidationIssue> errors() const;
  std::vector<ValidationIssue> advisories() const;
};

ValidationReport validate(const SemiMarkovModel& model);

/// Throws InvalidModel listing the first error if validate() finds any.
void require_valid(const SemiMarkovModel& model);

/// Deterministic correlation rho_t, constant or piecewise constant
/// (right-continuous, value[i] on [breakpoint[i-1], breakpoint[i])).
class CorrelationCurve {
 public:
  static CorrelationCurve constant(double rho);
  static CorrelationCurve piecewise(std::vector<double> breakpoints, std::vector<double> values);

  bool is_constant() const noexcept { return breakpoints_.empty(); }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> values() const noexcept { return values_; }

  double operator()(double t) const;
  /// Integral of rho over [a, b].
  double integral(double a, double b) const;
  /// Integral of t * rho over [a, b].
  double weighted_integral(double a, double b) const;
  double average(double horizon) const { return integral(0.0, horizon) / horizon; }

 private:
  CorrelationCurve(std::vector<double> breakpoints, std::vector<double> values);

  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

/// sigma(x, gamma): per-state constants, or per-state piecewise-linear
/// functions of the backward recurrence time on shared knots (constant
/// extrapolation beyond the last knot).
class VolatilityField {
 public:
  static VolatilityField state_constant(std::vector<double> levels);
  static VolatilityField gridded(std::vector<double> knots, std::vector<std::vector<double>> values);

  std::size_t states() const noexcept { return values_.size(); }
  bool is_gamma_constant() const noexcept { return knots_.empty(); }
  std::span<const double> knots() const noexcept { return knots_; }
  const std::vector<std::vector<double>>& values() const noexcept { return values_; }

  double operator()(std::size_t state, double gamma) const;

  /// Copy with every value multiplied by `factor` (factor >= 0).
  VolatilityField scaled(double factor) const;

 private:
  VolatilityField(std::vector<double> knots, std::vector<std::vector<double>> values);

  std::vector<double> knots_;
  std::vector<std::vector<double>> values_;
};

}  // namespace smswap
