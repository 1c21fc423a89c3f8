#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "smswap/generator.hpp"
#include "smswap/model.hpp"
#include "smswap/pricing.hpp"
#include "smswap/random.hpp"

namespace smswap {

inline constexpr std::size_t kMaxJumps = 10'000'000;

/// A Markov renewal path on [0, horizon]. jump_times[0] = 0 and states[k]
/// is occupied on [jump_times[k], jump_times[k+1]). A renewal landing
/// exactly on the horizon is recorded.
struct MrpPath {
  double horizon = 0.0;
  std::vector<double> jump_times;
  std::vector<std::size_t> states;

  /// Number of jumps in (0, horizon].
  std::size_t jumps() const noexcept { return jump_times.size() - 1; }
  /// Index k of the sojourn containing t (right-continuous).
  std::size_t sojourn_at(double t) const;
  std::size_t state_at(double t) const { return states[sojourn_at(t)]; }
  /// Backward recurrence time gamma(t) = t - tau_{nu(t)}.
  double recurrence_at(double t) const { return t - jump_times[sojourn_at(t)]; }
  /// Time spent in each state over [0, horizon].
  std::vector<double> occupation_times(std::size_t states_count) const;
};

/// Alternates sojourn draws from G_{x_n} with state draws from P(x_n, .)
/// until the horizon is passed. Throws PathExplosion above kMaxJumps.
MrpPath sample_path(const SemiMarkovModel& model, std::size_t initial_state, double horizon, Rng& rng);

/// (1/T) int_0^T sigma^2(x_t, gamma(t)) dt, Simpson's rule on every piece
/// between renewals and volatility knots (exact for piecewise-linear sigma).
double realized_variance_path(const MrpPath& path, const VolatilityField& sigma);

/// (1/T) int_0^T rho_t sigma1 sigma2 dt, pieces also split at rho breakpoints.
double realized_covariance_path(const MrpPath& path, const VolatilityField& sigma1, const VolatilityField& sigma2,
                                const CorrelationCurve& rho);

/// (1/T) times the quadratic variation of log S1 + sign * log S2, i.e.
/// (1/T) int sigma1^2 + sigma2^2 + 2 sign rho sigma1 sigma2 dt. sign is +1 or -1.
double realized_quadratic_variation_path(const MrpPath& path, const VolatilityField& sigma1,
                                         const VolatilityField& sigma2, const CorrelationCurve& rho, int sign);

struct AssetPaths {
  std::vector<double> times;
  std::vector<double> log_price1;
  std::vector<double> log_price2;
};

/// Log-Euler scheme with drift r, volatilities frozen at each step's left
/// endpoint and Gaussian increments correlated by the step average of rho.
AssetPaths simulate_assets(const MrpPath& path, const VolatilityField& sigma1, const VolatilityField& sigma2,
                           const CorrelationCurve& rho, double rate, std::size_t steps, Rng& rng);

/// n / ((n - 1) T) * sum of R1_i R2_i over the n log-returns.
double discrete_covariance(std::span<const double> log_price1, std::span<const double> log_price2, double horizon);
double discrete_variance(std::span<const double> log_price, double horizon);
double discrete_correlation(std::span<const double> log_price1, std::span<const double> log_price2);

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  /// Sample variance of the per-path values.
  double variance = 0.0;
};

/// Mean, sample variance and standard error with a fixed summation order.
/// Throws InvalidArgument for fewer than 2 values.
McEstimate summarize(std::span<const double> values, std::uint64_t seed = 0);

/// Sample variance of the values with the standard error
/// sqrt((m4 - s^4) / n) from the central fourth moment.
struct VarianceEstimate {
  double variance = 0.0;
  double standard_error = 0.0;
  std::size_t n_paths = 0;
};

VarianceEstimate summarize_variance(std::span<const double> values);

/// Per-path realized functionals. Two-asset entries are empty when no
/// second field was supplied.
struct PathFunctionals {
  std::vector<double> variance1;
  std::vector<double> variance2;
  std::vector<double> covariance;
  std::vector<double> correlation;
};

/// Path i uses make_substream(seed, i), so the output does not depend on
/// the worker count.
PathFunctionals simulate_functionals(const SemiMarkovModel& model, std::size_t initial_state, double horizon,
                                     const VolatilityField& sigma1, const VolatilityField* sigma2,
                                     const CorrelationCurve* rho, std::size_t n_paths, std::uint64_t seed);

/// Discounted payoff N e^{-rT} (F - K) with F the realized variance,
/// volatility, covariance or correlation. Throws InvalidArgument for fewer
/// than 1000 paths.
McEstimate estimate_swap(const SemiMarkovModel& model, std::size_t initial_state, const SwapContract& contract,
                         const VolatilityField& sigma1, const VolatilityField* sigma2, const CorrelationCurve* rho,
                         std::size_t n_paths, std::uint64_t seed);

/// Per-path discounted payoffs from already simulated functionals.
std::vector<double> swap_payoffs(const PathFunctionals& functionals, const SwapContract& contract);

struct MartingaleCheck {
  std::vector<double> checkpoints;
  std::vector<double> means;
  std::vector<double> standard_errors;
  std::vector<double> z_scores;
  /// Sample variance of m_t at the last checkpoint and its standard error.
  VarianceEstimate terminal_spread;
};

/// m_t = f(x_t, gamma(t)) - f(x0, 0) - int_0^t Qf(x_s, gamma(s)) ds along
/// sampled paths, with Qf linearly interpolated in gamma and integrated exactly.
MartingaleCheck martingale_check(const SemiMarkovModel& model, std::size_t initial_state,
                                 const GeneratorMatrix& generator, const GridFunction& f,
                                 std::vector<double> checkpoints, std::size_t n_paths, std::uint64_t seed);

}  // namespace smswap
