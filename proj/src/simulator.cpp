#include "smswap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"
#include "smswap/errors.hpp"

namespace smswap {

namespace {

std::size_t draw_next_state(std::span<const double> row, Rng& rng) {
  const double u = uniform_open(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t y = 0; y < row.size(); ++y) {
    if (row[y] <= 0.0) continue;
    last_positive = y;
    cumulative += row[y];
    if (u < cumulative) return y;
  }
  return last_positive;
}

std::vector<double> merged_knots(const VolatilityField& a, const VolatilityField* b) {
  std::vector<double> knots(a.knots().begin(), a.knots().end());
  if (b != nullptr) knots.insert(knots.end(), b->knots().begin(), b->knots().end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  return knots;
}

// int_0^T rho_t fn(x_t, gamma(t)) dt with Simpson's rule on each piece
// between renewals, volatility knots and rho breakpoints.
template <class Fn>
double integrate_path(const MrpPath& path, Fn&& fn, std::span<const double> knots, const CorrelationCurve* rho) {
  double total = 0.0;
  std::vector<double> cuts;
  const std::size_t sojourns = path.states.size();
  for (std::size_t k = 0; k < sojourns; ++k) {
    const double a = path.jump_times[k];
    const double b = std::min(k + 1 < sojourns ? path.jump_times[k + 1] : path.horizon, path.horizon);
    if (!(b > a)) continue;
    const std::size_t x = path.states[k];
    cuts.assign({a, b});
    for (double knot : knots) {
      if (knot > 0.0 && a + knot < b) cuts.push_back(a + knot);
    }
    if (rho != nullptr) {
      for (double bp : rho->breakpoints()) {
        if (bp > a && bp < b) cuts.push_back(bp);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double l = cuts[i];
      const double r = cuts[i + 1];
      if (!(r > l)) continue;
      const double gl = l - a;
      const double gr = r - a;
      const double simpson = (r - l) / 6.0 * (fn(x, gl) + 4.0 * fn(x, 0.5 * (gl + gr)) + fn(x, gr));
      total += rho != nullptr ? (*rho)(0.5 * (l + r)) * simpson : simpson;
    }
  }
  return total;
}

std::vector<double> log_returns(std::span<const double> log_price) {
  if (log_price.size() < 3) throw Error(ErrorKind::InvalidArgument, "need at least two log-returns");
  std::vector<double> r(log_price.size() - 1);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = log_price[i + 1] - log_price[i];
  return r;
}

double scaled_cross_sum(std::span<const double> r1, std::span<const double> r2, double horizon) {
  if (r1.size() != r2.size()) throw Error(ErrorKind::InvalidArgument, "series lengths differ");
  std::vector<double> products(r1.size());
  for (std::size_t i = 0; i < r1.size(); ++i) products[i] = r1[i] * r2[i];
  const double n = static_cast<double>(r1.size());
  return n / ((n - 1.0) * horizon) * detail::pairwise_sum(products.data(), products.size());
}

}  // namespace

std::size_t MrpPath::sojourn_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return it == jump_times.begin() ? 0 : static_cast<std::size_t>(it - jump_times.begin()) - 1;
}

std::vector<double> MrpPath::occupation_times(std::size_t states_count) const {
  std::vector<double> occupied(states_count, 0.0);
  for (std::size_t k = 0; k < states.size(); ++k) {
    const double end = std::min(k + 1 < states.size() ? jump_times[k + 1] : horizon, horizon);
    occupied.at(states[k]) += end - jump_times[k];
  }
  return occupied;
}

MrpPath sample_path(const SemiMarkovModel& model, std::size_t initial_state, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "horizon must be > 0");
  if (initial_state >= model.states()) throw Error(ErrorKind::InvalidArgument, "initial state out of range");
  MrpPath path;
  path.horizon = horizon;
  path.jump_times.push_back(0.0);
  path.states.push_back(initial_state);
  double t = 0.0;
  std::size_t x = initial_state;
  for (;;) {
    const double d = sample_sojourn(model.law(x), rng);
    if (t + d > horizon) break;
    if (path.jump_times.size() > kMaxJumps) {
      throw Error(ErrorKind::PathExplosion, "more than 1e7 renewals before the horizon");
    }
    t += d;
    x = draw_next_state(model.transition_row(x), rng);
    path.jump_times.push_back(t);
    path.states.push_back(x);
  }
  return path;
}

double realized_variance_path(const MrpPath& path, const VolatilityField& sigma) {
  const auto knots = merged_knots(sigma, nullptr);
  const auto fn = [&](std::size_t x, double g) {
    const double s = sigma(x, g);
    return s * s;
  };
  return integrate_path(path, fn, knots, nullptr) / path.horizon;
}

double realized_covariance_path(const MrpPath& path, const VolatilityField& sigma1, const VolatilityField& sigma2,
                                const CorrelationCurve& rho) {
  const auto knots = merged_knots(sigma1, &sigma2);
  const auto fn = [&](std::size_t x, double g) { return sigma1(x, g) * sigma2(x, g); };
  return integrate_path(path, fn, knots, &rho) / path.horizon;
}

double realized_quadratic_variation_path(const MrpPath& path, const VolatilityField& sigma1,
                                         const VolatilityField& sigma2, const CorrelationCurve& rho, int sign) {
  if (sign != 1 && sign != -1) throw Error(ErrorKind::InvalidArgument, "sign must be +1 or -1");
  const auto knots = merged_knots(sigma1, &sigma2);
  const auto squares = [&](std::size_t x, double g) {
    const double a = sigma1(x, g);
    const double b = sigma2(x, g);
    return a * a + b * b;
  };
  const auto cross = [&](std::size_t x, double g) { return 2.0 * sign * sigma1(x, g) * sigma2(x, g); };
  return (integrate_path(path, squares, knots, nullptr) + integrate_path(path, cross, knots, &rho)) / path.horizon;
}

AssetPaths simulate_assets(const MrpPath& path, const VolatilityField& sigma1, const VolatilityField& sigma2,
                           const CorrelationCurve& rho, double rate, std::size_t steps, Rng& rng) {
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "need at least one step");
  const double T = path.horizon;
  const double dt = T / static_cast<double>(steps);
  const double root_dt = std::sqrt(dt);
  AssetPaths out;
  out.times.resize(steps + 1);
  out.log_price1.resize(steps + 1);
  out.log_price2.resize(steps + 1);
  out.times[0] = 0.0;
  out.log_price1[0] = 0.0;
  out.log_price2[0] = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t_next = k + 1 == steps ? T : static_cast<double>(k + 1) * dt;
    const std::size_t soj = path.sojourn_at(t);
    const std::size_t x = path.states[soj];
    const double g = t - path.jump_times[soj];
    const double v1 = sigma1(x, g);
    const double v2 = sigma2(x, g);
    const double rbar = rho.integral(t, t_next) / (t_next - t);
    if (!(std::abs(rbar) <= 1.0 + 1e-12)) {
      throw Error(ErrorKind::CorrelationOutOfRange, "step-average correlation outside [-1, 1]");
    }
    const double c = std::clamp(rbar, -1.0, 1.0);
    const double z1 = standard_normal(rng);
    const double z2 = c * z1 + std::sqrt(1.0 - c * c) * standard_normal(rng);
    out.times[k + 1] = t_next;
    out.log_price1[k + 1] = out.log_price1[k] + (rate - 0.5 * v1 * v1) * dt + v1 * root_dt * z1;
    out.log_price2[k + 1] = out.log_price2[k] + (rate - 0.5 * v2 * v2) * dt + v2 * root_dt * z2;
  }
  return out;
}

double discrete_covariance(std::span<const double> log_price1, std::span<const double> log_price2, double horizon) {
  const auto r1 = log_returns(log_price1);
  const auto r2 = log_returns(log_price2);
  return scaled_cross_sum(r1, r2, horizon);
}

double discrete_variance(std::span<const double> log_price, double horizon) {
  const auto r = log_returns(log_price);
  return scaled_cross_sum(r, r, horizon);
}

double discrete_correlation(std::span<const double> log_price1, std::span<const double> log_price2) {
  const double cov = discrete_covariance(log_price1, log_price2, 1.0);
  return cov / (std::sqrt(discrete_variance(log_price1, 1.0)) * std::sqrt(discrete_variance(log_price2, 1.0)));
}

McEstimate summarize(std::span<const double> values, std::uint64_t seed) {
  if (values.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = detail::pairwise_sum(values.data(), values.size()) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - mean) * (values[i] - mean);
  const double variance = detail::pairwise_sum(sq.data(), sq.size()) / (n - 1.0);
  return {mean, std::sqrt(variance / n), values.size(), seed, variance};
}

VarianceEstimate summarize_variance(std::span<const double> values) {
  if (values.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = detail::pairwise_sum(values.data(), values.size()) / n;
  std::vector<double> d2(values.size()), d4(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double s2 = detail::pairwise_sum(d2.data(), d2.size());
  const double m2 = s2 / n;
  const double m4 = detail::pairwise_sum(d4.data(), d4.size()) / n;
  return {s2 / (n - 1.0), std::sqrt(std::max(0.0, m4 - m2 * m2) / n), values.size()};
}

PathFunctionals simulate_functionals(const SemiMarkovModel& model, std::size_t initial_state, double horizon,
                                     const VolatilityField& sigma1, const VolatilityField* sigma2,
                                     const CorrelationCurve* rho, std::size_t n_paths, std::uint64_t seed) {
  require_valid(model);
  if (n_paths < 2) throw Error(ErrorKind::InvalidArgument, "need at least two paths");
  if ((sigma2 == nullptr) != (rho == nullptr)) {
    throw Error(ErrorKind::InvalidArgument, "second volatility field and correlation curve go together");
  }
  PathFunctionals out;
  out.variance1.resize(n_paths);
  if (sigma2 != nullptr) {
    out.variance2.resize(n_paths);
    out.covariance.resize(n_paths);
    out.correlation.resize(n_paths);
  }
  detail::parallel_for(n_paths, detail::worker_count(), [&](std::size_t i, std::size_t) {
    Rng rng = make_substream(seed, i);
    const MrpPath path = sample_path(model, initial_state, horizon, rng);
    out.variance1[i] = realized_variance_path(path, sigma1);
    if (sigma2 == nullptr) return;
    out.variance2[i] = realized_variance_path(path, *sigma2);
    out.covariance[i] = realized_covariance_path(path, sigma1, *sigma2, *rho);
    const double denom = std::sqrt(out.variance1[i]) * std::sqrt(out.variance2[i]);
    if (!(denom > 0.0)) throw Error(ErrorKind::DegenerateMean, "zero realized variance on a path");
    out.correlation[i] = out.covariance[i] / denom;
  });
  return out;
}

std::vector<double> swap_payoffs(const PathFunctionals& functionals, const SwapContract& contract) {
  contract.check();
  const std::vector<double>* source = &functionals.variance1;
  if (contract.kind == SwapKind::Covariance) source = &functionals.covariance;
  if (contract.kind == SwapKind::Correlation) source = &functionals.correlation;
  if (source->empty()) throw Error(ErrorKind::InvalidArgument, "functional not simulated for this swap kind");
  const double scale = contract.notional * contract.discount();
  std::vector<double> payoff(source->size());
  for (std::size_t i = 0; i < payoff.size(); ++i) {
    const double f = contract.kind == SwapKind::Volatility ? std::sqrt((*source)[i]) : (*source)[i];
    payoff[i] = scale * (f - contract.strike);
  }
  return payoff;
}

McEstimate estimate_swap(const SemiMarkovModel& model, std::size_t initial_state, const SwapContract& contract,
                         const VolatilityField& sigma1, const VolatilityField* sigma2, const CorrelationCurve* rho,
                         std::size_t n_paths, std::uint64_t seed) {
  contract.check();
  if (n_paths < 1000) throw Error(ErrorKind::InvalidArgument, "estimate_swap needs at least 1000 paths");
  const bool two_assets = contract.kind == SwapKind::Covariance || contract.kind == SwapKind::Correlation;
  if (two_assets && (sigma2 == nullptr || rho == nullptr)) {
    throw Error(ErrorKind::InvalidArgument, "two-asset swaps need a second volatility field and a correlation curve");
  }
  const auto functionals = simulate_functionals(model, initial_state, contract.maturity, sigma1,
                                                two_assets ? sigma2 : nullptr, two_assets ? rho : nullptr, n_paths,
                                                seed);
  const auto payoff = swap_payoffs(functionals, contract);
  return summarize(payoff, seed);
}

namespace {

// Exact antiderivative of the linear interpolant of Qf along gamma.
class CumulativeRate {
 public:
  explicit CumulativeRate(const GridFunction& qf) : shape_(qf.shape()), q_(qf.values().begin(), qf.values().end()) {
    cumulative_.resize(shape_.size());
    const double h = shape_.step();
    for (std::size_t x = 0; x < shape_.states; ++x) {
      cumulative_[shape_.index(x, 0)] = 0.0;
      for (std::size_t j = 1; j < shape_.nodes; ++j) {
        cumulative_[shape_.index(x, j)] =
            cumulative_[shape_.index(x, j - 1)] + 0.5 * h * (q_[shape_.index(x, j - 1)] + q_[shape_.index(x, j)]);
      }
    }
  }

  double operator()(std::size_t x, double gamma) const {
    const double h = shape_.step();
    const std::size_t last = shape_.nodes - 1;
    if (gamma >= shape_.gamma_max) {
      return cumulative_[shape_.index(x, last)] + q_[shape_.index(x, last)] * (gamma - shape_.gamma_max);
    }
    const std::size_t j = std::min(static_cast<std::size_t>(gamma / h), last - 1);
    const double d = gamma - static_cast<double>(j) * h;
    const double q0 = q_[shape_.index(x, j)];
    const double q1 = q_[shape_.index(x, j + 1)];
    return cumulative_[shape_.index(x, j)] + q0 * d + (q1 - q0) * d * d / (2.0 * h);
  }

 private:
  GridShape shape_;
  std::vector<double> q_;
  std::vector<double> cumulative_;
};

}  // namespace

MartingaleCheck martingale_check(const SemiMarkovModel& model, std::size_t initial_state,
                                 const GeneratorMatrix& generator, const GridFunction& f,
                                 std::vector<double> checkpoints, std::size_t n_paths, std::uint64_t seed) {
  if (checkpoints.empty()) throw Error(ErrorKind::InvalidArgument, "no checkpoints");
  std::sort(checkpoints.begin(), checkpoints.end());
  if (!(checkpoints.front() > 0.0)) throw Error(ErrorKind::InvalidArgument, "checkpoints must be > 0");
  if (n_paths < 2) throw Error(ErrorKind::InvalidArgument, "need at least two paths");
  require_valid(model);
  if (generator.shape().states != model.states()) {
    throw Error(ErrorKind::GridMismatch, "generator and model disagree on the state count");
  }
  const CumulativeRate integral(generator.apply(f));
  const double f0 = f.at_origin(initial_state);
  const std::size_t c = checkpoints.size();
  std::vector<double> m(c * n_paths);
  detail::parallel_for(n_paths, detail::worker_count(), [&](std::size_t i, std::size_t) {
    Rng rng = make_substream(seed, i);
    const MrpPath path = sample_path(model, initial_state, checkpoints.back(), rng);
    for (std::size_t k = 0; k < c; ++k) {
      const double t = checkpoints[k];
      const std::size_t last = path.sojourn_at(t);
      double compensator = 0.0;
      for (std::size_t s = 0; s <= last; ++s) {
        const double end = s < last ? path.jump_times[s + 1] : t;
        compensator += integral(path.states[s], end - path.jump_times[s]);
      }
      m[k * n_paths + i] = f.interpolate(path.states[last], t - path.jump_times[last]) - f0 - compensator;
    }
  });
  MartingaleCheck out;
  out.checkpoints = checkpoints;
  for (std::size_t k = 0; k < c; ++k) {
    const std::span<const double> row(m.data() + k * n_paths, n_paths);
    const auto est = summarize(row, seed);
    out.means.push_back(est.mean);
    out.standard_errors.push_back(est.standard_error);
    double z = 0.0;
    if (est.standard_error > 0.0) {
      z = est.mean / est.standard_error;
    } else if (est.mean != 0.0) {
      z = std::numeric_limits<double>::infinity();
    }
    out.z_scores.push_back(z);
    if (k + 1 == c) out.terminal_spread = summarize_variance(row);
  }
  return out;
}

}  // namespace smswap
