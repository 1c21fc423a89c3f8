#include "smswap/moments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parallel.hpp"
#include "smswap/errors.hpp"
#include "smswap/simd/kernels.hpp"

namespace smswap {

namespace {

void check_horizon(double horizon) {
  if (!(std::isfinite(horizon) && horizon > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "horizon must be finite and > 0");
  }
}

void check_state(const GridShape& shape, std::size_t state) {
  if (state >= shape.states) {
    throw Error(ErrorKind::InvalidArgument, "initial state " + std::to_string(state) + " out of range");
  }
}

// u_k = e^{k*dt*Q} f for k = 0..count-1, full vectors.
std::vector<std::vector<double>> power_sweep(const GeneratorMatrix& generator, const GridFunction& f,
                                             std::size_t count, double dt, StepMethod step) {
  std::vector<std::vector<double>> out;
  out.reserve(count);
  out.emplace_back(f.values().begin(), f.values().end());
  Propagator prop(generator, step);
  for (std::size_t k = 1; k < count; ++k) {
    out.push_back(out.back());
    prop.advance(out.back(), dt);
  }
  return out;
}

}  // namespace

void QuadratureSpec::check() const {
  if (nodes < 8) throw Error(ErrorKind::InvalidArgument, "quadrature needs at least 8 nodes");
}

std::vector<double> QuadratureSpec::uniform_times(double horizon) const {
  check();
  std::vector<double> t(nodes);
  for (std::size_t k = 0; k < nodes; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(nodes - 1);
  t.back() = horizon;
  return t;
}

std::vector<double> QuadratureSpec::node_times(double horizon) const {
  auto t = uniform_times(horizon);
  const double tol = 1e-12 * horizon;
  for (double b : breakpoints) {
    if (b <= tol || b >= horizon - tol) continue;
    const auto it = std::lower_bound(t.begin(), t.end(), b);
    const bool near_next = it != t.end() && std::abs(*it - b) <= tol;
    const bool near_prev = it != t.begin() && std::abs(*(it - 1) - b) <= tol;
    if (near_next) {
      *it = b;
    } else if (near_prev) {
      *(it - 1) = b;
    } else {
      t.insert(it, b);
    }
  }
  return t;
}

QuadratureSpec QuadratureSpec::refined() const { return QuadratureSpec{2 * nodes - 1, breakpoints}; }

const char* to_string(MomentMethod method) noexcept {
  return method == MomentMethod::ExactOperator ? "exact-operator" : "first-order";
}

double trapezoid(std::span<const double> times, std::span<const double> values) {
  double total = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    total += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
  }
  return total;
}

double weighted_trapezoid(std::span<const double> times, std::span<const double> values,
                          const CorrelationCurve& rho) {
  if (rho.is_constant()) return rho(0.0) * trapezoid(times, values);
  const auto bps = rho.breakpoints();
  double total = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double a = times[k - 1];
    const double b = times[k];
    if (b <= a) continue;
    const double slope = (values[k] - values[k - 1]) / (b - a);
    auto line = [&](double t) { return values[k - 1] + slope * (t - a); };
    double lo = a;
    auto it = std::upper_bound(bps.begin(), bps.end(), a);
    while (lo < b) {
      const double hi = (it != bps.end() && *it < b) ? *it : b;
      total += rho(0.5 * (lo + hi)) * 0.5 * (hi - lo) * (line(lo) + line(hi));
      lo = hi;
      if (it != bps.end()) ++it;
    }
  }
  return total;
}

double MomentCurve::integral() const { return trapezoid(times, values); }

double MomentCurve::integral(const CorrelationCurve& rho) const { return weighted_trapezoid(times, values, rho); }

MomentCurve moment_curve(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                         double horizon, const QuadratureSpec& quad, StepMethod step) {
  check_horizon(horizon);
  check_state(generator.shape(), initial_state);
  if (!(f.shape() == generator.shape())) throw Error(ErrorKind::GridMismatch, "function and generator grids differ");
  MomentCurve curve;
  curve.method = MomentMethod::ExactOperator;
  curve.times = quad.node_times(horizon);
  curve.values.reserve(curve.times.size());
  std::vector<double> u(f.values().begin(), f.values().end());
  const std::size_t origin = generator.shape().index(initial_state, 0);
  Propagator prop(generator, step);
  curve.values.push_back(u[origin]);
  for (std::size_t k = 1; k < curve.times.size(); ++k) {
    prop.advance(u, curve.times[k] - curve.times[k - 1]);
    curve.values.push_back(u[origin]);
  }
  return curve;
}

MomentCurve second_moment_curve(const GeneratorMatrix& generator, const GridFunction& sigma2,
                                std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                                StepMethod step) {
  return moment_curve(generator, sigma2, initial_state, horizon, quad, step);
}

MomentCurve fourth_moment_curve(const GeneratorMatrix& generator, const GridFunction& sigma4,
                                std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                                StepMethod step) {
  return moment_curve(generator, sigma4, initial_state, horizon, quad, step);
}

MomentCurve mixed_moment_curve(const GeneratorMatrix& generator, const GridFunction& product,
                               std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                               StepMethod step) {
  return moment_curve(generator, product, initial_state, horizon, quad, step);
}

MomentCurve first_order_curve(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                              double horizon, const QuadratureSpec& quad) {
  check_horizon(horizon);
  check_state(generator.shape(), initial_state);
  const GridFunction qf = generator.apply(f);
  const double base = f.at_origin(initial_state);
  const double slope = qf.at_origin(initial_state);
  MomentCurve curve;
  curve.method = MomentMethod::FirstOrder;
  curve.times = quad.node_times(horizon);
  for (double t : curve.times) curve.values.push_back(base + t * slope);
  return curve;
}

TimeAverage time_average(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                         double horizon, const QuadratureSpec& quad, const CorrelationCurve* rho,
                         StepMethod step) {
  auto integrate = [&](const QuadratureSpec& q) {
    const auto curve = moment_curve(generator, f, initial_state, horizon, q, step);
    return (rho != nullptr ? curve.integral(*rho) : curve.integral()) / horizon;
  };
  TimeAverage out;
  out.value = integrate(quad);
  out.refined = integrate(quad.refined());
  out.error_estimate = std::abs(out.value - out.refined) * 4.0 / 3.0;
  return out;
}

RealizedVarianceSpread variance_of_realized_variance(const GeneratorMatrix& generator, const GridFunction& sigma2,
                                                     std::size_t initial_state, double horizon,
                                                     const QuadratureSpec& quad, StepMethod step) {
  check_horizon(horizon);
  check_state(generator.shape(), initial_state);
  if (!(sigma2.shape() == generator.shape())) {
    throw Error(ErrorKind::GridMismatch, "function and generator grids differ");
  }
  const auto times = quad.uniform_times(horizon);
  const std::size_t n = times.size();
  const double dt = times[1] - times[0];
  const std::size_t origin = generator.shape().index(initial_state, 0);
  const std::size_t dim = generator.dimension();

  // Cached lags u_k = e^{k dt Q} sigma^2 and the mean curve E_k.
  const auto lags = power_sweep(generator, sigma2, n, dt, step);
  std::vector<double> mean(n);
  for (std::size_t k = 0; k < n; ++k) mean[k] = lags[k][origin];

  // joint[j][k] = e^{t_j Q}[sigma^2 * u_k](x0, 0) = E{sigma^2_{t_j} sigma^2_{t_j + t_k}}.
  std::vector<std::vector<double>> joint(n, std::vector<double>(n, 0.0));
  const std::size_t workers = detail::worker_count();
  std::vector<Propagator> props;
  std::vector<std::vector<double>> scratch(std::min(workers, n), std::vector<double>(dim));
  for (std::size_t w = 0; w < scratch.size(); ++w) props.emplace_back(generator, step);
  detail::parallel_for(n, workers, [&](std::size_t k, std::size_t w) {
    auto& v = scratch[w];
    simd::kernels().multiply(v.data(), sigma2.values().data(), lags[k].data(), dim);
    joint[0][k] = v[origin];
    for (std::size_t j = 1; j + k < n; ++j) {
      props[w].advance(v, dt);
      joint[j][k] = v[origin];
    }
  });

  // Integrand at t = t_i >= s = t_j.
  auto cov = [&](std::size_t i, std::size_t j) { return joint[j][i - j] - mean[i] * mean[j]; };

  double triangular = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j <= i; ++j) inner += cov(i, j);
    inner = dt * (inner - 0.5 * (cov(i, 0) + cov(i, i)));
    const double w = (i == n - 1) ? 0.5 * dt : dt;
    triangular += w * inner;
  }
  triangular *= 2.0 / (horizon * horizon);

  double symmetric = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = (i == 0 || i == n - 1) ? 0.5 * dt : dt;
    for (std::size_t j = 0; j < n; ++j) {
      const double wj = (j == 0 || j == n - 1) ? 0.5 * dt : dt;
      symmetric += wi * wj * (i >= j ? cov(i, j) : cov(j, i));
    }
  }
  symmetric /= horizon * horizon;

  RealizedVarianceSpread out;
  out.unclamped = triangular;
  out.symmetric = symmetric;
  out.mean = trapezoid(times, mean) / horizon;
  if (triangular < -1e-10) {
    std::ostringstream os;
    os << "variance of realized variance " << triangular << " < -1e-10; refine the grid or quadrature";
    throw Error(ErrorKind::NegativeVariance, os.str());
  }
  out.value = std::max(triangular, 0.0);
  return out;
}

CrossMoment cross_moment(const GeneratorMatrix& generator, const GridFunction& p, const GridFunction& q,
                         const CorrelationCurve& rho, std::size_t initial_state, double horizon,
                         const QuadratureSpec& quad, StepMethod step) {
  check_horizon(horizon);
  check_state(generator.shape(), initial_state);
  if (!(p.shape() == generator.shape()) || !(q.shape() == generator.shape())) {
    throw Error(ErrorKind::GridMismatch, "function and generator grids differ");
  }
  const auto times = quad.uniform_times(horizon);
  const std::size_t n = times.size();
  const double dt = times[1] - times[0];
  const std::size_t origin = generator.shape().index(initial_state, 0);
  const std::size_t dim = generator.dimension();

  const auto p_lags = power_sweep(generator, p, n, dt, step);
  const auto q_lags = power_sweep(generator, q, n, dt, step);

  // kernel[i][j] = E{p(t_i) q(t_j)}.
  std::vector<std::vector<double>> kernel(n, std::vector<double>(n, 0.0));
  const std::size_t workers = detail::worker_count();
  std::vector<Propagator> props;
  std::vector<std::vector<double>> scratch(std::min(workers, n), std::vector<double>(dim));
  for (std::size_t w = 0; w < scratch.size(); ++w) props.emplace_back(generator, step);
  // Task 2k sweeps s < t at lag k (conditioning on F_s), task 2k+1 sweeps s > t.
  detail::parallel_for(2 * n, workers, [&](std::size_t task, std::size_t w) {
    const std::size_t k = task / 2;
    const bool later_q = task % 2 == 1;
    if (later_q && k == 0) return;
    auto& v = scratch[w];
    if (!later_q) {
      simd::kernels().multiply(v.data(), p_lags[k].data(), q.values().data(), dim);
    } else {
      simd::kernels().multiply(v.data(), p.values().data(), q_lags[k].data(), dim);
    }
    for (std::size_t j = 0; j + k < n; ++j) {
      if (j > 0) props[w].advance(v, dt);
      if (!later_q) {
        kernel[j + k][j] = v[origin];
      } else {
        kernel[j][j + k] = v[origin];
      }
    }
  });

  std::vector<double> inner(n);
  for (std::size_t i = 0; i < n; ++i) inner[i] = trapezoid(times, kernel[i]);
  std::vector<double> p_mean(n), q_mean(n);
  for (std::size_t k = 0; k < n; ++k) {
    p_mean[k] = p_lags[k][origin];
    q_mean[k] = q_lags[k][origin];
  }
  const double t2 = horizon * horizon;
  CrossMoment out;
  out.value = weighted_trapezoid(times, inner, rho) / t2;
  out.mean_product = weighted_trapezoid(times, p_mean, rho) * trapezoid(times, q_mean) / t2;
  return out;
}

}  // namespace smswap
