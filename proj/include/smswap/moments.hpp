#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smswap/generator.hpp"
#include "smswap/model.hpp"

namespace smswap {

/// Trapezoid nodes on [0, T]. Breakpoints (typically those of rho_t) are
/// merged into the uniform node set of single-time integrals.
struct QuadratureSpec {
  std::size_t nodes = 64;
  std::vector<double> breakpoints;

  void check() const;
  std::vector<double> node_times(double horizon) const;
  std::vector<double> uniform_times(double horizon) const;
  /// Same quadrature with every interval halved.
  QuadratureSpec refined() const;
};

enum class MomentMethod { ExactOperator, FirstOrder };

const char* to_string(MomentMethod method) noexcept;

/// E_k = [e^{t_k Q} f](x0, 0) on the quadrature nodes.
struct MomentCurve {
  std::vector<double> times;
  std::vector<double> values;
  MomentMethod method = MomentMethod::ExactOperator;

  /// Trapezoid integral over [0, T].
  double integral() const;
  /// Integral of rho_t times the piecewise-linear interpolant of the curve.
  double integral(const CorrelationCurve& rho) const;
};

double trapezoid(std::span<const double> times, std::span<const double> values);
/// Exact integral of rho (piecewise constant) times the linear interpolant
/// of (times, values); breakpoints inside an interval split it.
double weighted_trapezoid(std::span<const double> times, std::span<const double> values,
                          const CorrelationCurve& rho);

MomentCurve moment_curve(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                         double horizon, const QuadratureSpec& quad, StepMethod step = StepMethod::RK4);

/// E{sigma^2(x_t, gamma(t))}; `sigma2` is the pointwise square of the field.
MomentCurve second_moment_curve(const GeneratorMatrix& generator, const GridFunction& sigma2,
                                std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                                StepMethod step = StepMethod::RK4);

/// E{sigma^4(x_t, gamma(t))}.
MomentCurve fourth_moment_curve(const GeneratorMatrix& generator, const GridFunction& sigma4,
                                std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                                StepMethod step = StepMethod::RK4);

/// E{sigma1 sigma2 (x_t, gamma(t))}.
MomentCurve mixed_moment_curve(const GeneratorMatrix& generator, const GridFunction& product,
                               std::size_t initial_state, double horizon, const QuadratureSpec& quad,
                               StepMethod step = StepMethod::RK4);

/// (I + tQ) f evaluated at (x0, 0).
MomentCurve first_order_curve(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                              double horizon, const QuadratureSpec& quad);

/// (1/T) * integral, at the requested resolution and on the refined grid,
/// with the Richardson estimate |coarse - refined| * 4/3 of the coarse error.
struct TimeAverage {
  double value = 0.0;
  double refined = 0.0;
  double error_estimate = 0.0;
};

TimeAverage time_average(const GeneratorMatrix& generator, const GridFunction& f, std::size_t initial_state,
                         double horizon, const QuadratureSpec& quad, const CorrelationCurve* rho = nullptr,
                         StepMethod step = StepMethod::RK4);

struct RealizedVarianceSpread {
  /// Triangular assembly, tiny negatives clamped to 0.
  double value = 0.0;
  double unclamped = 0.0;
  /// Same integrand assembled on the full square.
  double symmetric = 0.0;
  /// (1/T) * integral of E{sigma^2} from the same uniform grid.
  double mean = 0.0;
};

/// Var{(1/T) int_0^T sigma^2 dt} from
/// (2/T^2) int_0^T int_0^t e^{sQ}[sigma^2 e^{(t-s)Q} sigma^2] - E_t E_s ds dt
/// on uniform nodes. Throws NegativeVariance below -1e-10.
RealizedVarianceSpread variance_of_realized_variance(const GeneratorMatrix& generator, const GridFunction& sigma2,
                                                     std::size_t initial_state, double horizon,
                                                     const QuadratureSpec& quad,
                                                     StepMethod step = StepMethod::RK4);

/// E{X * W} with X = (1/T) int rho_t p(x_t, gamma(t)) dt and
/// W = (1/T) int q(x_s, gamma(s)) ds, split at s = t and evaluated through
/// the Markov property, plus E{X} E{W} from the same grid.
struct CrossMoment {
  double value = 0.0;
  double mean_product = 0.0;
};

CrossMoment cross_moment(const GeneratorMatrix& generator, const GridFunction& p, const GridFunction& q,
                         const CorrelationCurve& rho, std::size_t initial_state, double horizon,
                         const QuadratureSpec& quad, StepMethod step = StepMethod::RK4);

}  // namespace smswap
