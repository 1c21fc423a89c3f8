#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "smswap/model.hpp"

namespace smswap {

/// Survival level the recurrence axis must reach at gamma_max.
inline constexpr double kTruncationTail = 1e-6;

/// Uniform nodes gamma_j = j*h, j = 0..nodes-1, on [0, gamma_max].
struct RecurrenceGrid {
  double gamma_max = 0.0;
  std::size_t nodes = 0;
  bool truncation_waiver = false;

  double step() const { return gamma_max / static_cast<double>(nodes - 1); }
  double node(std::size_t j) const { return static_cast<double>(j) * step(); }

  /// Throws InvalidArgument when nodes < 3 or gamma_max is not positive.
  void check() const;

  /// Smallest gamma_max (plus a small margin) at which every density-bearing
  /// law of the model has survival below kTruncationTail.
  static RecurrenceGrid covering(const SemiMarkovModel& model, std::size_t nodes);
};

/// Shape shared by grid functions: state-major, gamma contiguous.
struct GridShape {
  std::size_t states = 0;
  std::size_t nodes = 0;
  double gamma_max = 0.0;

  std::size_t size() const noexcept { return states * nodes; }
  std::size_t index(std::size_t state, std::size_t node) const noexcept { return state * nodes + node; }
  double step() const noexcept { return gamma_max / static_cast<double>(nodes - 1); }
  bool operator==(const GridShape&) const = default;
};

/// Values f(x_i, gamma_j) on a recurrence grid.
class GridFunction {
 public:
  GridFunction(GridShape shape, std::vector<double> values);

  static GridFunction constant(GridShape shape, double value);
  static GridFunction sample(GridShape shape, const std::function<double(std::size_t, double)>& fn);
  /// sigma(x, gamma) raised to `power` at the grid nodes.
  static GridFunction from_field(GridShape shape, const VolatilityField& field, int power = 1);

  const GridShape& shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::vector<double>& storage() noexcept { return values_; }

  double at(std::size_t state, std::size_t node) const { return values_[shape_.index(state, node)]; }
  /// f(x, 0), the value the pricing formulas read.
  double at_origin(std::size_t state) const { return values_[shape_.index(state, 0)]; }
  /// Linear interpolation in gamma, clamped to [0, gamma_max].
  double interpolate(std::size_t state, double gamma) const;

  /// Pointwise product; throws GridMismatch for different shapes.
  GridFunction operator*(const GridFunction& other) const;
  GridFunction operator-(const GridFunction& other) const;
  GridFunction scaled(double factor) const;

 private:
  GridShape shape_;
  std::vector<double> values_;
};

/// Discretized generator of (x_t, gamma(t)): first-order upwind transport in
/// gamma plus renewal jumps (x, gamma_j) -> (y, 0) at rate lambda_x(gamma_j) P(x,y).
/// The last gamma node has no transport term and renews at the hazard of
/// the law at gamma_max.
class GeneratorMatrix {
 public:
  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  const GridShape& shape() const noexcept { return shape_; }
  std::size_t dimension() const noexcept { return shape_.size(); }
  /// Renewal rate per node (hazard at that node), state-major.
  std::span<const double> renewal_rates() const noexcept { return rate_; }
  double transition(std::size_t from, std::size_t to) const { return transition_[from * shape_.states + to]; }
  /// Largest |Q_ii|.
  double max_exit_rate() const noexcept { return max_exit_rate_; }
  /// 0.5 * min(h, 1/max|Q_ii|).
  double stable_step() const noexcept { return stable_step_; }

  void apply(std::span<const double> f, std::span<double> out) const;
  /// Throws GridMismatch when f lives on another grid.
  GridFunction apply(const GridFunction& f) const;

  /// Nonzero entries in row-major order, duplicates merged.
  std::vector<Entry> entries() const;
  Eigen::MatrixXd dense() const;

 private:
  friend GeneratorMatrix build_generator(const SemiMarkovModel&, const RecurrenceGrid&);

  GridShape shape_;
  std::vector<double> transition_;
  std::vector<double> rate_;
  double max_exit_rate_ = 0.0;
  double stable_step_ = 0.0;
};

/// Throws InvalidModel for invalid models or laws without density, and
/// TruncationError when some survival at gamma_max is >= kTruncationTail
/// without a waiver.
GeneratorMatrix build_generator(const SemiMarkovModel& model, const RecurrenceGrid& grid);

enum class StepMethod { Euler, RK4 };

/// Solves u' = Q u on [0, t] from u(0) = f, i.e. computes e^{tQ} f.
/// Reuses its scratch buffers across calls.
class Propagator {
 public:
  explicit Propagator(const GeneratorMatrix& generator, StepMethod method = StepMethod::RK4);

  /// Advances u in place by time t >= 0 in equal steps no longer than
  /// stable_step() (Euler) or stable_step()/2 (RK4). RK4 results are checked against
  /// min(u) >= min(u(0)) - 1e-8 * max|u(0)|, else PositivityBreach.
  void advance(std::span<double> u, double t);

  const GeneratorMatrix& generator() const noexcept { return *generator_; }
  StepMethod method() const noexcept { return method_; }

 private:
  const GeneratorMatrix* generator_;
  StepMethod method_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

GridFunction propagate(const GeneratorMatrix& generator, const GridFunction& f, double t,
                       StepMethod method = StepMethod::RK4);

inline constexpr std::size_t kDenseLimit = 2000;

/// Scaling-and-squaring exponential of tQ. Throws DimensionTooLarge above kDenseLimit.
Eigen::MatrixXd expm_dense(const GeneratorMatrix& generator, double t);

}  // namespace smswap
