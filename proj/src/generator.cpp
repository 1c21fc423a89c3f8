#include "smswap/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "smswap/errors.hpp"
#include "smswap/simd/kernels.hpp"

namespace smswap {

void RecurrenceGrid::check() const {
  if (nodes < 3) throw Error(ErrorKind::InvalidArgument, "recurrence grid needs at least 3 nodes");
  if (!(std::isfinite(gamma_max) && gamma_max > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "recurrence grid gamma_max must be positive");
  }
}

RecurrenceGrid RecurrenceGrid::covering(const SemiMarkovModel& model, std::size_t nodes) {
  double reach = 0.0;
  for (const auto& law : model.laws()) {
    if (law.has_density()) reach = std::max(reach, law.tail_point(kTruncationTail));
  }
  if (reach <= 0.0) throw Error(ErrorKind::InvalidModel, "no density-bearing sojourn law to cover");
  return RecurrenceGrid{reach * 1.001, nodes, false};
}

GridFunction::GridFunction(GridShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw Error(ErrorKind::GridMismatch, "grid function has " + std::to_string(values_.size()) +
                                             " values, grid has " + std::to_string(shape_.size()) + " nodes");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "grid function values must be finite");
  }
}

GridFunction GridFunction::constant(GridShape shape, double value) {
  return GridFunction(shape, std::vector<double>(shape.size(), value));
}

GridFunction GridFunction::sample(GridShape shape, const std::function<double(std::size_t, double)>& fn) {
  std::vector<double> values(shape.size());
  const double h = shape.step();
  for (std::size_t x = 0; x < shape.states; ++x) {
    for (std::size_t j = 0; j < shape.nodes; ++j) values[shape.index(x, j)] = fn(x, static_cast<double>(j) * h);
  }
  return GridFunction(shape, std::move(values));
}

GridFunction GridFunction::from_field(GridShape shape, const VolatilityField& field, int power) {
  if (field.states() != shape.states) {
    throw Error(ErrorKind::InvalidArgument, "volatility field has " + std::to_string(field.states()) +
                                                " states, grid has " + std::to_string(shape.states));
  }
  return sample(shape, [&field, power](std::size_t x, double gamma) {
    const double s = field(x, gamma);
    double out = 1.0;
    for (int k = 0; k < power; ++k) out *= s;
    return out;
  });
}

double GridFunction::interpolate(std::size_t state, double gamma) const {
  const double h = shape_.step();
  const double pos = std::clamp(gamma, 0.0, shape_.gamma_max) / h;
  std::size_t j = static_cast<std::size_t>(pos);
  if (j >= shape_.nodes - 1) return at(state, shape_.nodes - 1);
  const double w = pos - static_cast<double>(j);
  return at(state, j) + w * (at(state, j + 1) - at(state, j));
}

GridFunction GridFunction::operator*(const GridFunction& other) const {
  if (!(shape_ == other.shape_)) throw Error(ErrorKind::GridMismatch, "operands live on different grids");
  std::vector<double> out(values_.size());
  simd::kernels().multiply(out.data(), values_.data(), other.values_.data(), out.size());
  return GridFunction(shape_, std::move(out));
}

GridFunction GridFunction::operator-(const GridFunction& other) const {
  if (!(shape_ == other.shape_)) throw Error(ErrorKind::GridMismatch, "operands live on different grids");
  std::vector<double> out(values_.size());
  simd::kernels().axpy(out.data(), values_.data(), -1.0, other.values_.data(), out.size());
  return GridFunction(shape_, std::move(out));
}

GridFunction GridFunction::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return GridFunction(shape_, std::move(out));
}

GeneratorMatrix build_generator(const SemiMarkovModel& model, const RecurrenceGrid& grid) {
  require_valid(model);
  grid.check();
  const std::size_t m = model.states();
  const std::size_t n = grid.nodes;
  const double h = grid.step();

  for (std::size_t x = 0; x < m; ++x) {
    const auto& law = model.law(x);
    if (!law.has_density()) {
      throw Error(ErrorKind::InvalidModel,
                  "state " + std::to_string(x) + " has a deterministic sojourn law; the generator needs a density");
    }
    const double tail = law.survival(grid.gamma_max);
    if (tail >= kTruncationTail && !grid.truncation_waiver) {
      std::ostringstream os;
      os << "state " << x << ": survival " << tail << " at gamma_max=" << grid.gamma_max << " is not below "
         << kTruncationTail;
      throw Error(ErrorKind::TruncationError, os.str());
    }
  }

  GeneratorMatrix q;
  q.shape_ = GridShape{m, n, grid.gamma_max};
  q.transition_.resize(m * m);
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t y = 0; y < m; ++y) q.transition_[x * m + y] = model.transition(x, y);
  }

  q.rate_.resize(m * n);
  double max_exit = 0.0;
  for (std::size_t x = 0; x < m; ++x) {
    const auto& law = model.law(x);
    double last_rate = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double gamma = static_cast<double>(j) * h;
      double rate;
      try {
        rate = hazard(law, gamma);
        if (!std::isfinite(rate)) {
          // Singular hazard at the origin: use the cell average over [0, h].
          rate = -std::log(law.survival(h)) / h;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SurvivalUnderflow) throw;
        // Mass out here is below the survival floor; hold the last usable rate.
        rate = last_rate;
      }
      last_rate = rate;
      q.rate_[x * n + j] = rate;
      const double advection = j + 1 < n ? 1.0 / h : 0.0;
      const double self = j == 0 ? rate * model.transition(x, x) : 0.0;
      max_exit = std::max(max_exit, std::abs(-(advection + rate) + self));
    }
  }
  q.max_exit_rate_ = max_exit;
  q.stable_step_ = 0.5 * std::min(h, max_exit > 0.0 ? 1.0 / max_exit : h);
  return q;
}

void GeneratorMatrix::apply(std::span<const double> f, std::span<double> out) const {
  const std::size_t m = shape_.states;
  const std::size_t n = shape_.nodes;
  const double inv_h = 1.0 / shape_.step();
  const auto& k = simd::kernels();
  for (std::size_t x = 0; x < m; ++x) {
    double renewal = 0.0;
    for (std::size_t y = 0; y < m; ++y) renewal += transition_[x * m + y] * f[y * n];
    k.transport_renewal(f.data() + x * n, rate_.data() + x * n, inv_h, renewal, out.data() + x * n, n);
  }
}

GridFunction GeneratorMatrix::apply(const GridFunction& f) const {
  if (!(f.shape() == shape_)) throw Error(ErrorKind::GridMismatch, "function and generator grids differ");
  std::vector<double> out(dimension());
  apply(f.values(), out);
  return GridFunction(shape_, std::move(out));
}

std::vector<GeneratorMatrix::Entry> GeneratorMatrix::entries() const {
  const std::size_t m = shape_.states;
  const std::size_t n = shape_.nodes;
  const double inv_h = 1.0 / shape_.step();
  std::vector<Entry> out;
  std::vector<Entry> row;
  for (std::size_t x = 0; x < m; ++x) {
    for (std::size_t j = 0; j < n; ++j) {
      row.clear();
      const std::size_t r = shape_.index(x, j);
      const double rate = rate_[r];
      const double advection = j + 1 < n ? inv_h : 0.0;
      row.push_back({r, r, -(advection + rate)});
      if (advection > 0.0) row.push_back({r, r + 1, advection});
      for (std::size_t y = 0; y < m; ++y) {
        const double p = transition_[x * m + y];
        if (p > 0.0 && rate > 0.0) row.push_back({r, shape_.index(y, 0), rate * p});
      }
      std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
      for (const auto& e : row) {
        if (!out.empty() && out.back().row == e.row && out.back().col == e.col) {
          out.back().value += e.value;
        } else {
          out.push_back(e);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd GeneratorMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries()) out(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
  return out;
}

Propagator::Propagator(const GeneratorMatrix& generator, StepMethod method)
    : generator_(&generator), method_(method) {
  const std::size_t n = generator.dimension();
  k1_.resize(n);
  if (method_ == StepMethod::RK4) {
    k2_.resize(n);
    k3_.resize(n);
    k4_.resize(n);
    tmp_.resize(n);
  }
}

void Propagator::advance(std::span<double> u, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "propagation time must be >= 0");
  if (u.size() != generator_->dimension()) throw Error(ErrorKind::GridMismatch, "vector length differs from grid");
  if (t == 0.0) return;
  // RK4 takes half the stability bound to keep the stiff hazard modes accurate.
  const double max_dt = generator_->stable_step() * (method_ == StepMethod::RK4 ? 0.5 : 1.0);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / max_dt * (1.0 - 1e-12))));
  const double dt = t / static_cast<double>(steps);
  const std::size_t n = u.size();
  const auto& k = simd::kernels();

  if (method_ == StepMethod::Euler) {
    for (std::size_t s = 0; s < steps; ++s) {
      generator_->apply(u, k1_);
      k.axpy(u.data(), u.data(), dt, k1_.data(), n);
    }
    return;
  }

  double lo0 = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (double v : u) {
    lo0 = std::min(lo0, v);
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t s = 0; s < steps; ++s) {
    generator_->apply(u, k1_);
    k.axpy(tmp_.data(), u.data(), 0.5 * dt, k1_.data(), n);
    generator_->apply(tmp_, k2_);
    k.axpy(tmp_.data(), u.data(), 0.5 * dt, k2_.data(), n);
    generator_->apply(tmp_, k3_);
    k.axpy(tmp_.data(), u.data(), dt, k3_.data(), n);
    generator_->apply(tmp_, k4_);
    k.rk4_combine(u.data(), k1_.data(), k2_.data(), k3_.data(), k4_.data(), dt, n);
  }
  const double lo = *std::min_element(u.begin(), u.end());
  if (lo < lo0 - 1e-8 * scale) {
    std::ostringstream os;
    os << "RK4 minimum " << lo << " fell below initial minimum " << lo0 << "; rerun with Euler or a finer step";
    throw Error(ErrorKind::PositivityBreach, os.str());
  }
}

GridFunction propagate(const GeneratorMatrix& generator, const GridFunction& f, double t, StepMethod method) {
  if (!(f.shape() == generator.shape())) throw Error(ErrorKind::GridMismatch, "function and generator grids differ");
  std::vector<double> u(f.values().begin(), f.values().end());
  Propagator(generator, method).advance(u, t);
  return GridFunction(f.shape(), std::move(u));
}

Eigen::MatrixXd expm_dense(const GeneratorMatrix& generator, double t) {
  if (generator.dimension() > kDenseLimit) {
    throw Error(ErrorKind::DimensionTooLarge, "dense exponential limited to " + std::to_string(kDenseLimit) +
                                                  " nodes, generator has " + std::to_string(generator.dimension()));
  }
  Eigen::MatrixXd scaled = generator.dense() * t;
  return scaled.exp();
}

}  // namespace smswap
