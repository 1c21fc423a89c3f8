#include "smswap/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "smswap/errors.hpp"

namespace smswap {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void require_positive(double v, const char* what) {
  if (!positive(v)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be finite and > 0");
  }
}

// Hazard at the origin for shape-parameter families: 0, 1/scale or +inf.
double origin_hazard(double shape, double scale) {
  if (shape > 1.0) return 0.0;
  if (shape == 1.0) return 1.0 / scale;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

SojournLaw::SojournLaw(Family family) : family_(family) {
  std::visit(overloaded{
                 [](const Exponential& e) { require_positive(e.rate, "exponential rate"); },
                 [](const Weibull& w) {
                   require_positive(w.shape, "weibull shape");
                   require_positive(w.scale, "weibull scale");
                 },
                 [](const GammaLaw& g) {
                   require_positive(g.shape, "gamma shape");
                   require_positive(g.scale, "gamma scale");
                 },
                 [](const Deterministic& d) { require_positive(d.duration, "deterministic duration"); },
             },
             family_);
}

std::string_view SojournLaw::name() const noexcept {
  return std::visit(overloaded{
                        [](const Exponential&) { return std::string_view("exponential"); },
                        [](const Weibull&) { return std::string_view("weibull"); },
                        [](const GammaLaw&) { return std::string_view("gamma"); },
                        [](const Deterministic&) { return std::string_view("deterministic"); },
                    },
                    family_);
}

bool SojournLaw::has_density() const noexcept {
  return !std::holds_alternative<Deterministic>(family_);
}

double SojournLaw::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  return std::visit(overloaded{
                        [t](const Exponential& e) { return -std::expm1(-e.rate * t); },
                        [t](const Weibull& w) { return -std::expm1(-std::pow(t / w.scale, w.shape)); },
                        [t](const GammaLaw& g) { return boost::math::gamma_p(g.shape, t / g.scale); },
                        [t](const Deterministic& d) { return t >= d.duration ? 1.0 : 0.0; },
                    },
                    family_);
}

double SojournLaw::survival(double t) const {
  if (t <= 0.0) return 1.0;
  return std::visit(overloaded{
                        [t](const Exponential& e) { return std::exp(-e.rate * t); },
                        [t](const Weibull& w) { return std::exp(-std::pow(t / w.scale, w.shape)); },
                        [t](const GammaLaw& g) { return boost::math::gamma_q(g.shape, t / g.scale); },
                        [t](const Deterministic& d) { return t >= d.duration ? 0.0 : 1.0; },
                    },
                    family_);
}

double SojournLaw::density(double t) const {
  if (t < 0.0) return 0.0;
  return std::visit(
      overloaded{
          [t](const Exponential& e) { return e.rate * std::exp(-e.rate * t); },
          [t](const Weibull& w) {
            if (t == 0.0) return origin_hazard(w.shape, w.scale);
            const double z = t / w.scale;
            return (w.shape / w.scale) * std::pow(z, w.shape - 1.0) * std::exp(-std::pow(z, w.shape));
          },
          [t](const GammaLaw& g) {
            if (t == 0.0) return origin_hazard(g.shape, g.scale);
            return boost::math::gamma_p_derivative(g.shape, t / g.scale) / g.scale;
          },
          [](const Deterministic&) -> double {
            throw Error(ErrorKind::InvalidArgument, "deterministic sojourn law has no density");
          },
      },
      family_);
}

double SojournLaw::mean() const {
  return std::visit(overloaded{
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const Weibull& w) { return w.scale * std::tgamma(1.0 + 1.0 / w.shape); },
                        [](const GammaLaw& g) { return g.shape * g.scale; },
                        [](const Deterministic& d) { return d.duration; },
                    },
                    family_);
}

double SojournLaw::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile level must lie in (0, 1)");
  }
  return std::visit(overloaded{
                        [u](const Exponential& e) { return -std::log1p(-u) / e.rate; },
                        [u](const Weibull& w) { return w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape); },
                        [u](const GammaLaw& g) { return g.scale * boost::math::gamma_p_inv(g.shape, u); },
                        [](const Deterministic& d) { return d.duration; },
                    },
                    family_);
}

double SojournLaw::tail_point(double tail) const {
  if (!(tail > 0.0 && tail < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "tail level must lie in (0, 1)");
  }
  return std::visit(overloaded{
                        [tail](const Exponential& e) { return -std::log(tail) / e.rate; },
                        [tail](const Weibull& w) { return w.scale * std::pow(-std::log(tail), 1.0 / w.shape); },
                        [tail](const GammaLaw& g) { return g.scale * boost::math::gamma_q_inv(g.shape, tail); },
                        [](const Deterministic& d) { return d.duration; },
                    },
                    family_);
}

double hazard(const SojournLaw& law, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "hazard requires t >= 0");
  if (!law.has_density()) {
    throw Error(ErrorKind::InvalidArgument, "deterministic sojourn law has no hazard rate");
  }
  const double surv = law.survival(t);
  if (surv < kSurvivalFloor) {
    std::ostringstream os;
    os << law.name() << " survival " << surv << " at t=" << t << " is below the floor";
    throw Error(ErrorKind::SurvivalUnderflow, os.str());
  }
  return std::visit(overloaded{
                        [](const Exponential& e) { return e.rate; },
                        [t](const Weibull& w) {
                          if (t == 0.0) return origin_hazard(w.shape, w.scale);
                          return (w.shape / w.scale) * std::pow(t / w.scale, w.shape - 1.0);
                        },
                        [t, surv, &law](const GammaLaw& g) {
                          if (t == 0.0) return origin_hazard(g.shape, g.scale);
                          return law.density(t) / surv;
                        },
                        [](const Deterministic&) { return 0.0; },
                    },
                    law.family());
}

double sample_sojourn(const SojournLaw& law, Rng& rng) {
  if (const auto* d = std::get_if<Deterministic>(&law.family())) return d->duration;
  double draw = law.quantile(uniform_open(rng));
  // Quantiles of u near 0 can round to zero for steep laws.
  return std::max(draw, std::numeric_limits<double>::min());
}

SemiMarkovModel::SemiMarkovModel(std::vector<std::vector<double>> transition, std::vector<SojournLaw> laws)
    : states_(transition.size()), transition_(transition.size() * transition.size(), 0.0), laws_(std::move(laws)) {
  row_lengths_.reserve(states_);
  for (std::size_t i = 0; i < states_; ++i) {
    row_lengths_.push_back(transition[i].size());
    for (std::size_t j = 0; j < std::min(states_, transition[i].size()); ++j) {
      transition_[i * states_ + j] = transition[i][j];
    }
  }
}

bool ValidationReport::valid() const noexcept {
  return std::none_of(issues.begin(), issues.end(),
                      [](const ValidationIssue& i) { return i.severity == Severity::Error; });
}

std::vector<ValidationIssue> ValidationReport::errors() const {
  std::vector<ValidationIssue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out),
               [](const ValidationIssue& i) { return i.severity == Severity::Error; });
  return out;
}

std::vector<ValidationIssue> ValidationReport::advisories() const {
  std::vector<ValidationIssue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out),
               [](const ValidationIssue& i) { return i.severity == Severity::Advisory; });
  return out;
}

ValidationReport validate(const SemiMarkovModel& model) {
  ValidationReport report;
  auto add = [&report](Severity s, std::string code, int state, std::string msg) {
    report.issues.push_back({s, std::move(code), state, std::move(msg)});
  };
  const std::size_t m = model.states();
  if (m == 0) {
    add(Severity::Error, "empty_state_space", -1, "model must have at least one state");
    return report;
  }
  for (std::size_t x = 0; x < m; ++x) {
    const int sx = static_cast<int>(x);
    if (model.row_lengths()[x] != m) {
      add(Severity::Error, "ragged_row", sx,
          "transition row has " + std::to_string(model.row_lengths()[x]) + " entries, expected " +
              std::to_string(m));
      continue;
    }
    double sum = 0.0;
    for (std::size_t y = 0; y < m; ++y) {
      const double p = model.transition(x, y);
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        add(Severity::Error, "entry_out_of_range", sx,
            "P(" + std::to_string(x) + "," + std::to_string(y) + ") = " + std::to_string(p) +
                " is outside [0, 1]");
      }
      sum += p;
    }
    if (!(std::abs(sum - 1.0) <= 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "row sum " << sum << " differs from 1";
      add(Severity::Error, "row_sum", sx, os.str());
    }
    if (model.transition(x, x) > 0.0) {
      add(Severity::Advisory, "self_transition", sx,
          "P(x,x) > 0: a renewal into the same state resets the recurrence time");
    }
  }
  if (model.laws().size() < m) {
    for (std::size_t x = model.laws().size(); x < m; ++x) {
      add(Severity::Error, "missing_law", static_cast<int>(x), "state has no sojourn law");
    }
  } else if (model.laws().size() > m) {
    add(Severity::Error, "extra_laws", -1, "more sojourn laws than states");
  }
  for (std::size_t x = 0; x < std::min(m, model.laws().size()); ++x) {
    if (!model.law(x).has_density()) {
      add(Severity::Advisory, "no_density", static_cast<int>(x),
          "deterministic sojourn law: usable by the simulator only");
    }
  }
  return report;
}

void require_valid(const SemiMarkovModel& model) {
  const auto report = validate(model);
  if (!report.valid()) {
    const auto first = report.errors().front();
    throw Error(ErrorKind::InvalidModel, first.code + ": " + first.message);
  }
}

CorrelationCurve::CorrelationCurve(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (values_.size() != breakpoints_.size() + 1) {
    throw Error(ErrorKind::InvalidArgument, "piecewise correlation needs one more value than breakpoints");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || breakpoints_[i] <= 0.0 ||
        (i > 0 && breakpoints_[i] <= breakpoints_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "correlation breakpoints must be positive and increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v) || std::abs(v) > 1.0) {
      throw Error(ErrorKind::CorrelationOutOfRange, "correlation value " + std::to_string(v) + " outside [-1, 1]");
    }
  }
}

CorrelationCurve CorrelationCurve::constant(double rho) { return CorrelationCurve({}, {rho}); }

CorrelationCurve CorrelationCurve::piecewise(std::vector<double> breakpoints, std::vector<double> values) {
  return CorrelationCurve(std::move(breakpoints), std::move(values));
}

double CorrelationCurve::operator()(double t) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

double CorrelationCurve::integral(double a, double b) const {
  if (b <= a) return 0.0;
  double total = 0.0;
  double lo = a;
  for (std::size_t i = 0; i <= breakpoints_.size() && lo < b; ++i) {
    const double hi = i < breakpoints_.size() ? std::min(breakpoints_[i], b) : b;
    if (hi > lo) {
      total += values_[i] * (hi - lo);
      lo = hi;
    }
  }
  return total;
}

double CorrelationCurve::weighted_integral(double a, double b) const {
  if (b <= a) return 0.0;
  double total = 0.0;
  double lo = a;
  for (std::size_t i = 0; i <= breakpoints_.size() && lo < b; ++i) {
    const double hi = i < breakpoints_.size() ? std::min(breakpoints_[i], b) : b;
    if (hi > lo) {
      total += values_[i] * 0.5 * (hi * hi - lo * lo);
      lo = hi;
    }
  }
  return total;
}

VolatilityField::VolatilityField(std::vector<double> knots, std::vector<std::vector<double>> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::InvalidArgument, "volatility field needs at least one state");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "volatility knots must be strictly increasing");
    }
  }
  if (!knots_.empty() && knots_.front() != 0.0) {
    throw Error(ErrorKind::InvalidArgument, "volatility knots must start at gamma = 0");
  }
  const std::size_t expect = knots_.empty() ? 1 : knots_.size();
  for (const auto& row : values_) {
    if (row.size() != expect) throw Error(ErrorKind::InvalidArgument, "volatility row has wrong length");
    for (double v : row) {
      if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "volatility values must be finite and >= 0");
      }
    }
  }
}

VolatilityField VolatilityField::state_constant(std::vector<double> levels) {
  std::vector<std::vector<double>> rows;
  rows.reserve(levels.size());
  for (double v : levels) rows.push_back({v});
  return VolatilityField({}, std::move(rows));
}

VolatilityField VolatilityField::gridded(std::vector<double> knots, std::vector<std::vector<double>> values) {
  if (knots.size() < 2) throw Error(ErrorKind::InvalidArgument, "gridded volatility needs at least two knots");
  return VolatilityField(std::move(knots), std::move(values));
}

double VolatilityField::operator()(std::size_t state, double gamma) const {
  const auto& row = values_.at(state);
  if (knots_.empty()) return row[0];
  if (gamma <= knots_.front()) return row.front();
  if (gamma >= knots_.back()) return row.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), gamma);
  const std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (gamma - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return row[lo] + w * (row[hi] - row[lo]);
}

VolatilityField VolatilityField::scaled(double factor) const {
  if (!(factor >= 0.0)) throw Error(ErrorKind::InvalidArgument, "scale factor must be >= 0");
  auto rows = values_;
  for (auto& row : rows) {
    for (double& v : row) v *= factor;
  }
  return VolatilityField(knots_, std::move(rows));
}

}  // namespace smswap
