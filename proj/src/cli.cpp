#include "smswap/cli.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "smswap/io.hpp"
#include "smswap/moments.hpp"
#include "smswap/pricing.hpp"
#include "smswap/simulator.hpp"

namespace smswap::cli {

namespace {

struct Overrides {
  std::string config;
  std::string model;
  std::string kind;
  std::optional<double> maturity, rate, strike, notional, gamma_max;
  std::optional<std::size_t> gamma_nodes, time_nodes, n_paths;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string step;
  std::string output;
  std::string format;
  std::string moments_csv;
  std::string generator_csv;
  bool truncation_waiver = false;
};

void add_job_options(CLI::App& cmd, Overrides& o, bool simulation) {
  cmd.add_option("--config", o.config, "Job configuration file (JSON)");
  cmd.add_option("--model", o.model, "Model file; overrides the config");
  cmd.add_option("--kind", o.kind, "variance | volatility | covariance | correlation");
  cmd.add_option("--maturity", o.maturity, "Maturity T in years");
  cmd.add_option("--rate", o.rate, "Risk-free rate r");
  cmd.add_option("--strike", o.strike, "Strike K");
  cmd.add_option("--notional", o.notional, "Notional N");
  cmd.add_option("--method", o.method, "exact | first-order | corrected");
  cmd.add_option("--step", o.step, "rk4 | euler");
  cmd.add_option("--gamma-max", o.gamma_max, "Upper end of the recurrence-time axis");
  cmd.add_option("--gamma-nodes", o.gamma_nodes, "Recurrence-time nodes");
  cmd.add_option("--time-nodes", o.time_nodes, "Trapezoid nodes on [0, T]");
  cmd.add_flag("--truncation-waiver", o.truncation_waiver, "Accept survival >= 1e-6 at gamma_max");
  cmd.add_option("--output", o.output, "Write the report here instead of stdout");
  cmd.add_option("--format", o.format, "table | json");
  if (simulation) {
    cmd.add_option("--paths", o.n_paths, "Monte Carlo paths");
    cmd.add_option("--seed", o.seed, "Monte Carlo seed");
  } else {
    cmd.add_option("--moments-csv", o.moments_csv, "Write the moment curves as CSV");
    cmd.add_option("--generator-csv", o.generator_csv, "Write the dense generator as CSV");
  }
}

JobConfig resolve_job(const Overrides& o) {
  JobConfig cfg;
  if (!o.config.empty()) cfg = load_job_config(o.config);
  if (!o.model.empty()) cfg.model_path = o.model;
  if (cfg.model_path.empty()) throw Error(ErrorKind::InvalidArgument, "no model file: pass --model or --config");
  if (!o.kind.empty()) cfg.contract.kind = parse_swap_kind(o.kind);
  if (o.maturity) cfg.contract.maturity = *o.maturity;
  if (o.rate) cfg.contract.rate = *o.rate;
  if (o.strike) cfg.contract.strike = *o.strike;
  if (o.notional) cfg.contract.notional = *o.notional;
  if (!o.method.empty()) cfg.numerical.method = parse_pricing_method(o.method);
  if (!o.step.empty()) {
    if (o.step == "rk4") {
      cfg.numerical.step = StepMethod::RK4;
    } else if (o.step == "euler") {
      cfg.numerical.step = StepMethod::Euler;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown step method '" + o.step + "'");
    }
  }
  if (o.gamma_max) cfg.numerical.gamma_max = *o.gamma_max;
  if (o.gamma_nodes) cfg.numerical.gamma_nodes = *o.gamma_nodes;
  if (o.time_nodes) cfg.numerical.time_nodes = *o.time_nodes;
  if (o.truncation_waiver) cfg.numerical.truncation_waiver = true;
  if (o.n_paths) cfg.numerical.n_paths = *o.n_paths;
  if (o.seed) cfg.numerical.seed = *o.seed;
  if (!o.output.empty()) cfg.output_path = o.output;
  if (!o.format.empty()) {
    if (o.format == "json") {
      cfg.format = OutputFormat::Json;
    } else if (o.format == "table") {
      cfg.format = OutputFormat::Table;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown output format '" + o.format + "'");
    }
  }
  if (!o.moments_csv.empty()) cfg.moments_csv = o.moments_csv;
  if (!o.generator_csv.empty()) cfg.generator_csv = o.generator_csv;
  cfg.contract.check();
  cfg.numerical.check();
  return cfg;
}

bool two_assets(SwapKind kind) { return kind == SwapKind::Covariance || kind == SwapKind::Correlation; }

struct Inputs {
  MarketModel market;
  const VolatilityField* sigma1 = nullptr;
  const VolatilityField* sigma2 = nullptr;
  const CorrelationCurve* rho = nullptr;
};

void bind_inputs(Inputs& in, SwapKind kind) {
  const auto& m = in.market;
  if (m.volatility.empty()) throw Error(ErrorKind::InvalidModel, "model file has no volatility field");
  in.sigma1 = &m.volatility[0];
  if (!two_assets(kind)) return;
  if (m.volatility.size() < 2) throw Error(ErrorKind::InvalidModel, "two-asset swaps need two volatility fields");
  if (!m.correlation) throw Error(ErrorKind::InvalidModel, "two-asset swaps need a correlation curve");
  in.sigma2 = &m.volatility[1];
  in.rho = &*m.correlation;
}

void emit(const JobConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.output_path) {
    write_text_file(*cfg.output_path, text);
  } else {
    out << text;
  }
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const auto market = load_market_model(path);
  const auto report = validate(market.model);
  out << (report.valid() ? "valid" : "invalid") << "\n";
  for (const auto& issue : report.issues) {
    out << (issue.severity == Severity::Error ? "error" : "advisory") << " [" << issue.code << "]";
    if (issue.state >= 0) out << " state " << issue.state;
    out << ": " << issue.message << "\n";
  }
  return report.valid() ? kOk : kValidationFailure;
}

PricingReport price_job(const JobConfig& cfg, const Inputs& in, std::optional<SwapPricer>& pricer) {
  const auto settings = numerical_settings(in.market.model, cfg.numerical);
  pricer.emplace(in.market.model, in.market.initial_state, settings);
  return pricer->price(cfg.contract, cfg.numerical.method, *in.sigma1, in.sigma2, in.rho);
}

int cmd_price(const Overrides& o, std::ostream& out) {
  const auto cfg = resolve_job(o);
  Inputs in{load_market_model(cfg.model_path)};
  bind_inputs(in, cfg.contract.kind);
  std::optional<SwapPricer> pricer;
  const auto report = price_job(cfg, in, pricer);
  emit(cfg, cfg.format == OutputFormat::Json ? report_to_json(report) : format_report_table(report), out);

  if (cfg.moments_csv) {
    const auto& q = pricer->generator();
    const auto shape = q.shape();
    const GridFunction f = two_assets(cfg.contract.kind)
                               ? GridFunction::from_field(shape, *in.sigma1) * GridFunction::from_field(shape, *in.sigma2)
                               : GridFunction::from_field(shape, *in.sigma1, 2);
    const double T = cfg.contract.maturity;
    const auto& settings = pricer->settings();
    std::ostringstream csv;
    write_moment_csv(csv, {moment_curve(q, f, in.market.initial_state, T, settings.quadrature, settings.step),
                           first_order_curve(q, f, in.market.initial_state, T, settings.quadrature)});
    write_text_file(*cfg.moments_csv, csv.str());
  }
  if (cfg.generator_csv) {
    std::ostringstream csv;
    write_generator_csv(csv, pricer->generator());
    write_text_file(*cfg.generator_csv, csv.str());
  }
  return kOk;
}

const char* functional_name(SwapKind kind) {
  switch (kind) {
    case SwapKind::Variance: return "discounted_variance_payoff";
    case SwapKind::Volatility: return "discounted_volatility_payoff";
    case SwapKind::Covariance: return "discounted_covariance_payoff";
    case SwapKind::Correlation: return "discounted_correlation_payoff";
  }
  return "unknown";
}

McEstimate simulate_job(const JobConfig& cfg, const Inputs& in) {
  return estimate_swap(in.market.model, in.market.initial_state, cfg.contract, *in.sigma1, in.sigma2, in.rho,
                       cfg.numerical.n_paths, cfg.numerical.seed);
}

int cmd_simulate(const Overrides& o, std::ostream& out) {
  const auto cfg = resolve_job(o);
  Inputs in{load_market_model(cfg.model_path)};
  bind_inputs(in, cfg.contract.kind);
  const auto est = simulate_job(cfg, in);
  if (cfg.format == OutputFormat::Json) {
    emit(cfg, estimate_to_json(functional_name(cfg.contract.kind), est), out);
  } else {
    std::ostringstream os;
    os << std::setprecision(12) << std::left << std::setw(12) << "functional" << functional_name(cfg.contract.kind)
       << "\n"
       << std::setw(12) << "mean" << est.mean << "\n"
       << std::setw(12) << "stderr" << est.standard_error << "\n"
       << std::setw(12) << "n_paths" << est.n_paths << "\n"
       << std::setw(12) << "seed" << est.seed << "\n";
    emit(cfg, os.str(), out);
  }
  return kOk;
}

int cmd_compare(const Overrides& o, std::ostream& out) {
  const auto cfg = resolve_job(o);
  Inputs in{load_market_model(cfg.model_path)};
  bind_inputs(in, cfg.contract.kind);
  std::optional<SwapPricer> pricer;
  const auto report = price_job(cfg, in, pricer);
  const auto est = simulate_job(cfg, in);
  const double diff = report.price - est.mean;
  double z = 0.0;
  if (est.standard_error > 0.0) {
    z = diff / est.standard_error;
  } else if (std::abs(diff) > 1e-12) {
    z = std::numeric_limits<double>::infinity();
  }
  const bool pass = std::abs(z) < 3.0;
  std::ostringstream os;
  os << std::setprecision(10) << std::left;
  os << std::setw(12) << "swap" << to_string(cfg.contract.kind) << " (" << to_string(report.method) << ")\n";
  os << std::setw(12) << "analytic" << report.price << "\n";
  os << std::setw(12) << "mc_mean" << est.mean << " +/- " << est.standard_error << " (" << est.n_paths
     << " paths, seed " << est.seed << ")\n";
  os << std::setw(12) << "z_score" << z << "\n";
  os << std::setw(12) << "result" << (pass ? "PASS" : "FAIL") << "\n";
  emit(cfg, os.str(), out);
  return pass ? kOk : kNumericalFailure;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidModel:
    case ErrorKind::TruncationError:
    case ErrorKind::CorrelationOutOfRange: return kValidationFailure;
    case ErrorKind::Io: return kIoFailure;
    case ErrorKind::SurvivalUnderflow:
    case ErrorKind::GridMismatch:
    case ErrorKind::PositivityBreach:
    case ErrorKind::DimensionTooLarge:
    case ErrorKind::NegativeVariance:
    case ErrorKind::DegenerateMean:
    case ErrorKind::NormalizationCheckFailed:
    case ErrorKind::PathExplosion: return kNumericalFailure;
  }
  return kNumericalFailure;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variance, volatility, covariance and correlation swaps under semi-Markov volatility", "smswap"};
  app.require_subcommand(1);

  std::string model_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a model file");
  validate_cmd->add_option("model", model_path, "Model file (JSON)")->required();

  Overrides price_o, simulate_o, compare_o;
  auto* price_cmd = app.add_subcommand("price", "Price a swap from the generator");
  add_job_options(*price_cmd, price_o, false);
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the discounted payoff");
  add_job_options(*simulate_cmd, simulate_o, true);
  auto* compare_cmd = app.add_subcommand("compare", "Analytic price against Monte Carlo at 3 standard errors");
  add_job_options(*compare_cmd, compare_o, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationFailure;
  }

  try {
    if (*validate_cmd) return cmd_validate(model_path, out);
    if (*price_cmd) return cmd_price(price_o, out);
    if (*simulate_cmd) return cmd_simulate(simulate_o, out);
    if (*compare_cmd) return cmd_compare(compare_o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kValidationFailure;
}

}  // namespace smswap::cli
