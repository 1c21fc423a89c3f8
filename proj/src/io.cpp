#include "smswap/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "smswap/errors.hpp"

namespace smswap {

using nlohmann::json;

namespace {

[[noreturn]] void bad_model(const std::string& what) { throw Error(ErrorKind::InvalidModel, what); }

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Io, std::string("malformed JSON: ") + e.what());
  }
}

double number_at(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number()) bad_model(where + ": '" + key + "' must be a number");
  return obj.at(key).get<double>();
}

std::vector<double> numbers(const json& arr, const std::string& where) {
  if (!arr.is_array()) bad_model(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number()) bad_model(where + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

SojournLaw parse_law(const json& j, std::size_t index) {
  const std::string where = "sojourn_laws[" + std::to_string(index) + "]";
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    bad_model(where + " needs a 'family' string");
  }
  const auto family = j.at("family").get<std::string>();
  try {
    if (family == "exponential") return SojournLaw::exponential(number_at(j, "rate", where));
    if (family == "weibull") return SojournLaw::weibull(number_at(j, "shape", where), number_at(j, "scale", where));
    if (family == "gamma") return SojournLaw::gamma(number_at(j, "shape", where), number_at(j, "scale", where));
    if (family == "deterministic") return SojournLaw::deterministic(number_at(j, "duration", where));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidModel) throw;
    bad_model(where + ": " + e.what());
  }
  bad_model(where + ": unknown family '" + family + "'");
}

VolatilityField parse_field(const json& j, std::size_t index) {
  const std::string where = "volatility[" + std::to_string(index) + "]";
  try {
    if (j.is_array()) return VolatilityField::state_constant(numbers(j, where));
    if (j.is_object() && j.contains("levels")) return VolatilityField::state_constant(numbers(j.at("levels"), where));
    if (j.is_object() && j.contains("knots") && j.contains("values") && j.at("values").is_array()) {
      std::vector<std::vector<double>> rows;
      for (const auto& row : j.at("values")) rows.push_back(numbers(row, where + ".values"));
      return VolatilityField::gridded(numbers(j.at("knots"), where + ".knots"), std::move(rows));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidModel) throw;
    bad_model(where + ": " + e.what());
  }
  bad_model(where + " needs 'levels' or 'knots' and 'values'");
}

CorrelationCurve parse_correlation(const json& j) {
  try {
    if (j.is_number()) return CorrelationCurve::constant(j.get<double>());
    if (j.is_object() && j.contains("constant")) return CorrelationCurve::constant(number_at(j, "constant", "correlation"));
    if (j.is_object() && j.contains("breakpoints") && j.contains("values")) {
      return CorrelationCurve::piecewise(numbers(j.at("breakpoints"), "correlation.breakpoints"),
                                         numbers(j.at("values"), "correlation.values"));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidModel) throw;
    bad_model(std::string("correlation: ") + e.what());
  }
  bad_model("correlation needs 'constant' or 'breakpoints' and 'values'");
}

void check_schema(const json& root) {
  if (root.contains("schema_version") && root.at("schema_version") != kSchemaVersion) {
    throw Error(ErrorKind::InvalidArgument, "unsupported schema_version " + root.at("schema_version").dump());
  }
}

StepMethod parse_step(const std::string& text) {
  if (text == "rk4") return StepMethod::RK4;
  if (text == "euler") return StepMethod::Euler;
  throw Error(ErrorKind::InvalidArgument, "unknown step method '" + text + "'");
}

template <class T>
T value_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("'") + key + "': " + e.what());
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

MarketModel parse_market_model(std::string_view json_text) {
  const json root = parse_json(json_text);
  if (!root.is_object()) bad_model("model file must hold a JSON object");
  check_schema(root);
  for (const char* key : {"transition_matrix", "sojourn_laws"}) {
    if (!root.contains(key)) bad_model(std::string("missing '") + key + "'");
  }

  std::vector<std::vector<double>> p;
  if (!root.at("transition_matrix").is_array()) bad_model("transition_matrix must be an array of rows");
  for (const auto& row : root.at("transition_matrix")) p.push_back(numbers(row, "transition_matrix row"));

  std::vector<SojournLaw> laws;
  if (!root.at("sojourn_laws").is_array()) bad_model("sojourn_laws must be an array");
  for (std::size_t i = 0; i < root.at("sojourn_laws").size(); ++i) laws.push_back(parse_law(root.at("sojourn_laws")[i], i));

  std::vector<std::string> names;
  if (root.contains("states")) {
    const auto& s = root.at("states");
    if (s.is_number_unsigned()) {
      for (std::size_t i = 0; i < s.get<std::size_t>(); ++i) names.push_back(std::to_string(i));
    } else if (s.is_array()) {
      for (const auto& n : s) {
        if (!n.is_string()) bad_model("states must be a count or an array of names");
        names.push_back(n.get<std::string>());
      }
    } else {
      bad_model("states must be a count or an array of names");
    }
    if (names.size() != p.size()) {
      bad_model("states lists " + std::to_string(names.size()) + " entries but transition_matrix has " +
                std::to_string(p.size()) + " rows");
    }
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) names.push_back(std::to_string(i));
  }

  MarketModel out{SemiMarkovModel(std::move(p), std::move(laws)), std::move(names), {}, std::nullopt, 0};
  if (root.contains("volatility")) {
    const auto& v = root.at("volatility");
    if (!v.is_array()) bad_model("volatility must be an array of per-asset fields");
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto field = parse_field(v[i], i);
      if (field.states() != out.model.states()) {
        bad_model("volatility[" + std::to_string(i) + "] has " + std::to_string(field.states()) +
                  " states, model has " + std::to_string(out.model.states()));
      }
      out.volatility.push_back(std::move(field));
    }
  }
  if (root.contains("correlation")) out.correlation = parse_correlation(root.at("correlation"));
  if (root.contains("initial_state")) {
    const auto& s = root.at("initial_state");
    if (s.is_number_unsigned()) {
      out.initial_state = s.get<std::size_t>();
    } else if (s.is_string()) {
      const auto it = std::find(out.state_names.begin(), out.state_names.end(), s.get<std::string>());
      if (it == out.state_names.end()) bad_model("initial_state names an unknown state");
      out.initial_state = static_cast<std::size_t>(it - out.state_names.begin());
    } else {
      bad_model("initial_state must be an index or a state name");
    }
    if (out.initial_state >= out.model.states()) bad_model("initial_state out of range");
  }
  return out;
}

MarketModel load_market_model(const std::filesystem::path& path) { return parse_market_model(read_text_file(path)); }

void NumericalBlock::check() const {
  if (gamma_nodes < 3 || gamma_nodes > 200000) throw Error(ErrorKind::InvalidArgument, "gamma_nodes must lie in [3, 200000]");
  if (time_nodes < 8 || time_nodes > 4096) throw Error(ErrorKind::InvalidArgument, "time_nodes must lie in [8, 4096]");
  if (n_paths < 2 || n_paths > 100000000) throw Error(ErrorKind::InvalidArgument, "n_paths must lie in [2, 1e8]");
  if (gamma_max && !(std::isfinite(*gamma_max) && *gamma_max > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "gamma_max must be positive");
  }
}

JobConfig parse_job_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json root = parse_json(json_text);
  if (!root.is_object()) throw Error(ErrorKind::InvalidArgument, "config must hold a JSON object");
  check_schema(root);
  JobConfig cfg;
  if (root.contains("model")) {
    std::filesystem::path m = value_or<std::string>(root, "model", "");
    cfg.model_path = m.is_relative() ? base_dir / m : m;
  }
  if (root.contains("contract")) {
    const auto& c = root.at("contract");
    if (c.contains("kind")) cfg.contract.kind = parse_swap_kind(value_or<std::string>(c, "kind", "variance"));
    cfg.contract.maturity = value_or(c, "maturity", cfg.contract.maturity);
    cfg.contract.rate = value_or(c, "rate", cfg.contract.rate);
    cfg.contract.strike = value_or(c, "strike", cfg.contract.strike);
    cfg.contract.notional = value_or(c, "notional", cfg.contract.notional);
  }
  if (root.contains("numerical")) {
    const auto& n = root.at("numerical");
    auto& b = cfg.numerical;
    if (n.contains("gamma_max") && !n.at("gamma_max").is_null()) b.gamma_max = value_or(n, "gamma_max", 0.0);
    b.gamma_nodes = value_or(n, "gamma_nodes", b.gamma_nodes);
    b.time_nodes = value_or(n, "time_nodes", b.time_nodes);
    if (n.contains("method")) b.method = parse_pricing_method(value_or<std::string>(n, "method", "exact"));
    if (n.contains("step")) b.step = parse_step(value_or<std::string>(n, "step", "rk4"));
    b.truncation_waiver = value_or(n, "truncation_waiver", b.truncation_waiver);
    b.n_paths = value_or(n, "n_paths", b.n_paths);
    b.seed = value_or(n, "seed", b.seed);
  }
  if (root.contains("output")) {
    const auto& o = root.at("output");
    const auto resolve = [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
      std::filesystem::path p = value_or<std::string>(o, key, "");
      return p.is_relative() ? base_dir / p : p;
    };
    cfg.output_path = resolve("path");
    cfg.moments_csv = resolve("moments_csv");
    cfg.generator_csv = resolve("generator_csv");
    const auto format = value_or<std::string>(o, "format", "table");
    if (format == "json") {
      cfg.format = OutputFormat::Json;
    } else if (format == "table") {
      cfg.format = OutputFormat::Table;
    } else {
      throw Error(ErrorKind::InvalidArgument, "unknown output format '" + format + "'");
    }
  }
  return cfg;
}

JobConfig load_job_config(const std::filesystem::path& path) {
  return parse_job_config(read_text_file(path), path.parent_path());
}

NumericalSettings numerical_settings(const SemiMarkovModel& model, const NumericalBlock& block) {
  block.check();
  NumericalSettings s;
  if (block.gamma_max) {
    s.grid = RecurrenceGrid{*block.gamma_max, block.gamma_nodes, block.truncation_waiver};
  } else {
    s.grid = RecurrenceGrid::covering(model, block.gamma_nodes);
    s.grid.truncation_waiver = block.truncation_waiver;
  }
  s.quadrature.nodes = block.time_nodes;
  s.step = block.step;
  return s;
}

std::string report_to_json(const PricingReport& report, bool with_timestamp) {
  json j;
  j["schema_version"] = kSchemaVersion;
  if (with_timestamp) j["generated_at"] = utc_timestamp();
  j["method"] = to_string(report.method);
  j["price"] = report.price;
  j["contract"] = {{"kind", to_string(report.contract.kind)},
                   {"maturity", report.contract.maturity},
                   {"rate", report.contract.rate},
                   {"strike", report.contract.strike},
                   {"notional", report.contract.notional}};
  j["intermediates"] = report.intermediates;
  j["diagnostics"] = report.diagnostics;
  j["flags"] = report.flags;
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

PricingReport report_from_json(std::string_view json_text) {
  const json j = parse_json(json_text);
  check_schema(j);
  try {
    PricingReport r;
    const auto& c = j.at("contract");
    r.contract.kind = parse_swap_kind(c.at("kind").get<std::string>());
    r.contract.maturity = c.at("maturity").get<double>();
    r.contract.rate = c.at("rate").get<double>();
    r.contract.strike = c.at("strike").get<double>();
    r.contract.notional = c.at("notional").get<double>();
    r.method = parse_pricing_method(j.at("method").get<std::string>());
    r.price = j.at("price").get<double>();
    r.intermediates = j.at("intermediates").get<std::map<std::string, double>>();
    r.diagnostics = value_or(j, "diagnostics", std::map<std::string, double>{});
    r.flags = value_or(j, "flags", std::map<std::string, bool>{});
    r.notes = value_or(j, "notes", std::vector<std::string>{});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed report: ") + e.what());
  }
}

std::string format_report_table(const PricingReport& report) {
  std::ostringstream os;
  os << std::left;
  os << std::setw(34) << "swap" << to_string(report.contract.kind) << "\n";
  os << std::setw(34) << "method" << to_string(report.method) << "\n";
  os << std::setw(34) << "price" << std::fixed << std::setprecision(10) << report.price << "\n";
  os << std::defaultfloat << std::setprecision(12);
  for (const auto& [k, v] : report.intermediates) os << "  " << std::setw(32) << k << v << "\n";
  for (const auto& [k, v] : report.diagnostics) os << "  " << std::setw(32) << k << v << "\n";
  for (const auto& [k, v] : report.flags) os << "  " << std::setw(32) << k << (v ? "true" : "false") << "\n";
  for (const auto& n : report.notes) os << "note: " << n << "\n";
  return os.str();
}

std::string estimate_to_json(std::string_view functional, const McEstimate& estimate) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["functional"] = std::string(functional);
  j["mean"] = estimate.mean;
  j["stderr"] = estimate.standard_error;
  j["n_paths"] = estimate.n_paths;
  j["seed"] = estimate.seed;
  return j.dump() + "\n";
}

void write_moment_csv(std::ostream& out, const std::vector<MomentCurve>& curves) {
  out << "t,value,method\n" << std::setprecision(17);
  for (const auto& curve : curves) {
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
      out << curve.times[k] << ',' << curve.values[k] << ',' << to_string(curve.method) << '\n';
    }
  }
}

void write_generator_csv(std::ostream& out, const GeneratorMatrix& generator) {
  if (generator.dimension() > kDenseLimit) {
    throw Error(ErrorKind::DimensionTooLarge, "dense dump needs dimension <= 2000");
  }
  const Eigen::MatrixXd q = generator.dense();
  out << std::setprecision(17);
  for (Eigen::Index c = 0; c < q.cols(); ++c) out << (c ? "," : "") << c;
  out << '\n';
  for (Eigen::Index r = 0; r < q.rows(); ++r) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) out << (c ? "," : "") << q(r, c);
    out << '\n';
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace smswap
