#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "smswap/generator.hpp"
#include "smswap/model.hpp"
#include "smswap/moments.hpp"
#include "smswap/pricing.hpp"
#include "smswap/simulator.hpp"

namespace smswap {

inline constexpr int kSchemaVersion = 1;

/// Everything a model file describes. The kernel is not validated on load
/// so that `validate` can report every problem.
struct MarketModel {
  SemiMarkovModel model;
  std::vector<std::string> state_names;
  /// One field per asset; the first is used by single-asset swaps.
  std::vector<VolatilityField> volatility;
  std::optional<CorrelationCurve> correlation;
  std::size_t initial_state = 0;
};

/// Throws InvalidModel for structural problems (missing keys, wrong types,
/// unknown law families) and Io for unparseable JSON.
MarketModel parse_market_model(std::string_view json_text);
MarketModel load_market_model(const std::filesystem::path& path);

struct NumericalBlock {
  std::optional<double> gamma_max;
  std::size_t gamma_nodes = 2000;
  std::size_t time_nodes = 64;
  PricingMethod method = PricingMethod::Exact;
  StepMethod step = StepMethod::RK4;
  bool truncation_waiver = false;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument outside gamma_nodes in [3, 200000],
  /// time_nodes in [8, 4096], n_paths in [2, 100000000].
  void check() const;
};

enum class OutputFormat { Json, Table };

struct JobConfig {
  std::filesystem::path model_path;
  SwapContract contract;
  NumericalBlock numerical;
  std::optional<std::filesystem::path> output_path;
  OutputFormat format = OutputFormat::Table;
  std::optional<std::filesystem::path> moments_csv;
  std::optional<std::filesystem::path> generator_csv;
};

/// Relative model paths are resolved against `base_dir`.
JobConfig parse_job_config(std::string_view json_text, const std::filesystem::path& base_dir);
JobConfig load_job_config(const std::filesystem::path& path);

/// Grid and quadrature for a job: gamma_max from the config when given,
/// otherwise the covering grid of the model.
NumericalSettings numerical_settings(const SemiMarkovModel& model, const NumericalBlock& block);

/// Keys are sorted. generated_at is the only field that varies between runs.
std::string report_to_json(const PricingReport& report, bool with_timestamp = true);
PricingReport report_from_json(std::string_view json_text);
std::string format_report_table(const PricingReport& report);

std::string estimate_to_json(std::string_view functional, const McEstimate& estimate);

/// Header "t,value,method".
void write_moment_csv(std::ostream& out, const std::vector<MomentCurve>& curves);
/// Dense matrix with a header row of column indices. DimensionTooLarge above kDenseLimit.
void write_generator_csv(std::ostream& out, const GeneratorMatrix& generator);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace smswap
