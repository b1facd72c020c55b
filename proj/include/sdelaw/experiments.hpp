#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdelaw/montecarlo.hpp"
#include "sdelaw/oscillator.hpp"

namespace sdelaw {

/// Typed table emitted by every experiment; serialized as CSV (RFC-4180
/// quoting, '.' decimal separator, UTF-8) or JSON, with a metadata sidecar.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json metadata;

  void add_row(std::initializer_list<double> values);
  void add_row(std::vector<std::string> values);
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Fixed-format float rendering used for all emitted numbers, so identical
/// configs produce byte-identical tables.
std::string format_double(double v);

struct SchemeSpec {
  SchemeFamily family = SchemeFamily::optimal;
  double param = 0.0;
  std::size_t N = 128;
};

struct ExperimentConfig {
  std::string experiment;  ///< variance_scan | constants | clt | ldp_estimate | compare | general_linear
  OscillatorModel model;
  SchemeSpec scheme;
  std::vector<double> T_list{20, 40, 60, 80};
  std::vector<std::size_t> N_list{16, 32, 64};
  std::size_t M = 2000;
  std::uint64_t seed = 1;
  std::size_t chunk = 1024;
  unsigned workers = 0;
  LambdaGrid lambda_grid;
  MgfNormalization normalization = MgfNormalization::inv_n0_squared;
  // compare experiment
  SchemeSpec compare_symplectic{SchemeFamily::optimal, 0.0, 100};
  SchemeSpec compare_nonsymplectic{SchemeFamily::pc_em_bem, 0.0, 100};
  double epsilon = 0.1;

  /// Every default made explicit, for the metadata sidecar.
  nlohmann::json effective() const;
};

/// Parse and validate a config document. Throws std::invalid_argument with
/// a field-referenced message on errors.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Run one experiment. Numerical fallback events are recorded in the table
/// metadata, not fatal.
ResultTable run_experiment(const ExperimentConfig& config);

/// Family catalog with parameter ranges, symplectic flag and constant
/// formula ids; stable ordering.
ResultTable list_catalog();

/// Write the table plus its JSON metadata sidecar; returns the data path.
std::filesystem::path write_result(const ResultTable& table, const ExperimentConfig& config,
                                   const std::filesystem::path& out_dir,
                                   const std::string& format);

/// FNV-1a hash of the canonical effective-config dump.
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace sdelaw
