#pragma once

// Runs a parsed ExperimentConfig and writes plot-ready results.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "entlab/config.hpp"

namespace entlab {

struct ResultRecord {
  double checkpoint = 0.0;  ///< N, t, or a 1-based row number for listings
  double error_fro = 0.0;
  double error_op = 0.0;
  double runtime_ms = 0.0;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct ExperimentResult {
  std::vector<ResultRecord> records;  ///< ordered by checkpoint
  std::string summary;                ///< JSON object with run metadata
};

/// Throws BudgetExceeded or whatever the underlying module raises.
ExperimentResult run_experiment(const ExperimentConfig& config);

inline constexpr const char* kCsvHeader = "checkpoint,error_fro,error_op,runtime_ms,strategy,seed,config_hash";

std::string format_csv(const std::vector<ResultRecord>& records);
std::string format_json(const std::vector<ResultRecord>& records);
/// Inverse of format_json. Throws ParseError.
std::vector<ResultRecord> parse_records_json(const std::string& text);

/// Writes to `path`, or to `out` when the path is empty. Throws IoError.
void emit_results(const std::vector<ResultRecord>& records, OutputFormat format, const std::string& path,
                  std::ostream& out);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace entlab
