// entlab: run entangled ergodic average experiments from JSON configs.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "entlab/config.hpp"
#include "entlab/error.hpp"
#include "entlab/experiment.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(entlab::ErrorCode code) {
  using entlab::ErrorCode;
  switch (code) {
    case ErrorCode::BudgetExceeded:
      return kExitBudget;
    case ErrorCode::NonConvergence:
    case ErrorCode::Overflow:
    case ErrorCode::IllConditioned:
    case ErrorCode::SpectralFailure:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) entlab::fail(entlab::ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entangled ergodic averages: convergence, limits, resonances and counterexamples"};
  app.require_subcommand(1);

  std::string config_path, out_path, summary_path, format;
  double budget = 0.0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Result file (standard output when omitted)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--budget", budget, "Matrix-vector product budget")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--summary", summary_path, "Summary JSON path (default <out>.summary.json when --out is set)");

  const std::pair<const char*, const char*> commands[] = {
      {"converge", "Error of the average against the limit operator per checkpoint"},
      {"limit", "Limit operator from the resonance formula"},
      {"resonances", "List resonant eigenvalue tuples with residuals"},
      {"counterexample", "Divergence table for the shift counterexample"},
      {"continuous", "Continuous-time average against its limit per checkpoint"},
      {"stacking-test", "Residual of the diagonal stacking identity"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    const auto kind = entlab::parse_kind(app.get_subcommands().front()->get_name());
    entlab::ExperimentConfig cfg = entlab::parse_config(read_file(config_path), kind);
    if (budget > 0.0) cfg.budget = budget;
    if (threads > 0) cfg.threads = threads;
    if (!format.empty()) cfg.format = format == "csv" ? entlab::OutputFormat::Csv : entlab::OutputFormat::Json;
    if (!out_path.empty()) cfg.output = out_path;
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";

    const entlab::ExperimentResult result = entlab::run_experiment(cfg);
    entlab::emit_results(result.records, cfg.format, cfg.output, std::cout);
    if (summary_path.empty() && !cfg.output.empty()) summary_path = cfg.output + ".summary.json";
    if (!summary_path.empty()) entlab::write_text_file(summary_path, result.summary + "\n");
    return 0;
  } catch (const entlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
