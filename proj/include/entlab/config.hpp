#pragma once

// Declarative experiment configuration (JSON). See README.md for the schema.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entlab/chain.hpp"
#include "entlab/continuous.hpp"
#include "entlab/entangle.hpp"
#include "entlab/operators.hpp"

namespace entlab {

enum class ExperimentKind { Converge, Limit, Resonances, Counterexample, Continuous, StackingTest };

std::string_view to_string(ExperimentKind kind) noexcept;
std::optional<ExperimentKind> parse_kind(std::string_view name) noexcept;

enum class OutputFormat { Csv, Json };

struct OperatorConfig {
  enum class Source { Synth, Matrix, Haar };
  Source source = Source::Synth;
  ComplexMatrix matrix;  ///< Source::Matrix (a generator for continuous runs)
  int dim = 0;
  std::vector<Rational> angles;  ///< turns, or frequencies in cycles for continuous runs
  std::vector<Complex> stable;
  BasisSpec basis;
};

struct ConnectingConfig {
  enum class Kind { Identity, Random, Matrix };
  Kind kind = Kind::Identity;
  std::uint64_t seed = 0;
  double scale = 0.0;  ///< 0 means 1/sqrt(d)
  ComplexMatrix matrix;
};

struct QuadratureConfig {
  QuadratureSpec::Scheme scheme = QuadratureSpec::Scheme::Midpoint;
  std::optional<int> points;
  double nodes_per_period = 20.0;
  int min_points = 64;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Converge;
  std::uint64_t seed = 0;
  std::vector<int> alpha{1};
  std::vector<OperatorConfig> operators;
  std::vector<ConnectingConfig> connecting;  ///< one per gap, m-1 entries
  std::vector<double> schedule;              ///< N (discrete) or t (continuous)
  Strategy strategy = Strategy::Presum;
  double resonance_tol = 1e-8;
  double budget = 1e8;
  int threads = 1;
  QuadratureConfig quadrature;
  int window = 64;
  std::string output;
  OutputFormat format = OutputFormat::Csv;

  std::string config_hash;  ///< 16 hex digits
  std::vector<std::string> warnings;

  Partition partition() const { return make_partition(alpha); }
};

/// Throws ParseError (with line and column) for malformed JSON and
/// ValidationError (with a JSON pointer to the offending key) otherwise. When
/// `kind` is given it takes precedence over the document's "kind" (with a warning).
ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> kind = std::nullopt);

/// FNV-1a 64 of the canonical (sorted-key, compact) serialization of the document
/// without its "output" and "format" keys.
std::string config_hash(std::string_view text);

EntangledSystem build_system(const ExperimentConfig& config);
ContinuousSystem build_continuous_system(const ExperimentConfig& config);

}  // namespace entlab
