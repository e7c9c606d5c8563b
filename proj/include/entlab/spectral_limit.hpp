#pragma once

// Limit of the entangled means: the sum, over resonant tuples of unimodular
// eigenvalues (the product over every block equals one), of chains of mean
// ergodic projections. Also a constructive Koopman-von Neumann diagnostic for
// nonnegative sequences.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "entlab/entangle.hpp"
#include "entlab/operators.hpp"

namespace entlab {

inline constexpr double kResonanceTol = 1e-8;
/// Residuals above this (but within tolerance) flag a tuple as fragile.
inline constexpr double kFragileFloor = 1e-10;

/// Distinct eigenvalues with ||lambda| - 1| <= tol, clustered. Exact certificate
/// angles are passed through. Throws NotPowerBounded for a failed verdict.
std::vector<UnimodularEigenvalue> unimodular_spectrum(const SpectralOperator& t, double tol = kUnimodularTol);

struct ResonanceOptions {
  enum class Rule {
    Multiplicative,  ///< prod lambda = 1, lambda unimodular; angles in turns
    Additive,        ///< sum of frequencies = 0; `value` holds 2 pi i * frequency
  };
  Rule rule = Rule::Multiplicative;
  double tol = kResonanceTol;
  /// Blocks whose naive sub-tuple count exceeds this use meet-in-the-middle.
  std::size_t mitm_threshold = 100000;
};

struct ResonantTuple {
  std::vector<int> indices;  ///< per position, into that position's spectrum list
  std::vector<Complex> lambdas;
  std::vector<std::optional<Rational>> angles;
  std::vector<double> block_residuals;
  bool fragile = false;
};

/// Every tuple whose per-block constraint holds within tol (exactly for blocks
/// whose entries all carry exact angles). Sorted lexicographically by indices.
/// Throws DimensionMismatch when the number of lists differs from m.
std::vector<ResonantTuple> resonant_tuples(const std::vector<std::vector<UnimodularEigenvalue>>& spectra,
                                           const Partition& partition, const ResonanceOptions& options = {});

struct LimitResult {
  ComplexMatrix limit;
  std::vector<ResonantTuple> tuples;
};

/// Sum over resonant tuples of P^(m) A_{m-1} ... A_1 P^(1), spectral projections.
LimitResult limit_operator_detailed(const EntangledSystem& system, const ResonanceOptions& options = {});
ComplexMatrix limit_operator(const EntangledSystem& system, double tol = kResonanceTol);

struct KvnOptions {
  std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625};
  double threshold = 1e-2;
  /// Continuous mode: the sequence holds samples f(h), f(2h), ... of a function.
  std::optional<double> sample_step;
};

struct KvnCheckpoint {
  std::size_t n = 0;
  double time = 0.0;  ///< n, or n * h in continuous mode
  double mean = 0.0;
};

struct KvnReport {
  bool cesaro_null = false;
  std::vector<KvnCheckpoint> means;  ///< dyadic checkpoints and the full length
  /// (epsilon, density of {n <= N : a_n <= epsilon}).
  std::vector<std::pair<double, double>> epsilon_ladder;
  /// 1-based runs (start, length). Empty when no rung of the ladder settles.
  std::vector<std::pair<std::size_t, std::size_t>> density_one_set;
};

/// Throws EmptySequence for an empty sequence, ValidationError for negative or
/// non-finite entries, nonpositive epsilons or step.
KvnReport kvn_diagnostic(const std::vector<double>& a, const KvnOptions& options = {});

}  // namespace entlab
