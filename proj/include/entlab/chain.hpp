#pragma once

// Weighted sums of operator chains over a shared index lattice.
//
// A chain is read right to left: factor 0 acts first. Each factor either carries a
// summation block (its value depends on that block's grid node) or is constant.
// The contraction evaluates
//
//   sum_{i_0..i_{k-1}} (prod_b w_{i_b}) F_{m-1}(i) C_{m-2} ... C_0 F_0(i) X
//
// by depth-first traversal of the factors, reusing each prefix product for every
// extension. Both the discrete Cesaro means (grid = 1..N, weights 1/N) and the
// quadrature of the continuous means (grid = quadrature nodes) reduce to it.

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "entlab/linalg.hpp"

namespace entlab {

enum class Strategy { Naive, Cached, Presum };

std::string_view to_string(Strategy s) noexcept;
/// Throws ValidationError for unknown names.
Strategy parse_strategy(std::string_view name);

struct ContractionOptions {
  /// Cap on elementary (d x d) matrix-vector products, table building included.
  double budget = 1e8;
  int threads = 1;
  /// Refuse cached power tables above this many bytes.
  double memory_cap_bytes = 2.0 * 1024.0 * 1024.0 * 1024.0;
};

struct ChainFactor {
  int block = -1;  ///< summation block, -1 for a constant factor
  /// Factor value at each grid node (block >= 0, cached evaluation).
  std::shared_ptr<const std::vector<ComplexMatrix>> table;
  /// Naive evaluation: the factor at node i is generator^(i+1), recomputed per use.
  std::shared_ptr<const ComplexMatrix> generator;
  ComplexMatrix constant;  ///< block < 0
};

struct ChainProblem {
  std::vector<ChainFactor> factors;
  std::vector<ComplexMatrix> connectors;  ///< connectors[j] sits between factors j and j+1
  int grid_size = 0;
  std::vector<double> weights;  ///< one per grid node
  int blocks = 0;
};

/// Elementary matrix-vector products the traversal will perform on `columns` inputs.
double contraction_cost(const ChainProblem& problem, Eigen::Index columns);

/// Throws BudgetExceeded when contraction_cost + `setup_cost` exceeds the budget.
/// The result is bitwise independent of options.threads: the outermost summation
/// range is split into a fixed set of chunks, each accumulated with compensated
/// summation, and the chunk sums are merged in order.
ComplexMatrix contract_chain(const ChainProblem& problem, const ComplexMatrix& input,
                             const ContractionOptions& options, double setup_cost = 0.0);

/// T, T^2, ..., T^n by repeated multiplication.
std::vector<ComplexMatrix> power_table(const ComplexMatrix& t, int n);

}  // namespace entlab
