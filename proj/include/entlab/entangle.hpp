#pragma once

// Entangled Cesaro means
//
//   (1/N^k) sum_{n_1..n_k=1}^N T_m^{n_alpha(m)} A_{m-1} ... A_1 T_1^{n_alpha(1)}
//
// for a surjective alpha: {1..m} -> {1..k}, plus the multiple ergodic averages that
// reduce to them and the block-diagonal stacking that turns any system into one
// with a single pair of operators.

#include <vector>

#include "entlab/chain.hpp"
#include "entlab/linalg.hpp"
#include "entlab/operators.hpp"

namespace entlab {

class Partition {
 public:
  /// Values are 1-based. Throws EmptyAlpha for an empty list, NotSurjective when a
  /// value is nonpositive or some block in 1..max is empty.
  static Partition make(std::vector<int> alpha);

  int m() const noexcept { return static_cast<int>(alpha_.size()); }
  int k() const noexcept { return k_; }
  const std::vector<int>& alpha() const noexcept { return alpha_; }
  /// 1-based block of 0-based position j.
  int block_of(int j) const { return alpha_.at(static_cast<std::size_t>(j)); }
  /// 0-based positions of each block; blocks()[a-1] is alpha^{-1}(a).
  const std::vector<std::vector<int>>& blocks() const noexcept { return blocks_; }
  bool bijective() const noexcept { return k_ == m(); }

 private:
  std::vector<int> alpha_;
  int k_ = 0;
  std::vector<std::vector<int>> blocks_;
};

inline Partition make_partition(std::vector<int> alpha) { return Partition::make(std::move(alpha)); }

class EntangledSystem {
 public:
  /// Throws DimensionMismatch on inconsistent sizes and NotPowerBounded when
  /// `require_power_bounded` is set and some T_j fails its verdict.
  EntangledSystem(Partition partition, std::vector<SpectralOperator> t, std::vector<ComplexMatrix> a,
                  bool require_power_bounded = true);

  const Partition& partition() const noexcept { return partition_; }
  const std::vector<SpectralOperator>& operators() const noexcept { return t_; }
  const std::vector<ComplexMatrix>& connectors() const noexcept { return a_; }
  int dim() const noexcept { return t_.front().dim(); }

 private:
  Partition partition_;
  std::vector<SpectralOperator> t_;
  std::vector<ComplexMatrix> a_;
};

struct AverageOptions {
  Strategy strategy = Strategy::Presum;
  ContractionOptions contraction;
};

/// Operator mode.
ComplexMatrix entangled_average(const EntangledSystem& system, int n, const AverageOptions& options = {});
/// Vector mode: the average applied to x.
ComplexVector entangled_average(const EntangledSystem& system, int n, const ComplexVector& x,
                                const AverageOptions& options = {});

/// The average for plain matrices applied to the columns of `input`. No power
/// boundedness is required; this is the engine behind every wrapper here.
ComplexMatrix cesaro_chain_average(const Partition& partition, const std::vector<ComplexMatrix>& t,
                                   const std::vector<ComplexMatrix>& a, int n, const ComplexMatrix& input,
                                   const AverageOptions& options = {});

struct StackedSystem {
  ComplexMatrix script_t;  ///< blockdiag(T_1, ..., T_{m-1}, I)
  ComplexMatrix script_s;  ///< blockdiag(I, ..., I, T_m)
  ComplexMatrix script_a;  ///< A_j in block row j+1, column j
  int blocks = 0;          ///< m
  int dim = 0;             ///< d
};

StackedSystem stacked_system(const EntangledSystem& system);

/// Last d-block of the stacked average (script_T at positions 1..m-1, script_S at
/// position m, script_A between them) applied to (x, 0, ..., 0).
ComplexMatrix stacked_average(const StackedSystem& stacked, const Partition& partition, int n,
                              const ComplexMatrix& x, const AverageOptions& options = {});

/// (1/N) sum_n u^n a_1 u^n a_2 ... u^n a_k u^{-kn}. Throws NotInvertible.
ComplexMatrix multiple_ergodic_average(const SpectralOperator& u, const std::vector<ComplexMatrix>& a, int n,
                                       const AverageOptions& options = {});

/// (1/N^k) sum u^{n_alpha(1)} a_1 u^{n_alpha(2)} a_2 ... u^{n_alpha(m)} a_m u^{-sum_j n_alpha(j)}.
/// Throws NotInvertible, DimensionMismatch when a has the wrong length.
ComplexMatrix generalized_power_average(const SpectralOperator& u, const std::vector<ComplexMatrix>& a,
                                        const Partition& partition, int n, const AverageOptions& options = {});

}  // namespace entlab
