#pragma once

// The bi-infinite shift on l2(Z) and an operator A with ||A|| = sqrt(3) for which
// (1/N) sum_n U^n A U^n does not converge weakly.
//
// Convention: U e_b = e_{b-1}, so U^n e_0 = e_{-n}. With
//   A e_b = e_{f(-b) - b}  (b < 0),   A e_b = e_b  (b >= 0)
// one gets U^n A U^n e_0 = e_{f(n)}, hence <U^n A U^n e_0, e_0> = 1 - f(n).

#include <cstdint>
#include <map>
#include <vector>

#include "entlab/linalg.hpp"
#include "entlab/rational.hpp"

namespace entlab {

/// Finitely supported vector in l2(Z). Zero coefficients are never stored.
class SparseZVector {
 public:
  SparseZVector() = default;
  static SparseZVector basis(std::int64_t b) {
    SparseZVector v;
    v.set(b, 1.0);
    return v;
  }

  Complex get(std::int64_t b) const;
  void set(std::int64_t b, Complex c);
  void add(std::int64_t b, Complex c);
  const std::map<std::int64_t, Complex>& support() const noexcept { return coeffs_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  double norm() const;

  friend bool operator==(const SparseZVector& a, const SparseZVector& b) = default;

 private:
  std::map<std::int64_t, Complex> coeffs_;
};

/// 0-1 sequence with f(n) = 1 iff floor(log2 n) is odd: ones on [2,4), [8,16), ...
/// Its means oscillate between about 1/3 and 2/3 at N = 2 * 4^j and N = 4^j.
struct BlockSequence {
  /// f(n) for n >= 1.
  static int value(std::int64_t n);
  /// #{1 <= n <= N : f(n) = 1}.
  static std::int64_t count_ones(std::int64_t n);
};

/// U^n v, exact.
SparseZVector shift_apply(const SparseZVector& v, std::int64_t n);

/// A v, exact.
SparseZVector counterexample_A(const SparseZVector& v, const BlockSequence& f = {});

struct DivergencePoint {
  std::int64_t n = 0;
  Rational value;  ///< (1/N) sum_{n<=N} (1 - f(n))
};

/// Closed form by block counting. Throws ValidationError unless the checkpoints
/// are positive and strictly increasing.
std::vector<DivergencePoint> divergence_experiment(const std::vector<std::int64_t>& checkpoints,
                                                   const BlockSequence& f = {});

/// <(1/N) sum_n U^n A U^n e_0, e_0> evaluated by applying the operators.
Rational divergence_value_direct(std::int64_t n, const BlockSequence& f = {});

/// Compression of A to span{e_-w, ..., e_w}; row/column i carries e_{i-w}.
/// Throws ValidationError for window < 8.
ComplexMatrix finite_section(int window, const BlockSequence& f = {});

/// The same compression of U.
ComplexMatrix shift_section(int window);

}  // namespace entlab
