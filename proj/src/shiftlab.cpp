#include "entlab/shiftlab.hpp"

#include <cmath>

#include "entlab/error.hpp"

namespace entlab {

Complex SparseZVector::get(std::int64_t b) const {
  auto it = coeffs_.find(b);
  return it == coeffs_.end() ? Complex(0.0) : it->second;
}

void SparseZVector::set(std::int64_t b, Complex c) {
  if (c == Complex(0.0)) {
    coeffs_.erase(b);
  } else {
    coeffs_[b] = c;
  }
}

void SparseZVector::add(std::int64_t b, Complex c) { set(b, get(b) + c); }

double SparseZVector::norm() const {
  double s = 0.0;
  for (const auto& [b, c] : coeffs_) s += std::norm(c);
  return std::sqrt(s);
}

int BlockSequence::value(std::int64_t n) {
  if (n < 1) fail(ErrorCode::ValidationError, "the block sequence is indexed from 1");
  int e = 63 - __builtin_clzll(static_cast<unsigned long long>(n));
  return e % 2;
}

std::int64_t BlockSequence::count_ones(std::int64_t n) {
  std::int64_t ones = 0;
  // Blocks [2^e, 2^{e+1}) with e odd.
  for (int e = 1; e < 62 && (std::int64_t{1} << e) <= n; e += 2) {
    const std::int64_t lo = std::int64_t{1} << e;
    const std::int64_t hi = std::min(n, (std::int64_t{1} << (e + 1)) - 1);
    ones += hi - lo + 1;
  }
  return ones;
}

SparseZVector shift_apply(const SparseZVector& v, std::int64_t n) {
  SparseZVector out;
  for (const auto& [b, c] : v.support()) out.set(b - n, c);
  return out;
}

SparseZVector counterexample_A(const SparseZVector& v, const BlockSequence& f) {
  SparseZVector out;
  for (const auto& [b, c] : v.support()) out.add(b < 0 ? f.value(-b) - b : b, c);
  return out;
}

std::vector<DivergencePoint> divergence_experiment(const std::vector<std::int64_t>& checkpoints,
                                                   const BlockSequence& f) {
  std::vector<DivergencePoint> out;
  std::int64_t previous = 0;
  for (std::int64_t n : checkpoints) {
    if (n <= previous) fail(ErrorCode::ValidationError, "checkpoints must be positive and strictly increasing");
    previous = n;
    out.push_back({n, Rational(n - f.count_ones(n), n)});
  }
  return out;
}

Rational divergence_value_direct(std::int64_t n, const BlockSequence& f) {
  if (n < 1) fail(ErrorCode::ValidationError, "N must be at least 1");
  SparseZVector sum;
  const SparseZVector e0 = SparseZVector::basis(0);
  for (std::int64_t k = 1; k <= n; ++k) {
    const SparseZVector term = shift_apply(counterexample_A(shift_apply(e0, k), f), k);
    for (const auto& [b, c] : term.support()) sum.add(b, c);
  }
  // Coefficients are integer counts, exact in double.
  return Rational(static_cast<std::int64_t>(sum.get(0).real()), n);
}

ComplexMatrix finite_section(int window, const BlockSequence& f) {
  if (window < 8) fail(ErrorCode::ValidationError, "window must be at least 8");
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(window) + 1;
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (std::int64_t b = -window; b <= window; ++b) {
    const auto image = counterexample_A(SparseZVector::basis(b), f).support().begin()->first;
    if (image >= -window && image <= window) m(image + window, b + window) = 1.0;
  }
  return m;
}

ComplexMatrix shift_section(int window) {
  if (window < 1) fail(ErrorCode::ValidationError, "window must be positive");
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(window) + 1;
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index i = 1; i < dim; ++i) m(i - 1, i) = 1.0;
  return m;
}

}  // namespace entlab
