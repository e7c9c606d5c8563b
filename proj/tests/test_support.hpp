#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include "entlab/linalg.hpp"
#include "entlab/operators.hpp"
#include "entlab/rng.hpp"

namespace entlab::testing {

inline std::vector<Complex> sorted(std::vector<Complex> v) {
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    if (std::abs(a.real() - b.real()) > 1e-9) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

inline double op_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues()(0);
}

inline ComplexMatrix diag(std::initializer_list<Complex> values) {
  ComplexVector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (auto z : values) v(i++) = z;
  return v.asDiagonal();
}

inline ComplexMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

// Power-bounded operator on C^dim with at least one unimodular eigenvalue of small
// denominator and the rest strictly inside the disk.
inline SpectralOperator operator_of_dim(int dim, std::uint64_t seed, bool orthonormal = true) {
  CounterRng rng(seed);
  const int unimodular = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(dim)));
  std::vector<Rational> angles;
  for (int i = 0; i < unimodular; ++i) {
    const auto q = static_cast<std::int64_t>(1 + rng.next_below(6));
    angles.emplace_back(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(q))), q);
  }
  std::vector<Complex> eigs;
  for (int i = unimodular; i < dim; ++i) eigs.push_back(std::polar(0.9 * rng.next_unit(), 6.28 * rng.next_unit()));
  const BasisSpec basis = orthonormal ? BasisSpec::orthonormal(seed) : BasisSpec::random_similarity(seed, 20.0);
  return synth_operator(angles, eigs, basis);
}

inline ComplexMatrix mpow(const ComplexMatrix& a, int p) {
  ComplexMatrix out = ComplexMatrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < p; ++i) out = a * out;
  return out;
}

}  // namespace entlab::testing
