#pragma once

// Continuous-time entangled means
//
//   (1/t^k) int_{[0,t]^k} T_m(s_alpha(m)) A_{m-1} ... A_1 T_1(s_alpha(1)) ds
//
// for bounded semigroups T_j(s) = exp(s B_j) on C^d, evaluated by tensor-product
// quadrature, and their limit built from frequency resonances (sum of the
// frequencies in every block equals zero).

#include <optional>
#include <vector>

#include "entlab/chain.hpp"
#include "entlab/entangle.hpp"
#include "entlab/linalg.hpp"
#include "entlab/operators.hpp"
#include "entlab/rational.hpp"
#include "entlab/spectral_limit.hpp"

namespace entlab {

/// Imaginary-axis eigenvalue 2 pi i phi of a generator; phi in cycles per unit time.
struct FrequencyPoint {
  double phi = 0.0;
  std::optional<Rational> exact;
  Complex eigenvalue;
  int multiplicity = 1;
};

struct SemigroupCertificate {
  ComplexMatrix s;
  std::vector<Complex> eigenvalues;  ///< of the generator
  ComplexMatrix s_inv;
  std::vector<std::optional<Rational>> frequencies;
};

class Semigroup {
 public:
  /// Bounded iff every eigenvalue has Re <= tol and those on the imaginary axis
  /// are semisimple. Never throws for an unbounded input; see bounded().
  static Semigroup from_generator(ComplexMatrix b, double tol = kUnimodularTol);
  /// Throws IllConditioned when S_inv is not an inverse of S.
  static Semigroup from_certificate(SemigroupCertificate certificate);

  const ComplexMatrix& generator() const noexcept { return b_; }
  const std::optional<SemigroupCertificate>& certificate() const noexcept { return cert_; }
  int dim() const noexcept { return static_cast<int>(b_.rows()); }
  bool bounded() const noexcept { return reason_.empty(); }
  const std::string& reason() const noexcept { return reason_; }
  /// exp(s B).
  ComplexMatrix at(double s) const { return expm(b_, s); }
  const std::vector<FrequencyPoint>& frequencies() const noexcept { return frequencies_; }
  /// Spectral projections of B for each entry of frequencies(), same order.
  std::vector<ComplexMatrix> frequency_projections() const;

 private:
  Semigroup() = default;

  ComplexMatrix b_;
  std::optional<SemigroupCertificate> cert_;
  std::vector<FrequencyPoint> frequencies_;
  std::string reason_;
  double tol_ = kUnimodularTol;
};

/// B = S diag(2 pi i phi, stable) S^{-1}. Throws NotBoundedSemigroup when some
/// stable eigenvalue has Re >= 0, DimensionMismatch when both lists are empty.
Semigroup synth_semigroup(const std::vector<Rational>& frequencies, const std::vector<Complex>& stable,
                          const BasisSpec& basis);

/// Frequencies with |Re| <= tol. Throws NotBoundedSemigroup for a failed certificate.
std::vector<FrequencyPoint> frequency_spectrum(const Semigroup& semigroup, double tol = kUnimodularTol);

struct QuadratureSpec {
  enum class Scheme { Midpoint, GaussLegendre };
  Scheme scheme = Scheme::Midpoint;
  int points = 2;  ///< per axis, at least 2
};

/// Nodes in [0, t] and weights summing to one.
std::pair<std::vector<double>, std::vector<double>> quadrature_rule(const QuadratureSpec& quad, double t);

class ContinuousSystem {
 public:
  /// Throws DimensionMismatch on inconsistent sizes, NotBoundedSemigroup when a
  /// semigroup fails its certificate.
  ContinuousSystem(Partition partition, std::vector<Semigroup> t, std::vector<ComplexMatrix> a);

  const Partition& partition() const noexcept { return partition_; }
  const std::vector<Semigroup>& semigroups() const noexcept { return t_; }
  const std::vector<ComplexMatrix>& connectors() const noexcept { return a_; }
  int dim() const noexcept { return t_.front().dim(); }

 private:
  Partition partition_;
  std::vector<Semigroup> t_;
  std::vector<ComplexMatrix> a_;
};

struct ContinuousOptions {
  bool presum = true;
  /// Also evaluate with 2Q points and report an error estimate for the Q result.
  bool estimate_error = true;
  ContractionOptions contraction;
};

struct ContinuousAverage {
  ComplexMatrix value;  ///< with Q points per axis
  /// Midpoint: (4/3) ||A_Q - A_2Q||_op (Richardson, second order). Gauss-Legendre:
  /// ||A_Q - A_2Q||_op. Negative when not requested.
  double error_estimate = -1.0;
};

/// Operator mode when `input` is the identity, vector mode for a single column.
ContinuousAverage continuous_entangled_average(const ContinuousSystem& system, double t, const QuadratureSpec& quad,
                                               const ComplexMatrix& input, const ContinuousOptions& options = {});
ContinuousAverage continuous_entangled_average(const ContinuousSystem& system, double t, const QuadratureSpec& quad,
                                               const ContinuousOptions& options = {});

/// Sum over frequency tuples with zero sum in every block of P^(m) A_{m-1} ... P^(1).
LimitResult continuous_limit_detailed(const ContinuousSystem& system, double tol = kResonanceTol);
ComplexMatrix continuous_limit_operator(const ContinuousSystem& system, double tol = kResonanceTol);

}  // namespace entlab
