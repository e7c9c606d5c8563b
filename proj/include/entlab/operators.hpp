#pragma once

// Power-bounded operators on C^d with exact spectral bookkeeping.
//
// In finite dimension an operator is power bounded iff its spectrum lies in the
// closed unit disk and every unimodular eigenvalue is semisimple. Such an operator
// automatically has relatively (weakly) compact orbits, is totally ergodic, and
// every connecting operator is compact on its orbits, so this spectral criterion
// is the certificate checked in place of the orbit-compactness hypotheses.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "entlab/linalg.hpp"
#include "entlab/rational.hpp"

namespace entlab {

/// A point on (or near) the unit circle, optionally known exactly as a rational
/// number of turns: value = exp(2 pi i * angle).
struct UnitPoint {
  Complex value{1.0, 0.0};
  std::optional<Rational> angle;

  UnitPoint() = default;
  UnitPoint(Complex v) : value(v) {}  // NOLINT(google-explicit-constructor)
  UnitPoint(Rational turns);          // NOLINT(google-explicit-constructor)
};

/// exp(2 pi i * turns); exact for multiples of 1/4.
Complex unit_root(const Rational& turns);

struct SpectralCertificate {
  ComplexMatrix s;
  std::vector<Complex> eigenvalues;
  ComplexMatrix s_inv;
  /// Exact angle (in turns) for eigenvalues placed on the unit circle by synthesis.
  std::vector<std::optional<Rational>> angles;
};

struct UnimodularEigenvalue {
  Complex value;
  std::optional<Rational> angle;
  int multiplicity = 1;
};

struct PowerBoundVerdict {
  bool pass = false;
  std::string reason;  ///< empty on pass
};

class SpectralOperator {
 public:
  /// Classifies the spectrum with the eigensolver. Never throws for a
  /// non-power-bounded input; the verdict records the reason instead.
  static SpectralOperator from_matrix(ComplexMatrix matrix);
  /// matrix = S diag(eigenvalues) S^{-1}. Throws IllConditioned when the
  /// reconstruction residual exceeds 1e-10 * ||matrix||.
  static SpectralOperator from_certificate(SpectralCertificate certificate);

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  const std::optional<SpectralCertificate>& certificate() const noexcept { return certificate_; }
  int dim() const noexcept { return static_cast<int>(matrix_.rows()); }
  /// Upper bound on sup_n ||T^n||: cond(S) with a certificate, otherwise the
  /// largest ||T^n|| seen for n <= 64.
  double power_bound_estimate() const noexcept { return power_bound_; }
  const std::vector<UnimodularEigenvalue>& unimodular_spectrum() const noexcept { return unimodular_; }
  const PowerBoundVerdict& verdict() const noexcept { return verdict_; }
  bool power_bounded() const noexcept { return verdict_.pass; }

 private:
  SpectralOperator() = default;

  ComplexMatrix matrix_;
  std::optional<SpectralCertificate> certificate_;
  double power_bound_ = 0.0;
  std::vector<UnimodularEigenvalue> unimodular_;
  PowerBoundVerdict verdict_;
};

struct BasisSpec {
  enum class Kind { Orthonormal, RandomSimilarity };
  Kind kind = Kind::Orthonormal;
  std::uint64_t seed = 0;
  double condition_cap = 50.0;

  static BasisSpec orthonormal(std::uint64_t seed) { return {Kind::Orthonormal, seed, 50.0}; }
  static BasisSpec random_similarity(std::uint64_t seed, double cap = 50.0) {
    return {Kind::RandomSimilarity, seed, cap};
  }
};

/// Change of basis for synthesis: orthonormal draws a Haar unitary, random
/// similarity redraws a complex Gaussian matrix (up to 16 times) until its
/// condition number is within the cap. Throws IllConditioned otherwise.
std::pair<ComplexMatrix, ComplexMatrix> synth_basis(int dim, const BasisSpec& basis);

/// T = S diag(exp(2 pi i angles), stable) S^{-1} with an attached certificate.
/// Angles are reduced modulo one full turn. Throws NotPowerBounded if some
/// stable eigenvalue has |lambda| >= 1, DimensionMismatch when both lists are empty.
SpectralOperator synth_operator(const std::vector<Rational>& unimodular_angles,
                                const std::vector<Complex>& stable_eigs, const BasisSpec& basis);

struct PowerBoundReport {
  double bound = 0.0;  ///< max_{1<=n<=N} ||T^n||_2
  PowerBoundVerdict verdict;
};

PowerBoundReport certify_power_bounded(const SpectralOperator& t, int n_max);

struct JdlSplit {
  ComplexMatrix reversible;  ///< P_r: span of unimodular eigenvectors
  ComplexMatrix stable;      ///< P_s = I - P_r
};

/// Splits C^d into the unimodular eigenspaces and the part on which T^n -> 0.
/// Throws NotPowerBounded unless the verdict passes.
JdlSplit jdl_split(const SpectralOperator& t, double tol = kUnimodularTol);

struct ProjectionMode {
  enum class Kind { Spectral, Cesaro };
  Kind kind = Kind::Spectral;
  int n = 0;

  static ProjectionMode spectral() { return {Kind::Spectral, 0}; }
  static ProjectionMode cesaro(int n) { return {Kind::Cesaro, n}; }
};

/// P_lambda = lim (1/N) sum_{n=1}^N (conj(lambda) T)^n. Spectral mode sums the
/// eigenprojections for lambda (zero if lambda is not an eigenvalue); Cesaro mode
/// evaluates the average at the given N.
ComplexMatrix mean_ergodic_projection(const SpectralOperator& t, const UnitPoint& lambda,
                                      ProjectionMode mode = ProjectionMode::spectral());

/// Spectral projections for every entry of t.unimodular_spectrum(), same order.
std::vector<ComplexMatrix> unimodular_projections(const SpectralOperator& t);

/// T^{-1}, via the certificate when present. Throws NotInvertible.
ComplexMatrix operator_inverse(const SpectralOperator& t);

}  // namespace entlab
