#pragma once

// Dense complex kernel: eigendecomposition, matrix exponential, spectral norm and
// Haar-random unitaries. Eigen supplies storage and elementary arithmetic; the
// algorithms below are implemented here.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace entlab {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Largest dimension accepted by eig.
inline constexpr int kMaxEigDim = 64;
/// Eigenvalues closer than this (absolute complex distance) form one spectral point.
inline constexpr double kClusterRadius = 1e-8;
/// Unimodularity window used when classifying computed eigenvalues.
inline constexpr double kUnimodularTol = 1e-8;
/// expm rejects generators with ||tB||_1 above this bound.
inline constexpr double kExpmMaxNorm = 1e6;

struct EigenCluster {
  Complex value;              ///< mean of the merged eigenvalues
  int algebraic = 0;
  int geometric = 0;
  std::vector<int> members;   ///< indices into EigDecomposition::values
};

struct EigDecomposition {
  std::vector<Complex> values;        ///< with algebraic multiplicity
  ComplexMatrix right_vectors;        ///< column i pairs with values[i]
  double condition_estimate = 0.0;    ///< 2-norm condition of right_vectors (inf when singular)
  bool semisimple_unimodular = true;  ///< false if some |lambda| = 1 eigenvalue is defective
  std::vector<EigenCluster> clusters;
};

/// Eigenvalues by Hessenberg reduction and shifted complex QR; eigenvectors from
/// the null space of (A - lambda I) per eigenvalue cluster.
/// Throws DimensionMismatch for non-square or oversized input, NonConvergence when
/// the QR sweep exceeds 100 * dim iterations.
EigDecomposition eig(const ComplexMatrix& a, double tol = 1e-10);

/// Eigenvalues only (Schur diagonal). Same errors as eig.
std::vector<Complex> eigenvalues(const ComplexMatrix& a);

/// Groups eigenvalues that lie within kClusterRadius of each other.
std::vector<EigenCluster> cluster_eigenvalues(const std::vector<Complex>& values,
                                              double radius = kClusterRadius);

/// Numerical rank of `a` from column-pivoted QR, counting |R_ii| > threshold.
int numerical_rank(const ComplexMatrix& a, double threshold);

/// Spectral projection onto the generalized eigenspace of the cluster containing
/// `lambda`, along the sum of all other generalized eigenspaces. Returns the zero
/// matrix when no eigenvalue lies within kClusterRadius of `lambda`.
ComplexMatrix riesz_projection(const ComplexMatrix& a, Complex lambda);

/// All spectral projections of `a`, one per eigenvalue cluster, in cluster order.
struct SpectralProjections {
  std::vector<EigenCluster> clusters;
  std::vector<ComplexMatrix> projections;
};
SpectralProjections spectral_projections(const ComplexMatrix& a);

/// e^{tB} by scaling and squaring with the [13/13] Pade approximant
/// (||tB||_1 / 2^s <= 5.4). Throws Overflow when ||tB||_1 > kExpmMaxNorm or the
/// result is not finite.
ComplexMatrix expm(const ComplexMatrix& b, double t = 1.0);

/// Largest singular value by power iteration on A^*A from a seeded start vector.
/// Stops when the relative change of the estimate drops below tol.
double spectral_norm(const ComplexMatrix& a, double tol = 1e-12);

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// diag(R) folded into Q.
ComplexMatrix haar_unitary(int dim, std::uint64_t seed);

/// Complex Gaussian matrix with unit-variance entries scaled by `scale`.
ComplexMatrix gaussian_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0);

/// Throws DimensionMismatch unless the matrix is square.
void require_square(const ComplexMatrix& a, const char* what);
/// True when every entry is finite.
bool all_finite(const ComplexMatrix& a);

/// max_ij |a_ij - b_ij|
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace entlab
