#include "entlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "entlab/error.hpp"
#include "entlab/rng.hpp"

namespace entlab {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double abs1(Complex z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Unitary G = [[c, s], [-conj(s), c]] with G [p; q] = [r; 0].
struct Givens {
  double c = 1.0;
  Complex s{0.0, 0.0};
  Complex r{0.0, 0.0};

  static Givens make(Complex p, Complex q) {
    Givens g;
    if (q == Complex(0.0, 0.0)) {
      g.r = p;
      return g;
    }
    const double ap = std::abs(p);
    const double aq = std::abs(q);
    const double n = std::hypot(ap, aq);
    if (ap == 0.0) {
      g.c = 0.0;
      g.s = std::conj(q) / aq;
      g.r = aq;
      return g;
    }
    const Complex phase = p / ap;
    g.c = ap / n;
    g.s = phase * std::conj(q) / n;
    g.r = phase * n;
    return g;
  }

  // Rows (i, i+1) of m, columns [col_begin, cols).
  void apply_left(ComplexMatrix& m, Eigen::Index i, Eigen::Index col_begin) const {
    for (Eigen::Index j = col_begin; j < m.cols(); ++j) {
      const Complex x = m(i, j);
      const Complex y = m(i + 1, j);
      m(i, j) = c * x + s * y;
      m(i + 1, j) = -std::conj(s) * x + c * y;
    }
  }

  // Columns (i, i+1) of m multiplied by G^*, rows [0, row_end].
  void apply_right_adjoint(ComplexMatrix& m, Eigen::Index i, Eigen::Index row_end) const {
    for (Eigen::Index k = 0; k <= row_end; ++k) {
      const Complex a = m(k, i);
      const Complex b = m(k, i + 1);
      m(k, i) = a * c + b * std::conj(s);
      m(k, i + 1) = -a * s + b * c;
    }
  }
};

// Householder reduction to upper Hessenberg form; q accumulates the transform.
void reduce_to_hessenberg(ComplexMatrix& h, ComplexMatrix& q) {
  const Eigen::Index n = h.rows();
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    ComplexVector x = h.col(k).tail(n - k - 1);
    const double xnorm = x.norm();
    if (xnorm == 0.0) continue;
    const Complex x0 = x(0);
    const Complex phase = std::abs(x0) == 0.0 ? Complex(1.0, 0.0) : x0 / std::abs(x0);
    ComplexVector v = x;
    v(0) += phase * xnorm;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    // H <- (I - 2vv^*) H (I - 2vv^*) on the trailing block.
    auto rows = h.bottomRows(n - k - 1);
    const Eigen::RowVectorXcd left = v.adjoint() * rows;
    rows.noalias() -= 2.0 * v * left;
    auto cols = h.rightCols(n - k - 1);
    const ComplexVector right = cols * v;
    cols.noalias() -= 2.0 * right * v.adjoint();
    auto qcols = q.rightCols(n - k - 1);
    const ComplexVector qright = qcols * v;
    qcols.noalias() -= 2.0 * qright * v.adjoint();
    h.col(k).tail(n - k - 2).setZero();
  }
}

Complex wilkinson_shift(const ComplexMatrix& t, Eigen::Index iu, int iter) {
  if ((iter == 10 || iter == 20) && iu >= 2) {
    return {std::abs(t(iu, iu - 1).real()) + std::abs(t(iu - 1, iu - 2).real()), 0.0};
  }
  Eigen::Matrix2cd b = t.block<2, 2>(iu - 1, iu - 1);
  const double scale = b.cwiseAbs().sum();
  if (scale == 0.0) return {0.0, 0.0};
  b /= scale;
  const Complex off = b(0, 1) * b(1, 0);
  const Complex diff = b(0, 0) - b(1, 1);
  const Complex disc = std::sqrt(diff * diff + 4.0 * off);
  const Complex det = b(0, 0) * b(1, 1) - off;
  const Complex trace = b(0, 0) + b(1, 1);
  Complex ev1 = (trace + disc) / 2.0;
  Complex ev2 = (trace - disc) / 2.0;
  if (abs1(ev1) > abs1(ev2)) {
    ev2 = det / ev1;
  } else if (abs1(ev2) != 0.0) {
    ev1 = det / ev2;
  }
  const Complex target = b(1, 1);
  return scale * (abs1(ev1 - target) < abs1(ev2 - target) ? ev1 : ev2);
}

// Complex Schur form T = Z^* A Z by implicit single-shift QR on the Hessenberg form.
void schur_triangularize(ComplexMatrix& t, ComplexMatrix& z) {
  const Eigen::Index n = t.rows();
  const double fallback = kEps * std::max(t.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const long max_iter = 100L * static_cast<long>(n);
  auto negligible = [&](Eigen::Index i) {
    const double sub = abs1(t(i + 1, i));
    const double diag = abs1(t(i, i)) + abs1(t(i + 1, i + 1));
    return sub <= kEps * diag || sub <= fallback * 1e-3;
  };

  Eigen::Index iu = n - 1;
  int iter = 0;
  long total = 0;
  while (true) {
    while (iu > 0) {
      if (negligible(iu - 1)) {
        t(iu, iu - 1) = Complex(0.0, 0.0);
        iter = 0;
        --iu;
      } else {
        break;
      }
    }
    if (iu == 0) break;
    ++iter;
    if (++total > max_iter) {
      fail(ErrorCode::NonConvergence, "QR iteration exceeded " + std::to_string(max_iter) + " sweeps");
    }
    Eigen::Index il = iu - 1;
    while (il > 0 && !negligible(il - 1)) --il;

    const Complex shift = wilkinson_shift(t, iu, iter);
    Givens g = Givens::make(t(il, il) - shift, t(il + 1, il));
    g.apply_left(t, il, il);
    g.apply_right_adjoint(t, il, std::min(il + 2, iu));
    g.apply_right_adjoint(z, il, n - 1);
    for (Eigen::Index i = il + 1; i < iu; ++i) {
      g = Givens::make(t(i, i - 1), t(i + 1, i - 1));
      t(i, i - 1) = g.r;
      t(i + 1, i - 1) = Complex(0.0, 0.0);
      g.apply_left(t, i, i);
      g.apply_right_adjoint(t, i, std::min(i + 2, iu));
      g.apply_right_adjoint(z, i, n - 1);
    }
  }
}

void check_eig_input(const ComplexMatrix& a) {
  require_square(a, "eig");
  if (a.rows() > kMaxEigDim) {
    fail(ErrorCode::DimensionMismatch,
         "eig supports dim <= " + std::to_string(kMaxEigDim) + ", got " + std::to_string(a.rows()));
  }
  if (!all_finite(a)) fail(ErrorCode::NonConvergence, "eig input has non-finite entries");
}

// The `count` right singular vectors of m belonging to the smallest singular values.
ComplexMatrix smallest_right_singular_vectors(const ComplexMatrix& m, Eigen::Index count) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(count);
}

ComplexMatrix matrix_power(const ComplexMatrix& m, int p) {
  ComplexMatrix out = ComplexMatrix::Identity(m.rows(), m.cols());
  for (int i = 0; i < p; ++i) out = out * m;
  return out;
}

}  // namespace

void require_square(const ComplexMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + ": expected a non-empty square matrix, got " +
                                           std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

bool all_finite(const ComplexMatrix& a) { return a.allFinite(); }

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::DimensionMismatch, "max_abs_diff: shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

std::vector<Complex> eigenvalues(const ComplexMatrix& a) {
  check_eig_input(a);
  ComplexMatrix t = a;
  ComplexMatrix z = ComplexMatrix::Identity(a.rows(), a.cols());
  reduce_to_hessenberg(t, z);
  schur_triangularize(t, z);
  std::vector<Complex> values(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) values[static_cast<std::size_t>(i)] = t(i, i);
  return values;
}

std::vector<EigenCluster> cluster_eigenvalues(const std::vector<Complex>& values, double radius) {
  // Single-linkage grouping: union members transitively within `radius`.
  const std::size_t n = values.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(values[i] - values[j]) <= radius) parent[find(j)] = find(i);
    }
  }
  std::vector<EigenCluster> clusters;
  std::vector<int> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    auto& c = clusters[static_cast<std::size_t>(slot[root])];
    c.members.push_back(static_cast<int>(i));
    c.value += values[i];
    ++c.algebraic;
  }
  for (auto& c : clusters) c.value /= static_cast<double>(c.algebraic);
  return clusters;
}

int numerical_rank(const ComplexMatrix& a, double threshold) {
  if (a.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a);
  const auto& r = qr.matrixQR();
  const Eigen::Index diag = std::min(r.rows(), r.cols());
  int rank = 0;
  for (Eigen::Index i = 0; i < diag; ++i) {
    if (std::abs(r(i, i)) > threshold) ++rank;
  }
  return rank;
}

EigDecomposition eig(const ComplexMatrix& a, double tol) {
  EigDecomposition out;
  out.values = eigenvalues(a);
  out.clusters = cluster_eigenvalues(out.values);

  const Eigen::Index n = a.rows();
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  out.right_vectors = ComplexMatrix::Zero(n, n);
  bool complete = true;
  for (auto& cluster : out.clusters) {
    const ComplexMatrix shifted = a - cluster.value * ComplexMatrix::Identity(n, n);
    const int rank = numerical_rank(shifted, tol * scale);
    cluster.geometric = std::clamp(static_cast<int>(n) - rank, 1, cluster.algebraic);
    const ComplexMatrix basis = smallest_right_singular_vectors(shifted, cluster.geometric);
    for (std::size_t k = 0; k < cluster.members.size(); ++k) {
      const Eigen::Index col = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), basis.cols() - 1);
      out.right_vectors.col(cluster.members[k]) = basis.col(col);
    }
    if (cluster.geometric < cluster.algebraic) {
      complete = false;
      if (std::abs(std::abs(cluster.value) - 1.0) <= kUnimodularTol) out.semisimple_unimodular = false;
    }
  }
  if (!complete) {
    out.condition_estimate = std::numeric_limits<double>::infinity();
  } else {
    Eigen::JacobiSVD<ComplexMatrix> svd(out.right_vectors);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    out.condition_estimate = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  }
  return out;
}

SpectralProjections spectral_projections(const ComplexMatrix& a) {
  SpectralProjections out;
  out.clusters = cluster_eigenvalues(eigenvalues(a));
  const Eigen::Index n = a.rows();
  // Basis of each generalized eigenspace: the null space of (A - lambda I)^alg.
  ComplexMatrix basis(n, n);
  Eigen::Index offset = 0;
  for (const auto& cluster : out.clusters) {
    const ComplexMatrix shifted = a - cluster.value * ComplexMatrix::Identity(n, n);
    const ComplexMatrix power = matrix_power(shifted, cluster.algebraic);
    basis.middleCols(offset, cluster.algebraic) = smallest_right_singular_vectors(power, cluster.algebraic);
    offset += cluster.algebraic;
  }
  Eigen::FullPivLU<ComplexMatrix> lu(basis);
  if (!lu.isInvertible()) fail(ErrorCode::SpectralFailure, "generalized eigenvectors are linearly dependent");
  const ComplexMatrix dual = lu.inverse();
  offset = 0;
  for (const auto& cluster : out.clusters) {
    out.projections.push_back(basis.middleCols(offset, cluster.algebraic) *
                              dual.middleRows(offset, cluster.algebraic));
    offset += cluster.algebraic;
  }
  return out;
}

ComplexMatrix riesz_projection(const ComplexMatrix& a, Complex lambda) {
  require_square(a, "riesz_projection");
  const auto all = spectral_projections(a);
  for (std::size_t i = 0; i < all.clusters.size(); ++i) {
    if (std::abs(all.clusters[i].value - lambda) <= kClusterRadius) return all.projections[i];
  }
  return ComplexMatrix::Zero(a.rows(), a.cols());
}

ComplexMatrix expm(const ComplexMatrix& b, double t) {
  require_square(b, "expm");
  if (!std::isfinite(t)) fail(ErrorCode::Overflow, "expm: non-finite time");
  const Eigen::Index n = b.rows();
  ComplexMatrix a = t * b;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm1) || norm1 > kExpmMaxNorm) {
    fail(ErrorCode::Overflow, "expm: ||tB||_1 = " + std::to_string(norm1) + " exceeds supported range");
  }

  if (norm1 == 0.0) return ComplexMatrix::Identity(n, n);

  static constexpr double kTheta13 = 5.371920351148152;
  static constexpr double kCoef[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                     1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                     670442572800.0,      33522128640.0,       1323241920.0,
                                     40840800.0,          960960.0,            16380.0,
                                     182.0,               1.0};
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    a /= std::ldexp(1.0, squarings);
  }
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix a2 = a * a;
  const ComplexMatrix a4 = a2 * a2;
  const ComplexMatrix a6 = a4 * a2;
  ComplexMatrix inner = kCoef[13] * a6 + kCoef[11] * a4 + kCoef[9] * a2;
  const ComplexMatrix u =
      a * (a6 * inner + kCoef[7] * a6 + kCoef[5] * a4 + kCoef[3] * a2 + kCoef[1] * id);
  inner = kCoef[12] * a6 + kCoef[10] * a4 + kCoef[8] * a2;
  const ComplexMatrix v = a6 * inner + kCoef[6] * a6 + kCoef[4] * a4 + kCoef[2] * a2 + kCoef[0] * id;
  ComplexMatrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  if (!r.allFinite()) fail(ErrorCode::Overflow, "expm: result is not finite");
  return r;
}

double spectral_norm(const ComplexMatrix& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0) fail(ErrorCode::DimensionMismatch, "spectral_norm: empty matrix");
  if (!a.allFinite()) fail(ErrorCode::NonConvergence, "spectral_norm: non-finite entries");
  if (a.norm() == 0.0) return 0.0;
  constexpr long kMaxIter = 200000;
  constexpr std::uint64_t kStartSeed = 0x5eed5eed5eedULL;

  for (std::uint64_t attempt = 0; attempt < 4; ++attempt) {
    CounterRng rng(kStartSeed + attempt);
    ComplexVector v(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.next_complex_gaussian();
    v.normalize();
    double sigma = 0.0;
    bool restart = false;
    for (long it = 0; it < kMaxIter; ++it) {
      const ComplexVector av = a * v;
      const double next = av.norm();
      ComplexVector w = a.adjoint() * av;
      const double wnorm = w.norm();
      if (wnorm == 0.0) {
        restart = true;
        break;
      }
      v = w / wnorm;
      if (it > 0 && std::abs(next - sigma) <= tol * next) return next;
      sigma = next;
    }
    if (!restart) break;
  }
  fail(ErrorCode::NonConvergence, "spectral_norm: power iteration did not converge");
}

ComplexMatrix gaussian_matrix(int rows, int cols, std::uint64_t seed, double scale) {
  CounterRng rng(seed);
  ComplexMatrix g(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) g(i, j) = scale * rng.next_complex_gaussian();
  }
  return g;
}

ComplexMatrix haar_unitary(int dim, std::uint64_t seed) {
  if (dim < 1) fail(ErrorCode::DimensionMismatch, "haar_unitary: dim must be >= 1");
  const ComplexMatrix g = gaussian_matrix(dim, dim, seed);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
  const auto& r = qr.matrixQR();
  for (int i = 0; i < dim; ++i) {
    const double mag = std::abs(r(i, i));
    const Complex phase = mag == 0.0 ? Complex(1.0, 0.0) : r(i, i) / mag;
    q.col(i) *= phase;
  }
  return q;
}

}  // namespace entlab
