#include "entlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "entlab/error.hpp"
#include "entlab/rng.hpp"

namespace entlab {
namespace {

constexpr double kCertificateTol = 1e-10;
constexpr int kPowerBoundHorizon = 64;

std::string describe(Complex z) {
  std::ostringstream os;
  os.precision(12);
  os << "(" << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i)";
  return os.str();
}

double condition_number(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

bool matches(const UnitPoint& target, const Complex& value, const std::optional<Rational>& angle) {
  if (target.angle && angle) return *target.angle == *angle;
  return std::abs(value - target.value) <= kClusterRadius;
}

ComplexMatrix projection_from_certificate(const SpectralCertificate& c, const std::vector<int>& idx) {
  const Eigen::Index n = c.s.rows();
  ComplexMatrix p = ComplexMatrix::Zero(n, n);
  for (int i : idx) p.noalias() += c.s.col(i) * c.s_inv.row(i);
  return p;
}

}  // namespace

Complex unit_root(const Rational& turns) {
  const Rational r = turns.mod1();
  if (r == Rational(0)) return {1.0, 0.0};
  if (r == Rational(1, 4)) return {0.0, 1.0};
  if (r == Rational(1, 2)) return {-1.0, 0.0};
  if (r == Rational(3, 4)) return {0.0, -1.0};
  return std::polar(1.0, 2.0 * std::numbers::pi * r.principal().to_double());
}

UnitPoint::UnitPoint(Rational turns) : value(unit_root(turns)), angle(turns.mod1()) {}

SpectralOperator SpectralOperator::from_matrix(ComplexMatrix matrix) {
  require_square(matrix, "SpectralOperator");
  if (!matrix.allFinite()) fail(ErrorCode::SpectralFailure, "operator has non-finite entries");
  SpectralOperator op;
  op.matrix_ = std::move(matrix);

  const EigDecomposition dec = eig(op.matrix_);
  op.verdict_.pass = true;
  for (const auto& c : dec.clusters) {
    if (std::abs(c.value) > 1.0 + kUnimodularTol) {
      op.verdict_ = {false, "eigenvalue " + describe(c.value) + " lies outside the closed unit disk"};
      break;
    }
  }
  if (op.verdict_.pass && !dec.semisimple_unimodular) {
    op.verdict_ = {false, "non-semisimple unimodular eigenvalue"};
  }
  for (const auto& c : dec.clusters) {
    if (std::abs(std::abs(c.value) - 1.0) <= kUnimodularTol) {
      op.unimodular_.push_back({c.value, std::nullopt, c.algebraic});
    }
  }

  ComplexMatrix power = op.matrix_;
  double bound = 0.0;
  for (int n = 1; n <= kPowerBoundHorizon; ++n) {
    bound = std::max(bound, spectral_norm(power, 1e-8));
    power = power * op.matrix_;
  }
  op.power_bound_ = bound;
  return op;
}

SpectralOperator SpectralOperator::from_certificate(SpectralCertificate certificate) {
  const Eigen::Index n = certificate.s.rows();
  require_square(certificate.s, "certificate S");
  if (certificate.s_inv.rows() != n || certificate.s_inv.cols() != n ||
      static_cast<Eigen::Index>(certificate.eigenvalues.size()) != n) {
    fail(ErrorCode::DimensionMismatch, "certificate parts have inconsistent sizes");
  }
  certificate.angles.resize(certificate.eigenvalues.size());
  for (std::size_t i = 0; i < certificate.angles.size(); ++i) {
    if (certificate.angles[i]) {
      certificate.angles[i] = certificate.angles[i]->mod1();
      certificate.eigenvalues[i] = unit_root(*certificate.angles[i]);
    }
  }
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  if (!certificate.s.allFinite() || !certificate.s_inv.allFinite() ||
      max_abs_diff(certificate.s_inv * certificate.s, id) > kCertificateTol) {
    fail(ErrorCode::IllConditioned, "certificate S_inv is not an accurate inverse of S");
  }

  SpectralOperator op;
  Eigen::Map<const ComplexVector> diag(certificate.eigenvalues.data(), n);
  op.matrix_ = certificate.s * diag.asDiagonal() * certificate.s_inv;

  op.verdict_.pass = true;
  for (std::size_t i = 0; i < certificate.eigenvalues.size(); ++i) {
    const Complex lambda = certificate.eigenvalues[i];
    if (std::abs(lambda) > 1.0 + kCertificateTol) {
      op.verdict_ = {false, "eigenvalue " + describe(lambda) + " lies outside the closed unit disk"};
      break;
    }
  }

  // Exact angles group by equality; float unimodular eigenvalues by proximity.
  for (std::size_t i = 0; i < certificate.eigenvalues.size(); ++i) {
    const Complex lambda = certificate.eigenvalues[i];
    const auto& angle = certificate.angles[i];
    if (!angle && std::abs(std::abs(lambda) - 1.0) > kUnimodularTol) continue;
    auto it = std::find_if(op.unimodular_.begin(), op.unimodular_.end(), [&](const UnimodularEigenvalue& u) {
      if (angle || u.angle) return angle && u.angle && *angle == *u.angle;
      return std::abs(u.value - lambda) <= kClusterRadius;
    });
    if (it == op.unimodular_.end()) {
      op.unimodular_.push_back({lambda, angle, 1});
    } else {
      ++it->multiplicity;
    }
  }
  op.power_bound_ = spectral_norm(certificate.s, 1e-10) * spectral_norm(certificate.s_inv, 1e-10);
  op.certificate_ = std::move(certificate);
  return op;
}

std::pair<ComplexMatrix, ComplexMatrix> synth_basis(int dim, const BasisSpec& basis) {
  if (dim < 1) fail(ErrorCode::DimensionMismatch, "basis dimension must be >= 1");
  if (basis.kind == BasisSpec::Kind::Orthonormal) {
    ComplexMatrix s = haar_unitary(dim, basis.seed);
    ComplexMatrix s_inv = s.adjoint();
    return {std::move(s), std::move(s_inv)};
  }
  constexpr int kAttempts = 16;
  double best = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    ComplexMatrix s = gaussian_matrix(dim, dim, CounterRng::mix(basis.seed, static_cast<std::uint64_t>(attempt)));
    const double cond = condition_number(s);
    best = std::min(best, cond);
    if (cond <= basis.condition_cap) {
      ComplexMatrix s_inv = s.fullPivLu().inverse();
      return {std::move(s), std::move(s_inv)};
    }
  }
  std::ostringstream os;
  os << "no random similarity within condition cap " << basis.condition_cap << " after " << kAttempts
     << " draws (best " << best << ")";
  fail(ErrorCode::IllConditioned, os.str());
}

SpectralOperator synth_operator(const std::vector<Rational>& unimodular_angles,
                                const std::vector<Complex>& stable_eigs, const BasisSpec& basis) {
  const int dim = static_cast<int>(unimodular_angles.size() + stable_eigs.size());
  if (dim == 0) fail(ErrorCode::DimensionMismatch, "synth_operator needs at least one eigenvalue");
  SpectralCertificate cert;
  for (const auto& a : unimodular_angles) {
    const Rational reduced = a.mod1();
    cert.eigenvalues.push_back(unit_root(reduced));
    cert.angles.emplace_back(reduced);
  }
  for (const auto& z : stable_eigs) {
    if (!(std::abs(z) < 1.0)) {
      fail(ErrorCode::NotPowerBounded, "stable eigenvalue " + describe(z) + " is not strictly inside the unit disk");
    }
    cert.eigenvalues.push_back(z);
    cert.angles.emplace_back(std::nullopt);
  }
  std::tie(cert.s, cert.s_inv) = synth_basis(dim, basis);
  return SpectralOperator::from_certificate(std::move(cert));
}

PowerBoundReport certify_power_bounded(const SpectralOperator& t, int n_max) {
  PowerBoundReport report;
  report.verdict = t.verdict();
  ComplexMatrix power = t.matrix();
  for (int n = 1; n <= n_max; ++n) {
    report.bound = std::max(report.bound, spectral_norm(power, 1e-10));
    if (n < n_max) power = power * t.matrix();
  }
  return report;
}

std::vector<ComplexMatrix> unimodular_projections(const SpectralOperator& t) {
  std::vector<ComplexMatrix> out;
  const auto& spectrum = t.unimodular_spectrum();
  if (const auto& cert = t.certificate()) {
    for (const auto& u : spectrum) {
      std::vector<int> idx;
      for (std::size_t i = 0; i < cert->eigenvalues.size(); ++i) {
        const auto& angle = cert->angles[i];
        const bool hit = (u.angle || angle) ? (u.angle && angle && *u.angle == *angle)
                                            : std::abs(u.value - cert->eigenvalues[i]) <= kClusterRadius;
        if (hit) idx.push_back(static_cast<int>(i));
      }
      out.push_back(projection_from_certificate(*cert, idx));
    }
    return out;
  }
  const auto all = spectral_projections(t.matrix());
  for (const auto& u : spectrum) {
    ComplexMatrix p = ComplexMatrix::Zero(t.dim(), t.dim());
    for (std::size_t i = 0; i < all.clusters.size(); ++i) {
      if (std::abs(all.clusters[i].value - u.value) <= kClusterRadius) p += all.projections[i];
    }
    out.push_back(std::move(p));
  }
  return out;
}

JdlSplit jdl_split(const SpectralOperator& t, double tol) {
  if (!t.power_bounded()) fail(ErrorCode::NotPowerBounded, t.verdict().reason);
  const Eigen::Index n = t.dim();
  JdlSplit split;
  if (const auto& cert = t.certificate()) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < cert->eigenvalues.size(); ++i) {
      if (cert->angles[i] || std::abs(std::abs(cert->eigenvalues[i]) - 1.0) <= tol) idx.push_back(static_cast<int>(i));
    }
    split.reversible = projection_from_certificate(*cert, idx);
  } else {
    const auto all = spectral_projections(t.matrix());
    split.reversible = ComplexMatrix::Zero(n, n);
    for (std::size_t i = 0; i < all.clusters.size(); ++i) {
      if (std::abs(std::abs(all.clusters[i].value) - 1.0) <= tol) split.reversible += all.projections[i];
    }
  }
  split.stable = ComplexMatrix::Identity(n, n) - split.reversible;
  return split;
}

ComplexMatrix mean_ergodic_projection(const SpectralOperator& t, const UnitPoint& lambda, ProjectionMode mode) {
  if (std::abs(std::abs(lambda.value) - 1.0) > 1e-10) {
    fail(ErrorCode::NotUnimodular, "projection point " + describe(lambda.value) + " is not on the unit circle");
  }
  if (!t.power_bounded()) fail(ErrorCode::NotPowerBounded, t.verdict().reason);
  const Eigen::Index n = t.dim();

  if (mode.kind == ProjectionMode::Kind::Cesaro) {
    if (mode.n < 1) fail(ErrorCode::ValidationError, "Cesaro projection needs N >= 1");
    const ComplexMatrix rotated = std::conj(lambda.value) * t.matrix();
    ComplexMatrix power = ComplexMatrix::Identity(n, n);
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    for (int k = 1; k <= mode.n; ++k) {
      power = rotated * power;
      sum += power;
    }
    return sum / static_cast<double>(mode.n);
  }

  if (const auto& cert = t.certificate()) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < cert->eigenvalues.size(); ++i) {
      if (matches(lambda, cert->eigenvalues[i], cert->angles[i])) idx.push_back(static_cast<int>(i));
    }
    return projection_from_certificate(*cert, idx);
  }
  return riesz_projection(t.matrix(), lambda.value);
}

ComplexMatrix operator_inverse(const SpectralOperator& t) {
  const Eigen::Index n = t.dim();
  if (const auto& cert = t.certificate()) {
    ComplexVector inv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex lambda = cert->eigenvalues[static_cast<std::size_t>(i)];
      if (std::abs(lambda) < 1e-12) fail(ErrorCode::NotInvertible, "operator has a zero eigenvalue");
      inv(i) = 1.0 / lambda;
    }
    return cert->s * inv.asDiagonal() * cert->s_inv;
  }
  Eigen::FullPivLU<ComplexMatrix> lu(t.matrix());
  if (!lu.isInvertible() || lu.rcond() < 1e-12) fail(ErrorCode::NotInvertible, "operator is singular");
  return lu.inverse();
}

}  // namespace entlab
