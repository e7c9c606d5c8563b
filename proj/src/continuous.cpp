#include "entlab/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

#include "entlab/error.hpp"

namespace entlab {
namespace {

constexpr double kCertificateTol = 1e-10;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string describe(Complex z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

std::vector<FrequencyPoint> collect(const ComplexMatrix& b, const std::optional<SemigroupCertificate>& cert,
                                    double tol) {
  std::vector<FrequencyPoint> out;
  if (cert) {
    for (std::size_t i = 0; i < cert->eigenvalues.size(); ++i) {
      const Complex mu = cert->eigenvalues[i];
      const auto& phi = cert->frequencies[i];
      if (!phi && std::abs(mu.real()) > tol) continue;
      auto it = std::find_if(out.begin(), out.end(), [&](const FrequencyPoint& f) {
        if (phi || f.exact) return phi && f.exact && *phi == *f.exact;
        return std::abs(f.eigenvalue - mu) <= kClusterRadius;
      });
      if (it == out.end()) {
        out.push_back({phi ? phi->to_double() : mu.imag() / kTwoPi, phi, mu, 1});
      } else {
        ++it->multiplicity;
      }
    }
    return out;
  }
  for (const auto& c : eig(b).clusters) {
    if (std::abs(c.value.real()) <= tol) out.push_back({c.value.imag() / kTwoPi, std::nullopt, c.value, c.algebraic});
  }
  return out;
}

bool same_matrix(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

std::vector<double> legendre_nodes(int q, std::vector<double>& weights) {
  std::vector<double> x(static_cast<std::size_t>(q));
  weights.assign(static_cast<std::size_t>(q), 0.0);
  for (int i = 0; i < q; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int n = 2; n <= q; ++n) {
        const double p2 = ((2.0 * n - 1.0) * z * p1 - (n - 1.0) * p0) / n;
        p0 = p1;
        p1 = p2;
      }
      const double pq = q == 1 ? z : p1;
      const double pq1 = q == 1 ? 1.0 : p0;
      dp = q * (z * pq - pq1) / (z * z - 1.0);
      const double step = pq / dp;
      z -= step;
      if (std::abs(step) <= 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return x;
}

}  // namespace

Semigroup Semigroup::from_generator(ComplexMatrix b, double tol) {
  require_square(b, "generator");
  if (!all_finite(b)) fail(ErrorCode::SpectralFailure, "generator has non-finite entries");
  Semigroup g;
  g.b_ = std::move(b);
  g.tol_ = tol;
  const EigDecomposition dec = eig(g.b_);
  for (const auto& c : dec.clusters) {
    if (c.value.real() > tol) {
      g.reason_ = "generator eigenvalue " + describe(c.value) + " lies in the open right half-plane";
      break;
    }
    if (std::abs(c.value.real()) <= tol && c.geometric != c.algebraic) {
      g.reason_ = "non-semisimple imaginary-axis eigenvalue " + describe(c.value);
      break;
    }
  }
  for (const auto& c : dec.clusters) {
    if (std::abs(c.value.real()) <= tol) {
      g.frequencies_.push_back({c.value.imag() / kTwoPi, std::nullopt, c.value, c.algebraic});
    }
  }
  return g;
}

Semigroup Semigroup::from_certificate(SemigroupCertificate cert) {
  const Eigen::Index n = cert.s.rows();
  require_square(cert.s, "certificate S");
  if (cert.s_inv.rows() != n || cert.s_inv.cols() != n || static_cast<Eigen::Index>(cert.eigenvalues.size()) != n) {
    fail(ErrorCode::DimensionMismatch, "certificate parts have inconsistent sizes");
  }
  cert.frequencies.resize(cert.eigenvalues.size());
  for (std::size_t i = 0; i < cert.frequencies.size(); ++i) {
    if (cert.frequencies[i]) cert.eigenvalues[i] = Complex(0.0, kTwoPi * cert.frequencies[i]->to_double());
  }
  if (!cert.s.allFinite() || !cert.s_inv.allFinite() ||
      max_abs_diff(cert.s_inv * cert.s, ComplexMatrix::Identity(n, n)) > kCertificateTol) {
    fail(ErrorCode::IllConditioned, "certificate S_inv is not an accurate inverse of S");
  }
  Semigroup g;
  Eigen::Map<const ComplexVector> d(cert.eigenvalues.data(), n);
  g.b_ = cert.s * d.asDiagonal() * cert.s_inv;
  for (std::size_t i = 0; i < cert.eigenvalues.size(); ++i) {
    if (!cert.frequencies[i] && cert.eigenvalues[i].real() > 0.0) {
      g.reason_ = "generator eigenvalue " + describe(cert.eigenvalues[i]) + " lies in the open right half-plane";
      break;
    }
  }
  g.frequencies_ = collect(g.b_, cert, g.tol_);
  g.cert_ = std::move(cert);
  return g;
}

std::vector<ComplexMatrix> Semigroup::frequency_projections() const {
  std::vector<ComplexMatrix> out;
  for (const auto& f : frequencies_) {
    if (!cert_) {
      out.push_back(riesz_projection(b_, f.eigenvalue));
      continue;
    }
    std::vector<Eigen::Index> idx;
    for (std::size_t i = 0; i < cert_->eigenvalues.size(); ++i) {
      const auto& phi = cert_->frequencies[i];
      const bool hit = (phi || f.exact) ? (phi && f.exact && *phi == *f.exact)
                                        : std::abs(cert_->eigenvalues[i] - f.eigenvalue) <= kClusterRadius;
      if (hit) idx.push_back(static_cast<Eigen::Index>(i));
    }
    ComplexMatrix p = ComplexMatrix::Zero(dim(), dim());
    for (auto i : idx) p += cert_->s.col(i) * cert_->s_inv.row(i);
    out.push_back(std::move(p));
  }
  return out;
}

Semigroup synth_semigroup(const std::vector<Rational>& frequencies, const std::vector<Complex>& stable,
                          const BasisSpec& basis) {
  const int dim = static_cast<int>(frequencies.size() + stable.size());
  if (dim == 0) fail(ErrorCode::DimensionMismatch, "no eigenvalues given");
  SemigroupCertificate cert;
  for (const auto& phi : frequencies) {
    cert.eigenvalues.emplace_back(0.0, kTwoPi * phi.to_double());
    cert.frequencies.emplace_back(phi);
  }
  for (const auto& mu : stable) {
    if (!(mu.real() < 0.0)) {
      fail(ErrorCode::NotBoundedSemigroup, "stable eigenvalue " + describe(mu) + " must have negative real part");
    }
    cert.eigenvalues.push_back(mu);
    cert.frequencies.emplace_back(std::nullopt);
  }
  auto [s, s_inv] = synth_basis(dim, basis);
  cert.s = std::move(s);
  cert.s_inv = std::move(s_inv);
  return Semigroup::from_certificate(std::move(cert));
}

std::vector<FrequencyPoint> frequency_spectrum(const Semigroup& semigroup, double tol) {
  if (!semigroup.bounded()) fail(ErrorCode::NotBoundedSemigroup, semigroup.reason());
  return collect(semigroup.generator(), semigroup.certificate(), tol);
}

std::pair<std::vector<double>, std::vector<double>> quadrature_rule(const QuadratureSpec& quad, double t) {
  if (quad.points < 2) fail(ErrorCode::ValidationError, "quadrature needs at least 2 points per axis");
  if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorCode::ValidationError, "t must be positive");
  const int q = quad.points;
  std::vector<double> nodes(static_cast<std::size_t>(q));
  std::vector<double> weights;
  if (quad.scheme == QuadratureSpec::Scheme::Midpoint) {
    const double h = t / q;
    for (int i = 0; i < q; ++i) nodes[static_cast<std::size_t>(i)] = (i + 0.5) * h;
    weights.assign(static_cast<std::size_t>(q), 1.0 / q);
    return {nodes, weights};
  }
  const std::vector<double> x = legendre_nodes(q, weights);
  for (int i = 0; i < q; ++i) {
    // Ascending order in s.
    const auto j = static_cast<std::size_t>(q - 1 - i);
    nodes[static_cast<std::size_t>(i)] = 0.5 * t * (x[j] + 1.0);
  }
  std::reverse(weights.begin(), weights.end());
  for (auto& w : weights) w *= 0.5;
  return {nodes, weights};
}

ContinuousSystem::ContinuousSystem(Partition partition, std::vector<Semigroup> t, std::vector<ComplexMatrix> a)
    : partition_(std::move(partition)), t_(std::move(t)), a_(std::move(a)) {
  const auto m = static_cast<std::size_t>(partition_.m());
  if (t_.size() != m) fail(ErrorCode::DimensionMismatch, "need one semigroup per position of the partition");
  if (a_.size() + 1 != m) fail(ErrorCode::DimensionMismatch, "need m-1 connecting operators");
  const int d = t_.front().dim();
  for (std::size_t j = 0; j < m; ++j) {
    if (t_[j].dim() != d) fail(ErrorCode::DimensionMismatch, "semigroups have different dimensions");
    if (!t_[j].bounded()) {
      fail(ErrorCode::NotBoundedSemigroup, "semigroup " + std::to_string(j + 1) + ": " + t_[j].reason());
    }
  }
  for (const auto& c : a_) {
    if (c.rows() != d || c.cols() != d) fail(ErrorCode::DimensionMismatch, "connecting operator has the wrong size");
  }
}

namespace {

ComplexMatrix average_once(const ContinuousSystem& system, double t, const QuadratureSpec& quad,
                           const ComplexMatrix& input, const ContinuousOptions& options) {
  const auto [nodes, weights] = quadrature_rule(quad, t);
  const auto& p = system.partition();
  const int m = p.m();
  const int q = quad.points;
  const Eigen::Index d = system.dim();

  std::vector<int> summed_id(static_cast<std::size_t>(p.k()), -1);
  int summed = 0;
  for (int b = 0; b < p.k(); ++b) {
    if (!(options.presum && p.blocks()[static_cast<std::size_t>(b)].size() == 1)) {
      summed_id[static_cast<std::size_t>(b)] = summed++;
    }
  }

  std::vector<std::pair<const ComplexMatrix*, std::shared_ptr<const std::vector<ComplexMatrix>>>> tables;
  for (const auto& g : system.semigroups()) {
    bool seen = false;
    for (const auto& [key, tab] : tables) seen = seen || same_matrix(*key, g.generator());
    if (!seen) tables.emplace_back(&g.generator(), nullptr);
  }
  const double bytes = static_cast<double>(tables.size()) * q * static_cast<double>(d * d) * 16.0;
  if (bytes > options.contraction.memory_cap_bytes) {
    fail(ErrorCode::BudgetExceeded, "semigroup node tables exceed the memory cap");
  }
  // An exponential costs a few dozen d x d products; count it as 30 d mat-vecs.
  const double setup = static_cast<double>(tables.size()) * q * 30.0 * static_cast<double>(d);
  if (setup > options.contraction.budget) fail(ErrorCode::BudgetExceeded, "semigroup tables exceed the budget");
  for (auto& [key, tab] : tables) {
    auto values = std::make_shared<std::vector<ComplexMatrix>>();
    values->reserve(static_cast<std::size_t>(q));
    for (double s : nodes) values->push_back(expm(*key, s));
    tab = std::move(values);
  }
  auto table_for = [&](const ComplexMatrix& g) {
    for (const auto& [key, tab] : tables) {
      if (same_matrix(*key, g)) return tab;
    }
    return tables.front().second;
  };

  ChainProblem problem;
  problem.grid_size = q;
  problem.weights = weights;
  problem.blocks = summed;
  problem.connectors = system.connectors();
  for (int j = 0; j < m; ++j) {
    ChainFactor f;
    const auto tab = table_for(system.semigroups()[static_cast<std::size_t>(j)].generator());
    f.block = summed_id[static_cast<std::size_t>(p.block_of(j) - 1)];
    if (f.block >= 0) {
      f.table = tab;
    } else {
      ComplexMatrix acc = ComplexMatrix::Zero(d, d);
      ComplexMatrix comp = ComplexMatrix::Zero(d, d);
      for (int i = 0; i < q; ++i) {
        ComplexMatrix y = weights[static_cast<std::size_t>(i)] * (*tab)[static_cast<std::size_t>(i)] - comp;
        ComplexMatrix sum = acc + y;
        comp = (sum - acc) - y;
        acc.swap(sum);
      }
      f.constant = std::move(acc);
    }
    problem.factors.push_back(std::move(f));
  }
  return contract_chain(problem, input, options.contraction, setup);
}

}  // namespace

ContinuousAverage continuous_entangled_average(const ContinuousSystem& system, double t, const QuadratureSpec& quad,
                                               const ComplexMatrix& input, const ContinuousOptions& options) {
  if (input.rows() != system.dim()) fail(ErrorCode::DimensionMismatch, "input has the wrong dimension");
  ContinuousAverage out;
  out.value = average_once(system, t, quad, input, options);
  if (options.estimate_error) {
    QuadratureSpec fine = quad;
    fine.points = 2 * quad.points;
    const ComplexMatrix finer = average_once(system, t, fine, input, options);
    Eigen::JacobiSVD<ComplexMatrix> svd(out.value - finer);
    const double diff = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    out.error_estimate = quad.scheme == QuadratureSpec::Scheme::Midpoint ? diff * 4.0 / 3.0 : diff;
  }
  return out;
}

ContinuousAverage continuous_entangled_average(const ContinuousSystem& system, double t, const QuadratureSpec& quad,
                                               const ContinuousOptions& options) {
  return continuous_entangled_average(system, t, quad, ComplexMatrix::Identity(system.dim(), system.dim()), options);
}

LimitResult continuous_limit_detailed(const ContinuousSystem& system, double tol) {
  std::vector<std::vector<UnimodularEigenvalue>> spectra;
  std::vector<std::vector<ComplexMatrix>> projections;
  for (const auto& g : system.semigroups()) {
    std::vector<UnimodularEigenvalue> s;
    for (const auto& f : g.frequencies()) s.push_back({f.eigenvalue, f.exact, f.multiplicity});
    spectra.push_back(std::move(s));
    projections.push_back(g.frequency_projections());
  }
  ResonanceOptions o;
  o.rule = ResonanceOptions::Rule::Additive;
  o.tol = tol;
  LimitResult r;
  r.tuples = resonant_tuples(spectra, system.partition(), o);
  r.limit = ComplexMatrix::Zero(system.dim(), system.dim());
  for (const auto& tuple : r.tuples) {
    ComplexMatrix chain = projections[0][static_cast<std::size_t>(tuple.indices[0])];
    for (std::size_t j = 1; j < projections.size(); ++j) {
      chain = projections[j][static_cast<std::size_t>(tuple.indices[j])] * (system.connectors()[j - 1] * chain);
    }
    r.limit += chain;
  }
  return r;
}

ComplexMatrix continuous_limit_operator(const ContinuousSystem& system, double tol) {
  return continuous_limit_detailed(system, tol).limit;
}

}  // namespace entlab
