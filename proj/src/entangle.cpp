#include "entlab/entangle.hpp"

#include <memory>
#include <sstream>

#include "entlab/error.hpp"

namespace entlab {
namespace {

bool same_matrix(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

ComplexMatrix matrix_power(const ComplexMatrix& a, int p) {
  ComplexMatrix out = ComplexMatrix::Identity(a.rows(), a.cols());
  for (int i = 0; i < p; ++i) out = a * out;
  return out;
}

void check_square(const ComplexMatrix& m, Eigen::Index d, const char* what, std::size_t j) {
  if (m.rows() != d || m.cols() != d) {
    std::ostringstream os;
    os << what << " " << j + 1 << " is " << m.rows() << "x" << m.cols() << ", expected " << d << "x" << d;
    fail(ErrorCode::DimensionMismatch, os.str());
  }
}

// Builds the contraction for an arbitrary chain of per-position matrices, whose
// powers are tied together by `alpha` (1-based, values 1..k).
ComplexMatrix average_chain(const std::vector<int>& alpha, int k, const std::vector<ComplexMatrix>& t,
                            const std::vector<ComplexMatrix>& a, int n, const ComplexMatrix& input,
                            const AverageOptions& options) {
  if (n < 1) fail(ErrorCode::ValidationError, "N must be at least 1");
  const std::size_t m = t.size();
  if (alpha.size() != m || a.size() + 1 != m) {
    fail(ErrorCode::DimensionMismatch, "need m operators, m-1 connecting operators and alpha of length m");
  }
  const Eigen::Index d = t.front().rows();
  for (std::size_t j = 0; j < m; ++j) check_square(t[j], d, "operator", j);
  for (std::size_t j = 0; j + 1 < m; ++j) check_square(a[j], d, "connecting operator", j);
  if (input.rows() != d) fail(ErrorCode::DimensionMismatch, "input has the wrong dimension");
  if (!all_finite(input)) fail(ErrorCode::ValidationError, "input vector is not finite");

  std::vector<int> block_size(static_cast<std::size_t>(k), 0);
  for (int b : alpha) ++block_size[static_cast<std::size_t>(b - 1)];

  const bool presum = options.strategy == Strategy::Presum;
  const bool naive = options.strategy == Strategy::Naive;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Summed blocks get dense ids in order of their block number.
  std::vector<int> block_id(static_cast<std::size_t>(k), -1);
  int summed = 0;
  for (int b = 0; b < k; ++b) {
    if (!(presum && block_size[static_cast<std::size_t>(b)] == 1)) block_id[static_cast<std::size_t>(b)] = summed++;
  }

  // One power table per distinct matrix.
  std::vector<std::pair<const ComplexMatrix*, std::shared_ptr<const std::vector<ComplexMatrix>>>> tables;
  auto table_for = [&](const ComplexMatrix& mat) {
    for (const auto& [key, tab] : tables) {
      if (same_matrix(*key, mat)) return tab;
    }
    auto tab = std::make_shared<const std::vector<ComplexMatrix>>(power_table(mat, n));
    tables.emplace_back(&mat, tab);
    return tab;
  };

  std::size_t distinct = 0;
  double setup = 0.0;
  if (!naive) {
    std::vector<const ComplexMatrix*> keys;
    for (std::size_t j = 0; j < m; ++j) {
      bool seen = false;
      for (const auto* key : keys) seen = seen || same_matrix(*key, t[j]);
      if (!seen) keys.push_back(&t[j]);
    }
    distinct = keys.size();
    const double bytes = static_cast<double>(distinct) * n * static_cast<double>(d * d) * 16.0;
    if (bytes > options.contraction.memory_cap_bytes) {
      std::ostringstream os;
      os << "power tables need " << bytes << " bytes, above the cap of " << options.contraction.memory_cap_bytes;
      fail(ErrorCode::BudgetExceeded, os.str());
    }
    setup = static_cast<double>(distinct) * n * static_cast<double>(d);
    if (setup > options.contraction.budget) {
      fail(ErrorCode::BudgetExceeded, "building the power tables alone exceeds the budget");
    }
  }

  ChainProblem problem;
  problem.grid_size = n;
  problem.weights.assign(static_cast<std::size_t>(n), inv_n);
  problem.blocks = summed;
  problem.connectors = a;
  for (std::size_t j = 0; j < m; ++j) {
    ChainFactor f;
    const int b = alpha[j] - 1;
    f.block = block_id[static_cast<std::size_t>(b)];
    if (naive) {
      f.generator = std::make_shared<const ComplexMatrix>(t[j]);
    } else if (f.block >= 0) {
      f.table = table_for(t[j]);
    } else {
      const auto tab = table_for(t[j]);
      ComplexMatrix acc = ComplexMatrix::Zero(d, d);
      ComplexMatrix comp = ComplexMatrix::Zero(d, d);
      for (const auto& p : *tab) {
        ComplexMatrix y = p - comp;
        ComplexMatrix s = acc + y;
        comp = (s - acc) - y;
        acc.swap(s);
      }
      f.constant = acc * inv_n;
    }
    problem.factors.push_back(std::move(f));
  }
  return contract_chain(problem, input, options.contraction, setup);
}

}  // namespace

Partition Partition::make(std::vector<int> alpha) {
  if (alpha.empty()) fail(ErrorCode::EmptyAlpha, "alpha must have at least one entry");
  int k = 0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] < 1) {
      std::ostringstream os;
      os << "alpha[" << j + 1 << "] = " << alpha[j] << " is not a positive block number";
      fail(ErrorCode::NotSurjective, os.str());
    }
    k = std::max(k, alpha[j]);
  }
  Partition p;
  p.blocks_.assign(static_cast<std::size_t>(k), {});
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    p.blocks_[static_cast<std::size_t>(alpha[j] - 1)].push_back(static_cast<int>(j));
  }
  for (int b = 0; b < k; ++b) {
    if (p.blocks_[static_cast<std::size_t>(b)].empty()) {
      fail(ErrorCode::NotSurjective, "block " + std::to_string(b + 1) + " has no positions");
    }
  }
  p.alpha_ = std::move(alpha);
  p.k_ = k;
  return p;
}

EntangledSystem::EntangledSystem(Partition partition, std::vector<SpectralOperator> t, std::vector<ComplexMatrix> a,
                                 bool require_power_bounded)
    : partition_(std::move(partition)), t_(std::move(t)), a_(std::move(a)) {
  const auto m = static_cast<std::size_t>(partition_.m());
  if (t_.size() != m) {
    fail(ErrorCode::DimensionMismatch,
         "partition has " + std::to_string(m) + " positions but " + std::to_string(t_.size()) + " operators");
  }
  if (a_.size() + 1 != m) {
    fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(m - 1) + " connecting operators, got " +
                                           std::to_string(a_.size()));
  }
  const Eigen::Index d = t_.front().dim();
  for (std::size_t j = 0; j < m; ++j) {
    check_square(t_[j].matrix(), d, "operator", j);
    if (require_power_bounded && !t_[j].power_bounded()) {
      fail(ErrorCode::NotPowerBounded, "operator " + std::to_string(j + 1) + ": " + t_[j].verdict().reason);
    }
  }
  for (std::size_t j = 0; j + 1 < m; ++j) check_square(a_[j], d, "connecting operator", j);
}

ComplexMatrix cesaro_chain_average(const Partition& partition, const std::vector<ComplexMatrix>& t,
                                   const std::vector<ComplexMatrix>& a, int n, const ComplexMatrix& input,
                                   const AverageOptions& options) {
  if (t.empty()) fail(ErrorCode::DimensionMismatch, "no operators");
  return average_chain(partition.alpha(), partition.k(), t, a, n, input, options);
}

namespace {

std::vector<ComplexMatrix> matrices_of(const EntangledSystem& system) {
  std::vector<ComplexMatrix> t;
  t.reserve(system.operators().size());
  for (const auto& op : system.operators()) t.push_back(op.matrix());
  return t;
}

}  // namespace

ComplexMatrix entangled_average(const EntangledSystem& system, int n, const AverageOptions& options) {
  const ComplexMatrix eye = ComplexMatrix::Identity(system.dim(), system.dim());
  return cesaro_chain_average(system.partition(), matrices_of(system), system.connectors(), n, eye, options);
}

ComplexVector entangled_average(const EntangledSystem& system, int n, const ComplexVector& x,
                                const AverageOptions& options) {
  if (x.size() != system.dim()) fail(ErrorCode::DimensionMismatch, "vector has the wrong dimension");
  ComplexMatrix out = cesaro_chain_average(system.partition(), matrices_of(system), system.connectors(), n, x, options);
  return out.col(0);
}

StackedSystem stacked_system(const EntangledSystem& system) {
  const int m = system.partition().m();
  const int d = system.dim();
  const Eigen::Index md = static_cast<Eigen::Index>(m) * d;
  StackedSystem s;
  s.blocks = m;
  s.dim = d;
  s.script_t = ComplexMatrix::Identity(md, md);
  s.script_s = ComplexMatrix::Identity(md, md);
  s.script_a = ComplexMatrix::Zero(md, md);
  for (int j = 0; j + 1 < m; ++j) {
    s.script_t.block(j * d, j * d, d, d) = system.operators()[static_cast<std::size_t>(j)].matrix();
    s.script_a.block((j + 1) * d, j * d, d, d) = system.connectors()[static_cast<std::size_t>(j)];
  }
  s.script_s.block((m - 1) * d, (m - 1) * d, d, d) = system.operators().back().matrix();
  return s;
}

ComplexMatrix stacked_average(const StackedSystem& stacked, const Partition& partition, int n, const ComplexMatrix& x,
                              const AverageOptions& options) {
  const int m = partition.m();
  if (m != stacked.blocks) fail(ErrorCode::DimensionMismatch, "partition does not match the stacked system");
  if (x.rows() != stacked.dim) fail(ErrorCode::DimensionMismatch, "input has the wrong dimension");
  const Eigen::Index md = static_cast<Eigen::Index>(m) * stacked.dim;
  std::vector<ComplexMatrix> t(static_cast<std::size_t>(m), stacked.script_t);
  t.back() = stacked.script_s;
  std::vector<ComplexMatrix> a(static_cast<std::size_t>(m - 1), stacked.script_a);
  ComplexMatrix lifted = ComplexMatrix::Zero(md, x.cols());
  lifted.topRows(stacked.dim) = x;
  ComplexMatrix out = cesaro_chain_average(partition, t, a, n, lifted, options);
  return out.bottomRows(stacked.dim);
}

ComplexMatrix multiple_ergodic_average(const SpectralOperator& u, const std::vector<ComplexMatrix>& a, int n,
                                       const AverageOptions& options) {
  if (a.empty()) fail(ErrorCode::DimensionMismatch, "need at least one operator a_j");
  const int k = static_cast<int>(a.size());
  const ComplexMatrix inv = operator_inverse(u);
  std::vector<ComplexMatrix> t(static_cast<std::size_t>(k + 1), u.matrix());
  t.front() = matrix_power(inv, k);
  std::vector<ComplexMatrix> conn(a.rbegin(), a.rend());
  const ComplexMatrix eye = ComplexMatrix::Identity(u.dim(), u.dim());
  return average_chain(std::vector<int>(static_cast<std::size_t>(k + 1), 1), 1, t, conn, n, eye, options);
}

ComplexMatrix generalized_power_average(const SpectralOperator& u, const std::vector<ComplexMatrix>& a,
                                        const Partition& partition, int n, const AverageOptions& options) {
  const int m = partition.m();
  const int k = partition.k();
  if (static_cast<int>(a.size()) != m) {
    fail(ErrorCode::DimensionMismatch, "need one operator a_j per position of the partition");
  }
  const ComplexMatrix inv = operator_inverse(u);
  const ComplexMatrix eye = ComplexMatrix::Identity(u.dim(), u.dim());

  // Rightmost: u^{-c_a n_a} for every block, joined by identities; then
  // a_m, u^{n_alpha(m)}, a_{m-1}, ..., a_1, u^{n_alpha(1)}.
  std::vector<int> alpha;
  std::vector<ComplexMatrix> t;
  std::vector<ComplexMatrix> conn;
  for (int b = 1; b <= k; ++b) {
    alpha.push_back(b);
    t.push_back(matrix_power(inv, static_cast<int>(partition.blocks()[static_cast<std::size_t>(b - 1)].size())));
    if (b < k) conn.push_back(eye);
  }
  for (int j = m - 1; j >= 0; --j) {
    conn.push_back(a[static_cast<std::size_t>(j)]);
    alpha.push_back(partition.block_of(j));
    t.push_back(u.matrix());
  }
  return average_chain(alpha, k, t, conn, n, eye, options);
}

}  // namespace entlab
