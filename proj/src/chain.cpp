#include "entlab/chain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "entlab/error.hpp"

namespace entlab {
namespace {

constexpr int kMaxChunks = 64;

struct Kahan {
  ComplexMatrix sum;
  ComplexMatrix comp;
  ComplexMatrix scratch;

  Kahan(Eigen::Index r, Eigen::Index c)
      : sum(ComplexMatrix::Zero(r, c)), comp(ComplexMatrix::Zero(r, c)), scratch(r, c) {}

  void add(const ComplexMatrix& x) {
    // Complex addition is componentwise, so this is Kahan on re and im separately.
    scratch = x - comp;
    ComplexMatrix t = sum + scratch;
    comp = (t - sum) - scratch;
    sum.swap(t);
  }
};

class Traversal {
 public:
  Traversal(const ChainProblem& p, const ComplexMatrix& input)
      : p_(p), input_(input), assigned_(static_cast<std::size_t>(p.blocks), -1) {
    const auto m = p.factors.size();
    prefix_.assign(m, ComplexMatrix(input.rows(), input.cols()));
    linked_.assign(m, ComplexMatrix(input.rows(), input.cols()));
    naive_.assign(2, ComplexMatrix(input.rows(), input.cols()));
    uniform_ = std::all_of(p.weights.begin(), p.weights.end(), [&](double w) { return w == p.weights.front(); });
  }

  // Sums every leaf below factor `level` whose node for `block` lies in [lo, hi).
  void run_chunk(std::size_t level, int block, int lo, int hi, Kahan& acc) {
    const ComplexMatrix& in = incoming(level);
    for (int node = lo; node < hi; ++node) {
      assigned_[static_cast<std::size_t>(block)] = node;
      apply_factor(level, in, node);
      descend(level + 1, acc);
    }
    assigned_[static_cast<std::size_t>(block)] = -1;
  }

  // Evaluates the constant prefix below `level` (factors before the first summed one).
  void prepare(std::size_t level) {
    for (std::size_t j = 0; j < level; ++j) {
      const ComplexMatrix& in = incoming(j);
      prefix_[j].noalias() = p_.factors[j].constant * in;
    }
  }

  void descend(std::size_t level, Kahan& acc) {
    if (level == p_.factors.size()) {
      leaf(acc);
      return;
    }
    const ChainFactor& f = p_.factors[level];
    const ComplexMatrix& in = incoming(level);
    if (f.block < 0) {
      prefix_[level].noalias() = f.constant * in;
      descend(level + 1, acc);
      return;
    }
    int& node = assigned_[static_cast<std::size_t>(f.block)];
    if (node >= 0) {
      apply_factor(level, in, node);
      descend(level + 1, acc);
      return;
    }
    for (int i = 0; i < p_.grid_size; ++i) {
      node = i;
      apply_factor(level, in, i);
      descend(level + 1, acc);
    }
    node = -1;
  }

  bool uniform() const { return uniform_; }

 private:
  const ComplexMatrix& incoming(std::size_t level) {
    if (level == 0) return input_;
    linked_[level].noalias() = p_.connectors[level - 1] * prefix_[level - 1];
    return linked_[level];
  }

  void apply_factor(std::size_t level, const ComplexMatrix& in, int node) {
    const ChainFactor& f = p_.factors[level];
    if (f.table) {
      prefix_[level].noalias() = (*f.table)[static_cast<std::size_t>(node)] * in;
      return;
    }
    // Naive: recompute generator^(node+1) applied to the input.
    naive_[0] = in;
    for (int k = 0; k <= node; ++k) {
      naive_[1].noalias() = *f.generator * naive_[0];
      naive_[0].swap(naive_[1]);
    }
    prefix_[level] = naive_[0];
  }

  void leaf(Kahan& acc) {
    const ComplexMatrix& out = prefix_.back();
    if (uniform_) {
      acc.add(out);
      return;
    }
    double w = 1.0;
    for (int node : assigned_) w *= p_.weights[static_cast<std::size_t>(node)];
    acc.add(w * out);
  }

  const ChainProblem& p_;
  const ComplexMatrix& input_;
  std::vector<int> assigned_;
  std::vector<ComplexMatrix> prefix_;
  std::vector<ComplexMatrix> linked_;
  std::vector<ComplexMatrix> naive_;
  bool uniform_ = true;
};

void validate(const ChainProblem& p, const ComplexMatrix& input) {
  if (p.factors.empty()) fail(ErrorCode::DimensionMismatch, "chain has no factors");
  if (p.connectors.size() + 1 != p.factors.size()) {
    fail(ErrorCode::DimensionMismatch, "chain needs exactly one connector between consecutive factors");
  }
  const Eigen::Index d = input.rows();
  auto check = [&](const ComplexMatrix& m, const char* what) {
    if (m.rows() != d || m.cols() != d) {
      std::ostringstream os;
      os << what << " is " << m.rows() << "x" << m.cols() << ", expected " << d << "x" << d;
      fail(ErrorCode::DimensionMismatch, os.str());
    }
  };
  for (const auto& c : p.connectors) check(c, "connector");
  for (const auto& f : p.factors) {
    if (f.block < 0) {
      check(f.constant, "constant factor");
    } else {
      if (f.block >= p.blocks) fail(ErrorCode::DimensionMismatch, "factor block id out of range");
      if (f.table) {
        if (static_cast<int>(f.table->size()) != p.grid_size) {
          fail(ErrorCode::DimensionMismatch, "factor table does not match the grid");
        }
        if (!f.table->empty()) check(f.table->front(), "factor table entry");
      } else if (f.generator) {
        check(*f.generator, "factor generator");
      } else {
        fail(ErrorCode::DimensionMismatch, "summed factor without table or generator");
      }
    }
  }
  if (p.blocks > 0 && (p.grid_size < 1 || static_cast<int>(p.weights.size()) != p.grid_size)) {
    fail(ErrorCode::DimensionMismatch, "grid weights do not match the grid size");
  }
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::Naive: return "naive";
    case Strategy::Cached: return "cached";
    case Strategy::Presum: return "presum";
  }
  return "presum";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "naive") return Strategy::Naive;
  if (name == "cached") return Strategy::Cached;
  if (name == "presum") return Strategy::Presum;
  fail(ErrorCode::ValidationError, "unknown strategy '" + std::string(name) + "' (naive|cached|presum)");
}

double contraction_cost(const ChainProblem& p, Eigen::Index columns) {
  std::vector<bool> seen(static_cast<std::size_t>(std::max(p.blocks, 0)), false);
  const double grid = p.grid_size;
  double nodes = 1.0;
  double total = 0.0;
  for (std::size_t j = 0; j < p.factors.size(); ++j) {
    const auto& f = p.factors[j];
    if (f.block >= 0 && !seen[static_cast<std::size_t>(f.block)]) {
      seen[static_cast<std::size_t>(f.block)] = true;
      nodes *= grid;
    }
    double per_node = j == 0 ? 1.0 : 2.0;
    if (f.block >= 0 && !f.table) per_node += (grid + 1.0) / 2.0 - 1.0;
    total += nodes * per_node;
  }
  return total * static_cast<double>(columns);
}

ComplexMatrix contract_chain(const ChainProblem& p, const ComplexMatrix& input, const ContractionOptions& options,
                             double setup_cost) {
  validate(p, input);
  const double cost = contraction_cost(p, input.cols()) + setup_cost;
  if (cost > options.budget) {
    std::ostringstream os;
    os << "estimated " << cost << " matrix-vector products exceeds the budget of " << options.budget;
    fail(ErrorCode::BudgetExceeded, os.str());
  }

  auto first = std::find_if(p.factors.begin(), p.factors.end(), [](const ChainFactor& f) { return f.block >= 0; });
  if (first == p.factors.end()) {
    Traversal t(p, input);
    Kahan acc(input.rows(), input.cols());
    t.descend(0, acc);
    return acc.sum;
  }
  const auto level = static_cast<std::size_t>(first - p.factors.begin());
  const int grid = p.grid_size;
  const int chunks = std::min(grid, kMaxChunks);
  std::vector<ComplexMatrix> partial(static_cast<std::size_t>(chunks));
  bool uniform = true;

  auto work = [&](std::atomic<int>& next) {
    Traversal t(p, input);
    t.prepare(level);
    while (true) {
      const int c = next.fetch_add(1);
      if (c >= chunks) break;
      const int lo = static_cast<int>(static_cast<long>(grid) * c / chunks);
      const int hi = static_cast<int>(static_cast<long>(grid) * (c + 1) / chunks);
      Kahan acc(input.rows(), input.cols());
      t.run_chunk(level, first->block, lo, hi, acc);
      partial[static_cast<std::size_t>(c)] = std::move(acc.sum);
    }
    return t.uniform();
  };

  std::atomic<int> next{0};
  const int workers = std::clamp(options.threads, 1, chunks);
  if (workers == 1) {
    uniform = work(next);
  } else {
    std::vector<std::thread> pool;
    std::vector<char> flags(static_cast<std::size_t>(workers), 1);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] { flags[static_cast<std::size_t>(w)] = work(next) ? 1 : 0; });
    }
    for (auto& th : pool) th.join();
    uniform = std::all_of(flags.begin(), flags.end(), [](char f) { return f != 0; });
  }

  Kahan total(input.rows(), input.cols());
  for (const auto& part : partial) total.add(part);
  if (uniform) total.sum *= std::pow(p.weights.front(), p.blocks);
  return total.sum;
}

std::vector<ComplexMatrix> power_table(const ComplexMatrix& t, int n) {
  std::vector<ComplexMatrix> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  if (n < 1) return out;
  out.push_back(t);
  for (int k = 1; k < n; ++k) out.push_back(t * out.back());
  return out;
}

}  // namespace entlab
