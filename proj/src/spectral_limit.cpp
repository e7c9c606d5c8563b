#include "entlab/spectral_limit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

#include "entlab/error.hpp"

namespace entlab {
namespace {

using Rule = ResonanceOptions::Rule;
using Spectrum = std::vector<UnimodularEigenvalue>;

struct BlockMatch {
  std::vector<int> indices;  // one per position of the block, in position order
  double residual = 0.0;
};

// Partial accumulation over some positions of a block.
struct Partial {
  std::vector<int> indices;
  Rational exact;
  Complex value;  // product (multiplicative) or sum (additive)
};

class BlockSolver {
 public:
  BlockSolver(std::vector<const Spectrum*> lists, const ResonanceOptions& options)
      : lists_(std::move(lists)), options_(options) {
    exact_ = std::all_of(lists_.begin(), lists_.end(), [](const Spectrum* s) {
      return std::all_of(s->begin(), s->end(), [](const UnimodularEigenvalue& u) { return u.angle.has_value(); });
    });
  }

  std::vector<BlockMatch> solve() const {
    double count = 1.0;
    for (const auto* s : lists_) count *= static_cast<double>(s->size());
    if (count == 0.0) return {};
    std::vector<BlockMatch> out = count > static_cast<double>(options_.mitm_threshold) && lists_.size() > 1
                                      ? meet_in_the_middle()
                                      : exhaustive();
    std::sort(out.begin(), out.end(), [](const BlockMatch& a, const BlockMatch& b) { return a.indices < b.indices; });
    return out;
  }

 private:
  bool multiplicative() const { return options_.rule == Rule::Multiplicative; }

  Partial empty_partial() const { return {{}, Rational(0), multiplicative() ? Complex(1.0) : Complex(0.0)}; }

  Partial extend(const Partial& p, std::size_t pos, int idx) const {
    const auto& u = (*lists_[pos])[static_cast<std::size_t>(idx)];
    Partial q = p;
    q.indices.push_back(idx);
    if (exact_) {
      q.exact = multiplicative() ? (p.exact + *u.angle).mod1() : p.exact + *u.angle;
    }
    q.value = multiplicative() ? p.value * u.value : p.value + u.value;
    return q;
  }

  std::vector<Partial> enumerate(std::size_t from, std::size_t to) const {
    std::vector<Partial> level{empty_partial()};
    for (std::size_t pos = from; pos < to; ++pos) {
      std::vector<Partial> next;
      next.reserve(level.size() * lists_[pos]->size());
      for (const auto& p : level) {
        for (std::size_t i = 0; i < lists_[pos]->size(); ++i) next.push_back(extend(p, pos, static_cast<int>(i)));
      }
      level.swap(next);
    }
    return level;
  }

  // Residual of a complete sub-tuple, or a negative value when it is not resonant.
  double residual(const Partial& p) const {
    if (exact_) return p.exact == Rational(0) ? 0.0 : -1.0;
    const double r = multiplicative() ? std::abs(p.value - 1.0) : std::abs(p.value);
    return r <= options_.tol ? r : -1.0;
  }

  Partial join(const Partial& left, const Partial& right) const {
    Partial j = left;
    j.indices.insert(j.indices.end(), right.indices.begin(), right.indices.end());
    if (exact_) j.exact = multiplicative() ? (left.exact + right.exact).mod1() : left.exact + right.exact;
    j.value = multiplicative() ? left.value * right.value : left.value + right.value;
    return j;
  }

  std::vector<BlockMatch> exhaustive() const {
    std::vector<BlockMatch> out;
    // Depth-first to avoid materializing every sub-tuple.
    walk(0, empty_partial(), out);
    return out;
  }

  void walk(std::size_t pos, const Partial& p, std::vector<BlockMatch>& out) const {
    if (pos == lists_.size()) {
      const double r = residual(p);
      if (r >= 0.0) out.push_back({p.indices, r});
      return;
    }
    for (std::size_t i = 0; i < lists_[pos]->size(); ++i) walk(pos + 1, extend(p, pos, static_cast<int>(i)), out);
  }

  // Key of a partial in cycles: angle in [0,1) (multiplicative) or frequency.
  double cycles(const Partial& p) const {
    if (multiplicative()) {
      double t = std::arg(p.value) / (2.0 * std::numbers::pi);
      return t < 0.0 ? t + 1.0 : t;
    }
    return p.value.imag() / (2.0 * std::numbers::pi);
  }

  std::vector<BlockMatch> meet_in_the_middle() const {
    const std::size_t half = lists_.size() / 2;
    const std::vector<Partial> left = enumerate(0, half);
    const std::vector<Partial> right = enumerate(half, lists_.size());
    std::vector<BlockMatch> out;
    auto accept = [&](const Partial& l, const Partial& r) {
      const Partial full = join(l, r);
      const double res = residual(full);
      if (res >= 0.0) out.push_back({full.indices, res});
    };

    if (exact_) {
      std::map<Rational, std::vector<std::size_t>> table;
      for (std::size_t i = 0; i < left.size(); ++i) table[left[i].exact].push_back(i);
      for (const auto& r : right) {
        const Rational target = multiplicative() ? (-r.exact).mod1() : -r.exact;
        auto it = table.find(target);
        if (it == table.end()) continue;
        for (std::size_t i : it->second) accept(left[i], r);
      }
      return out;
    }

    const double width = std::max(2.0 * options_.tol / (2.0 * std::numbers::pi), 1e-12);
    auto key = [&](double x) { return static_cast<std::int64_t>(std::floor(x / width)); };
    std::unordered_map<std::int64_t, std::vector<std::size_t>> table;
    for (std::size_t i = 0; i < left.size(); ++i) table[key(cycles(left[i]))].push_back(i);
    std::vector<std::size_t> candidates;
    for (const auto& r : right) {
      double target = -cycles(r);
      if (multiplicative() && target < 0.0) target += 1.0;
      candidates.clear();
      // Multiplicative keys live on the circle: look one turn either side as well.
      const int wraps = multiplicative() ? 1 : 0;
      for (int s = -wraps; s <= wraps; ++s) {
        const std::int64_t centre = key(target + s);
        for (std::int64_t kk = centre - 1; kk <= centre + 1; ++kk) {
          auto it = table.find(kk);
          if (it != table.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
        }
      }
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      for (std::size_t i : candidates) accept(left[i], r);
    }
    return out;
  }

  std::vector<const Spectrum*> lists_;
  const ResonanceOptions& options_;
  bool exact_ = false;
};

}  // namespace

std::vector<UnimodularEigenvalue> unimodular_spectrum(const SpectralOperator& t, double tol) {
  if (!t.power_bounded()) fail(ErrorCode::NotPowerBounded, t.verdict().reason);
  std::vector<UnimodularEigenvalue> out;
  if (const auto& cert = t.certificate()) {
    for (std::size_t i = 0; i < cert->eigenvalues.size(); ++i) {
      const Complex lambda = cert->eigenvalues[i];
      const auto& angle = cert->angles[i];
      if (!angle && std::abs(std::abs(lambda) - 1.0) > tol) continue;
      auto it = std::find_if(out.begin(), out.end(), [&](const UnimodularEigenvalue& u) {
        if (angle || u.angle) return angle && u.angle && *angle == *u.angle;
        return std::abs(u.value - lambda) <= kClusterRadius;
      });
      if (it == out.end()) {
        out.push_back({lambda, angle, 1});
      } else {
        ++it->multiplicity;
      }
    }
    return out;
  }
  for (const auto& c : eig(t.matrix()).clusters) {
    if (std::abs(std::abs(c.value) - 1.0) <= tol) out.push_back({c.value, std::nullopt, c.algebraic});
  }
  return out;
}

std::vector<ResonantTuple> resonant_tuples(const std::vector<Spectrum>& spectra, const Partition& partition,
                                           const ResonanceOptions& options) {
  const int m = partition.m();
  if (static_cast<int>(spectra.size()) != m) {
    fail(ErrorCode::DimensionMismatch, "need one spectrum per position of the partition");
  }
  if (!(options.tol > 0.0)) fail(ErrorCode::ValidationError, "resonance tolerance must be positive");

  std::vector<std::vector<BlockMatch>> per_block;
  for (const auto& positions : partition.blocks()) {
    std::vector<const Spectrum*> lists;
    for (int p : positions) lists.push_back(&spectra[static_cast<std::size_t>(p)]);
    per_block.push_back(BlockSolver(std::move(lists), options).solve());
    if (per_block.back().empty()) return {};
  }

  std::vector<ResonantTuple> out;
  const std::size_t k = per_block.size();
  std::vector<std::size_t> pick(k, 0);
  while (true) {
    ResonantTuple t;
    t.indices.assign(static_cast<std::size_t>(m), -1);
    t.block_residuals.resize(k);
    for (std::size_t b = 0; b < k; ++b) {
      const BlockMatch& match = per_block[b][pick[b]];
      const auto& positions = partition.blocks()[b];
      for (std::size_t i = 0; i < positions.size(); ++i) {
        t.indices[static_cast<std::size_t>(positions[i])] = match.indices[i];
      }
      t.block_residuals[b] = match.residual;
      t.fragile = t.fragile || match.residual > kFragileFloor;
    }
    for (int j = 0; j < m; ++j) {
      const auto& u = spectra[static_cast<std::size_t>(j)][static_cast<std::size_t>(t.indices[static_cast<std::size_t>(j)])];
      t.lambdas.push_back(u.value);
      t.angles.push_back(u.angle);
    }
    out.push_back(std::move(t));
    std::size_t b = 0;
    while (b < k && ++pick[b] == per_block[b].size()) pick[b++] = 0;
    if (b == k) break;
  }
  std::sort(out.begin(), out.end(), [](const ResonantTuple& a, const ResonantTuple& b) { return a.indices < b.indices; });
  return out;
}

LimitResult limit_operator_detailed(const EntangledSystem& system, const ResonanceOptions& options) {
  const auto& ops = system.operators();
  std::vector<Spectrum> spectra;
  std::vector<std::vector<ComplexMatrix>> projections;
  for (const auto& t : ops) {
    if (!t.power_bounded()) fail(ErrorCode::NotPowerBounded, t.verdict().reason);
    spectra.push_back(t.unimodular_spectrum());
    projections.push_back(unimodular_projections(t));
  }
  LimitResult r;
  r.tuples = resonant_tuples(spectra, system.partition(), options);
  const int d = system.dim();
  r.limit = ComplexMatrix::Zero(d, d);
  for (const auto& tuple : r.tuples) {
    ComplexMatrix chain = projections[0][static_cast<std::size_t>(tuple.indices[0])];
    for (std::size_t j = 1; j < ops.size(); ++j) {
      chain = projections[j][static_cast<std::size_t>(tuple.indices[j])] * (system.connectors()[j - 1] * chain);
    }
    r.limit += chain;
  }
  return r;
}

ComplexMatrix limit_operator(const EntangledSystem& system, double tol) {
  ResonanceOptions o;
  o.tol = tol;
  return limit_operator_detailed(system, o).limit;
}

KvnReport kvn_diagnostic(const std::vector<double>& a, const KvnOptions& options) {
  if (a.empty()) fail(ErrorCode::EmptySequence, "sequence is empty");
  for (double x : a) {
    if (!std::isfinite(x) || x < 0.0) fail(ErrorCode::ValidationError, "sequence entries must be finite and nonnegative");
  }
  for (double e : options.epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) fail(ErrorCode::ValidationError, "epsilons must be positive");
  }
  const double step = options.sample_step.value_or(1.0);
  if (!(step > 0.0)) fail(ErrorCode::ValidationError, "sample step must be positive");

  const std::size_t n = a.size();
  std::vector<std::size_t> checkpoints;
  for (std::size_t c = 1; c < n; c *= 2) checkpoints.push_back(c);
  checkpoints.push_back(n);

  KvnReport report;
  double sum = 0.0, comp = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = a[i] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (i + 1 == checkpoints[next]) {
      const double count = static_cast<double>(i + 1);
      report.means.push_back({i + 1, count * step, sum / count});
      ++next;
    }
  }
  report.cesaro_null = report.means.back().mean <= options.threshold;

  std::vector<double> eps = options.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

  // Settling point per rung: first checkpoint from which the exceptional density
  // {a_n > eps} stays at most eps through the end of the data.
  std::vector<std::size_t> settle;
  for (double e : eps) {
    std::size_t above = 0;
    std::size_t ci = 0;
    std::vector<double> exceptional;
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] > e) ++above;
      if (i + 1 == checkpoints[ci]) {
        exceptional.push_back(static_cast<double>(above) / static_cast<double>(i + 1));
        ++ci;
      }
    }
    report.epsilon_ladder.emplace_back(e, 1.0 - exceptional.back());
    std::size_t start = 0;  // 0 = never
    for (std::size_t c = exceptional.size(); c-- > 0;) {
      if (exceptional[c] > e) break;
      start = checkpoints[c];
    }
    settle.push_back(start);
  }

  // Rungs must settle in order; a rung that never settles ends the construction.
  std::vector<std::pair<std::size_t, double>> rungs;  // (from n, eps)
  std::size_t last = 0;
  for (std::size_t r = 0; r < eps.size() && settle[r] != 0; ++r) {
    last = std::max(last, settle[r]);
    rungs.emplace_back(last, eps[r]);
  }
  if (rungs.empty()) return report;

  auto member = [&](std::size_t idx) {  // 1-based
    if (idx < rungs.front().first) return true;
    double e = rungs.front().second;
    for (const auto& [from, value] : rungs) {
      if (idx >= from) e = value;
    }
    return a[idx - 1] <= e;
  };
  for (std::size_t idx = 1; idx <= n; ++idx) {
    if (!member(idx)) continue;
    if (!report.density_one_set.empty()) {
      auto& run = report.density_one_set.back();
      if (run.first + run.second == idx) {
        ++run.second;
        continue;
      }
    }
    report.density_one_set.emplace_back(idx, 1);
  }
  return report;
}

}  // namespace entlab
