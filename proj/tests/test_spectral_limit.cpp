#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "entlab/error.hpp"
#include "entlab/spectral_limit.hpp"
#include "test_support.hpp"

using namespace entlab;
using namespace entlab::testing;

namespace {

using Spectrum = std::vector<UnimodularEigenvalue>;

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an entlab::Error");
  return ErrorCode::ValidationError;
}

Spectrum exact_spectrum(std::initializer_list<Rational> angles) {
  Spectrum s;
  for (const auto& a : angles) s.push_back({unit_root(a), a.mod1(), 1});
  return s;
}

Spectrum float_spectrum(std::initializer_list<Complex> values) {
  Spectrum s;
  for (auto v : values) s.push_back({v, std::nullopt, 1});
  return s;
}

std::set<std::vector<int>> index_set(const std::vector<ResonantTuple>& tuples) {
  std::set<std::vector<int>> out;
  for (const auto& t : tuples) out.insert(t.indices);
  return out;
}

// Full product enumeration with the constraint checked per block.
std::set<std::vector<int>> brute_force(const std::vector<Spectrum>& spectra, const Partition& p, double tol) {
  std::set<std::vector<int>> out;
  std::vector<int> idx(spectra.size(), 0);
  for (const auto& s : spectra) {
    if (s.empty()) return out;
  }
  while (true) {
    bool ok = true;
    for (const auto& positions : p.blocks()) {
      bool exact = true;
      Rational sum(0);
      Complex prod(1.0);
      for (int j : positions) {
        const auto& u = spectra[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        prod *= u.value;
        if (u.angle) {
          sum += *u.angle;
        } else {
          exact = false;
        }
      }
      ok = ok && (exact ? sum.mod1() == Rational(0) : std::abs(prod - 1.0) <= tol);
    }
    if (ok) out.insert(idx);
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == static_cast<int>(spectra[pos].size())) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return out;
}

int block_bit(std::size_t n) {
  int e = 0;
  while ((std::size_t{2} << e) <= n) ++e;
  return e % 2;
}

}  // namespace

TEST_CASE("unimodular_spectrum") {
  const auto a = unimodular_spectrum(SpectralOperator::from_matrix(diag({1.0, -1.0, 0.5})));
  REQUIRE(a.size() == 2);
  CHECK(sorted({a[0].value, a[1].value})[0].real() == doctest::Approx(-1.0));
  CHECK(sorted({a[0].value, a[1].value})[1].real() == doctest::Approx(1.0));
  const auto b = unimodular_spectrum(synth_operator({Rational(1, 3), Rational(1, 3)}, {}, BasisSpec::orthonormal(2)));
  REQUIRE(b.size() == 1);
  CHECK(b[0].multiplicity == 2);
  CHECK(*b[0].angle == Rational(1, 3));
  CHECK(std::abs(b[0].value - std::polar(1.0, 2.0 * std::numbers::pi / 3.0)) <= 1e-15);
  CHECK(unimodular_spectrum(SpectralOperator::from_matrix(diag({0.99})), 1e-6).empty());
  CHECK(unimodular_spectrum(synth_operator({}, {0.99}, BasisSpec::orthonormal(1)), 1e-6).empty());
  CHECK(unimodular_spectrum(synth_operator({}, {0.99}, BasisSpec::orthonormal(1)), 0.02).size() == 1);
  CHECK(code_of([] { unimodular_spectrum(SpectralOperator::from_matrix(diag({2.0}))); }) ==
        ErrorCode::NotPowerBounded);
}

TEST_CASE("resonant_tuples examples") {
  const auto pair = make_partition({1, 1});
  SUBCASE("plus minus one") {
    for (bool exact : {true, false}) {
      const Spectrum s = exact ? exact_spectrum({Rational(0), Rational(1, 2)}) : float_spectrum({1.0, -1.0});
      const auto t = resonant_tuples({s, s}, pair);
      REQUIRE(t.size() == 2);
      CHECK(t[0].indices == std::vector<int>{0, 0});
      CHECK(t[1].indices == std::vector<int>{1, 1});
      CHECK_FALSE(t[0].fragile);
      CHECK(t[1].block_residuals[0] <= 1e-15);
    }
  }
  SUBCASE("singletons force lambda = 1") {
    const Spectrum s = exact_spectrum({Rational(0), Rational(1, 2), Rational(1, 3)});
    const auto t = resonant_tuples({s, s, s}, make_partition({1, 2, 3}));
    REQUIRE(t.size() == 1);
    CHECK(t[0].indices == std::vector<int>{0, 0, 0});
  }
  SUBCASE("one, i, -i") {
    const Complex i{0.0, 1.0};
    const Spectrum s = float_spectrum({1.0, i, -i});
    const auto t = resonant_tuples({s, s}, pair);
    CHECK(index_set(t) == std::set<std::vector<int>>{{0, 0}, {1, 2}, {2, 1}});
  }
  SUBCASE("empty resonance set") {
    const Spectrum s = exact_spectrum({Rational(1, 4)});
    CHECK(resonant_tuples({s, s}, pair).empty());
    CHECK(resonant_tuples({s, {}}, pair).empty());
  }
  SUBCASE("errors") {
    const Spectrum s = exact_spectrum({Rational(0)});
    CHECK(code_of([&] { resonant_tuples({s}, pair); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("near misses are flagged") {
  const double theta = 0.3;
  const auto pair = make_partition({1, 1});
  const Spectrum a = float_spectrum({std::polar(1.0, theta)});
  const Spectrum close = float_spectrum({std::polar(1.0, -theta + 1e-9)});
  const Spectrum far = float_spectrum({std::polar(1.0, -theta + 1e-7)});
  const auto t = resonant_tuples({a, close}, pair);
  REQUIRE(t.size() == 1);
  CHECK(t[0].fragile);
  CHECK(resonant_tuples({a, far}, pair).empty());
  ResonanceOptions loose;
  loose.tol = 1e-6;
  CHECK(resonant_tuples({a, far}, pair, loose).size() == 1);
}

TEST_CASE("blockwise enumeration matches brute force") {
  const std::vector<std::vector<int>> alphas = {{1, 1}, {1, 2, 1}, {1, 1, 1}, {1, 2, 2, 1}, {2, 1, 2, 1}, {1, 2, 3},
                                                {1, 1, 2, 2, 1}};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    CounterRng rng(seed);
    const auto p = make_partition(alphas[seed % alphas.size()]);
    const bool exact = seed % 3 != 0;
    std::vector<Spectrum> spectra;
    double size = 1.0;
    for (int j = 0; j < p.m(); ++j) {
      Spectrum s;
      const int count = static_cast<int>(rng.next_below(6));
      for (int i = 0; i < count; ++i) {
        const auto q = static_cast<std::int64_t>(1 + rng.next_below(6));
        const Rational angle(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(q))), q);
        bool dup = false;
        for (const auto& u : s) dup = dup || *u.angle == angle;
        if (!dup) s.push_back({unit_root(angle), angle, 1});
      }
      if (!exact) {
        for (auto& u : s) u.angle.reset();
      }
      size *= static_cast<double>(s.size());
      spectra.push_back(std::move(s));
    }
    REQUIRE(size <= 1e4);
    const auto oracle = brute_force(spectra, p, kResonanceTol);
    CHECK(index_set(resonant_tuples(spectra, p)) == oracle);
    ResonanceOptions mitm;
    mitm.mitm_threshold = 1;
    CHECK(index_set(resonant_tuples(spectra, p, mitm)) == oracle);
  }
}

TEST_CASE("meet in the middle on a large block") {
  // Eight positions, each with all sixth roots of unity: 6^8 sub-tuples.
  Spectrum s;
  for (int i = 0; i < 6; ++i) s.push_back({unit_root(Rational(i, 6)), Rational(i, 6), 1});
  const auto p = make_partition(std::vector<int>(8, 1));
  const std::vector<Spectrum> exact(8, s);
  const auto t = resonant_tuples(exact, p);
  CHECK(t.size() == 279936);  // 6^7: the last index is forced
  Spectrum f = s;
  for (auto& u : f) u.angle.reset();
  const auto tf = resonant_tuples(std::vector<Spectrum>(8, f), p);
  CHECK(tf.size() == 279936);
  CHECK(index_set(t) == index_set(tf));
}

TEST_CASE("additive rule") {
  ResonanceOptions add;
  add.rule = ResonanceOptions::Rule::Additive;
  auto freq = [](std::initializer_list<Rational> phis) {
    Spectrum s;
    for (const auto& phi : phis) s.push_back({Complex(0.0, 2.0 * std::numbers::pi * phi.to_double()), phi, 1});
    return s;
  };
  const Spectrum s = freq({Rational(1, 2), Rational(0)});
  const auto t = resonant_tuples({s, s}, make_partition({1, 1}), add);
  REQUIRE(t.size() == 1);
  CHECK(t[0].indices == std::vector<int>{1, 1});
  const Spectrum u = freq({Rational(1, 2), Rational(-1, 2), Rational(0)});
  CHECK(resonant_tuples({u, u}, make_partition({1, 1}), add).size() == 3);
  add.mitm_threshold = 1;
  CHECK(resonant_tuples({u, u}, make_partition({1, 1}), add).size() == 3);
  Spectrum uf = u;
  for (auto& e : uf) e.angle.reset();
  CHECK(resonant_tuples({uf, uf}, make_partition({1, 1}), add).size() == 3);
}

TEST_CASE("rotating one block leaves the resonances in bijection") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CounterRng rng(seed);
    std::vector<Spectrum> spectra(3);
    for (auto& s : spectra) {
      for (int i = 0; i < 4; ++i) {
        const Rational a(static_cast<std::int64_t>(rng.next_below(4)), 4);
        bool dup = false;
        for (const auto& u : s) dup = dup || *u.angle == a;
        if (!dup) s.push_back({unit_root(a), a, 1});
      }
    }
    const auto p = make_partition({1, 2, 1});
    const auto base = index_set(resonant_tuples(spectra, p));
    // Multiply position 3 by mu and position 1 by conj(mu): every block product is unchanged.
    const Rational mu(1, 8);
    auto rotated = spectra;
    for (auto& u : rotated[2]) u = {unit_root(*u.angle + mu), (*u.angle + mu).mod1(), 1};
    for (auto& u : rotated[0]) u = {unit_root(*u.angle - mu), (*u.angle - mu).mod1(), 1};
    CHECK(index_set(resonant_tuples(rotated, p)) == base);
  }
}

TEST_CASE("limit_operator") {
  SUBCASE("single position is the mean ergodic projection") {
    const auto t = operator_of_dim(4, 5, false);
    const EntangledSystem s(make_partition({1}), {t}, {});
    const ComplexMatrix p = limit_operator(s);
    CHECK(op_norm(p - mean_ergodic_projection(t, Complex(1.0))) <= 1e-12);
    CHECK(op_norm(p * p - p) <= 1e-10);
  }
  SUBCASE("diag(1,-1) pair keeps the diagonal") {
    const Complex a{0.3, 1.0}, b{2.0}, c{-1.0, 0.5}, d{0.25};
    const auto u = SpectralOperator::from_matrix(diag({1.0, -1.0}));
    const EntangledSystem s(make_partition({1, 1}), {u, u}, {mat2(a, b, c, d)});
    const auto r = limit_operator_detailed(s);
    CHECK(r.tuples.size() == 2);
    CHECK(op_norm(r.limit - diag({a, d})) <= 1e-14);
  }
  SUBCASE("no resonance gives zero") {
    const auto u = SpectralOperator::from_matrix(diag({Complex(0.0, 1.0)}));
    ComplexMatrix a = ComplexMatrix::Ones(1, 1);
    const EntangledSystem s(make_partition({1, 1}), {u, u}, {a});
    CHECK(limit_operator(s).norm() == 0.0);
  }
  SUBCASE("averages converge to it") {
    for (const auto& alpha : {std::vector<int>{1, 1}, std::vector<int>{1, 2, 1}, std::vector<int>{1, 1, 1}}) {
      auto p = make_partition(alpha);
      std::vector<SpectralOperator> t;
      std::vector<ComplexMatrix> a;
      for (int j = 0; j < p.m(); ++j) {
        t.push_back(synth_operator({Rational(0), Rational(1, 2), Rational(1, 3)}, {0.5, Complex(0.0, -0.8)},
                                   BasisSpec::orthonormal(40 + static_cast<std::uint64_t>(j))));
      }
      for (int j = 0; j + 1 < p.m(); ++j) a.push_back(haar_unitary(5, 60 + static_cast<std::uint64_t>(j)));
      const EntangledSystem s(std::move(p), std::move(t), std::move(a));
      const ComplexMatrix lim = limit_operator(s);
      const double e1 = op_norm(entangled_average(s, 64) - lim);
      const double e2 = op_norm(entangled_average(s, 512) - lim);
      CHECK(e2 < e1);
      CHECK(e2 <= 40.0 / 512);
    }
  }
}

TEST_CASE("kvn_diagnostic") {
  SUBCASE("zero sequence") {
    const auto r = kvn_diagnostic(std::vector<double>(100, 0.0));
    CHECK(r.cesaro_null);
    for (const auto& [e, density] : r.epsilon_ladder) CHECK(density == 1.0);
    REQUIRE(r.density_one_set.size() == 1);
    CHECK(r.density_one_set[0] == std::pair<std::size_t, std::size_t>{1, 100});
  }
  SUBCASE("constant one") {
    KvnOptions o;
    o.epsilons = {0.5};
    const auto r = kvn_diagnostic(std::vector<double>(64, 1.0), o);
    CHECK_FALSE(r.cesaro_null);
    CHECK(r.epsilon_ladder[0].second == 0.0);
    CHECK(r.density_one_set.empty());
  }
  SUBCASE("dyadic block sequence oscillates") {
    std::vector<double> a;
    for (std::size_t n = 1; n <= (std::size_t{1} << 16); ++n) a.push_back(block_bit(n));
    const auto r = kvn_diagnostic(a);
    CHECK_FALSE(r.cesaro_null);
    for (const auto& c : r.means) {
      if (c.n < 256) continue;
      int e = 0;
      while ((std::size_t{1} << (e + 1)) <= c.n) ++e;
      // Mean of f at 4^j is near 2/3, at 2 * 4^j near 1/3.
      if (e % 2 == 0) CHECK(c.mean == doctest::Approx(2.0 / 3.0).epsilon(0.01));
      if (e % 2 == 1) CHECK(c.mean == doctest::Approx(1.0 / 3.0).epsilon(0.01));
    }
  }
  SUBCASE("indicator of the squares is Cesaro null") {
    std::vector<double> a(40000, 0.0);
    for (std::size_t k = 1; k * k <= a.size(); ++k) a[k * k - 1] = 1.0;
    const auto r = kvn_diagnostic(a);
    CHECK(r.cesaro_null);
    std::size_t covered = 0;
    for (const auto& [start, len] : r.density_one_set) {
      covered += len;
      for (std::size_t i = start; i < start + len; ++i) {
        if (i >= 4096) CHECK(a[i - 1] == 0.0);
      }
    }
    CHECK(static_cast<double>(covered) / a.size() >= 0.99);
  }
  SUBCASE("harmonic decay, continuous mode") {
    std::vector<double> a;
    for (int n = 1; n <= 10000; ++n) a.push_back(1.0 / n);
    KvnOptions o;
    o.sample_step = 0.5;
    const auto r = kvn_diagnostic(a, o);
    CHECK(r.cesaro_null);
    CHECK(r.means.back().time == doctest::Approx(5000.0));
  }
  SUBCASE("errors") {
    CHECK(code_of([] { kvn_diagnostic({}); }) == ErrorCode::EmptySequence);
    CHECK(code_of([] { kvn_diagnostic({1.0, -0.5}); }) == ErrorCode::ValidationError);
    CHECK(code_of([] { kvn_diagnostic({1.0, NAN}); }) == ErrorCode::ValidationError);
  }
}
