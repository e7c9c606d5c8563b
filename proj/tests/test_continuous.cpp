#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "entlab/continuous.hpp"
#include "entlab/error.hpp"
#include "test_support.hpp"

using namespace entlab;
using namespace entlab::testing;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an entlab::Error");
  return ErrorCode::ValidationError;
}

// (1/t) int_0^t exp(mu s) ds
Complex mean_exp(Complex mu, double t) {
  const Complex z = mu * t;
  if (std::abs(z) < 1e-8) return 1.0 + z / 2.0;
  return (std::exp(z) - 1.0) / z;
}

// Exact pair-partition average from the certificates: entries of S2^{-1} A S1
// are multiplied by the mean of exp((mu2_i + mu1_j) s).
ComplexMatrix exact_pair_average(const Semigroup& g1, const Semigroup& g2, const ComplexMatrix& a, double t) {
  const auto& c1 = *g1.certificate();
  const auto& c2 = *g2.certificate();
  ComplexMatrix h = c2.s_inv * a * c1.s;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      h(i, j) *= mean_exp(c2.eigenvalues[static_cast<std::size_t>(i)] + c1.eigenvalues[static_cast<std::size_t>(j)], t);
    }
  }
  return c2.s * h * c1.s_inv;
}

std::vector<double> phis(const std::vector<FrequencyPoint>& f) {
  std::vector<double> out;
  for (const auto& p : f) out.push_back(p.phi);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("frequency_spectrum") {
  const auto zero = frequency_spectrum(Semigroup::from_generator(ComplexMatrix::Zero(3, 3)));
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].phi == 0.0);
  CHECK(zero[0].multiplicity == 3);

  const auto quarter = frequency_spectrum(Semigroup::from_generator(diag({Complex(0.0, kTwoPi / 4), -1.0})));
  REQUIRE(quarter.size() == 1);
  CHECK(quarter[0].phi == doctest::Approx(0.25));
  const auto synth = frequency_spectrum(synth_semigroup({Rational(1, 4)}, {-1.0}, BasisSpec::orthonormal(3)));
  REQUIRE(synth.size() == 1);
  CHECK(*synth[0].exact == Rational(1, 4));

  const auto rot = frequency_spectrum(Semigroup::from_generator(mat2(0.0, -kTwoPi, kTwoPi, 0.0)));
  const auto r = phis(rot);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == doctest::Approx(-1.0));
  CHECK(r[1] == doctest::Approx(1.0));

  CHECK_FALSE(Semigroup::from_generator(diag({0.1, -1.0})).bounded());
  CHECK_FALSE(Semigroup::from_generator(mat2(0.0, 1.0, 0.0, 0.0)).bounded());
  CHECK(Semigroup::from_generator(mat2(-1.0, 1.0, 0.0, -1.0)).bounded());
  CHECK(code_of([] { frequency_spectrum(Semigroup::from_generator(diag({0.1}))); }) ==
        ErrorCode::NotBoundedSemigroup);
  CHECK(code_of([] { synth_semigroup({}, {0.5}, BasisSpec::orthonormal(1)); }) == ErrorCode::NotBoundedSemigroup);
}

TEST_CASE("quadrature rules") {
  for (int q : {2, 3, 7, 20, 64}) {
    const auto [x, w] = quadrature_rule({QuadratureSpec::Scheme::GaussLegendre, q}, 3.0);
    double total = 0.0;
    for (double v : w) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::is_sorted(x.begin(), x.end()));
    // Exact for polynomials of degree 2q-1: mean of s^(2q-1) on [0,3].
    const int deg = 2 * q - 1;
    double integral = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) integral += w[i] * std::pow(x[i], deg);
    CHECK(integral == doctest::Approx(std::pow(3.0, deg) / (deg + 1)).epsilon(1e-11));
  }
  const auto [x, w] = quadrature_rule({QuadratureSpec::Scheme::Midpoint, 4}, 2.0);
  CHECK(x == std::vector<double>{0.25, 0.75, 1.25, 1.75});
  CHECK(code_of([] { quadrature_rule({QuadratureSpec::Scheme::Midpoint, 1}, 1.0); }) == ErrorCode::ValidationError);
  CHECK(code_of([] { quadrature_rule({QuadratureSpec::Scheme::Midpoint, 4}, 0.0); }) == ErrorCode::ValidationError);
}

TEST_CASE("semigroup law on the grid") {
  const auto g = synth_semigroup({Rational(1, 3), Rational(-1, 8)}, {Complex(-0.2, 1.0)},
                                 BasisSpec::random_similarity(5, 20.0));
  const auto [x, w] = quadrature_rule({QuadratureSpec::Scheme::Midpoint, 16}, 8.0);
  for (std::size_t i = 0; i < x.size(); i += 3) {
    for (std::size_t j = 0; j < x.size(); j += 5) {
      const ComplexMatrix lhs = g.at(x[i] + x[j]);
      CHECK(op_norm(lhs - g.at(x[i]) * g.at(x[j])) <= 1e-8 * std::max(1.0, op_norm(lhs)));
    }
  }
}

TEST_CASE("single semigroup average") {
  const double t = 10.3;
  const auto g = Semigroup::from_generator(diag({Complex(0.0, kTwoPi), 0.0}));
  const ContinuousSystem s(make_partition({1}), {g}, {});
  const auto avg = continuous_entangled_average(s, t, {QuadratureSpec::Scheme::Midpoint, 4000});
  CHECK(std::abs(avg.value(0, 0) - mean_exp(Complex(0.0, kTwoPi), t)) <= 1e-6);
  CHECK(std::abs(avg.value(1, 1) - 1.0) <= 1e-14);
  CHECK(std::abs(avg.value(0, 0)) <= 1.0 / (std::numbers::pi * t) + 1e-6);
  CHECK(avg.error_estimate >= 0.0);
  const auto gl = continuous_entangled_average(s, t, {QuadratureSpec::Scheme::GaussLegendre, 60});
  CHECK(std::abs(gl.value(0, 0) - mean_exp(Complex(0.0, kTwoPi), t)) <= 1e-12);
}

TEST_CASE("zero generators give the plain product") {
  const auto g = Semigroup::from_generator(ComplexMatrix::Zero(3, 3));
  const ComplexMatrix a1 = gaussian_matrix(3, 3, 1), a2 = gaussian_matrix(3, 3, 2);
  const ContinuousSystem s(make_partition({1, 2, 1}), {g, g, g}, {a1, a2});
  for (double t : {0.5, 7.0}) {
    for (int q : {2, 9}) {
      const auto avg = continuous_entangled_average(s, t, {QuadratureSpec::Scheme::Midpoint, q});
      CHECK(op_norm(avg.value - a2 * a1) <= 1e-13 * op_norm(a2 * a1));
    }
  }
}

TEST_CASE("Richardson estimate") {
  const auto g1 = synth_semigroup({Rational(1, 2), Rational(0)}, {Complex(-0.3, 0.7)}, BasisSpec::orthonormal(7));
  const auto g2 = synth_semigroup({Rational(-1, 4), Rational(0)}, {Complex(-0.1, -2.0)}, BasisSpec::orthonormal(8));
  const ComplexMatrix a = gaussian_matrix(3, 3, 9);
  const ContinuousSystem s(make_partition({1, 1}), {g1, g2}, {a});
  const double t = 100.0;
  const ComplexMatrix exact = exact_pair_average(g1, g2, a, t);
  for (int q : {1000, 2000, 4000}) {
    ContinuousOptions o;
    const auto avg = continuous_entangled_average(s, t, {QuadratureSpec::Scheme::Midpoint, q}, o);
    QuadratureSpec fine{QuadratureSpec::Scheme::Midpoint, 2 * q};
    o.estimate_error = false;
    const auto finer = continuous_entangled_average(s, t, fine, o);
    CHECK(finer.error_estimate < 0.0);
    CHECK(op_norm(avg.value - finer.value) <= avg.error_estimate);
    const double truth = op_norm(avg.value - exact);
    CHECK(truth <= 5.0 * avg.error_estimate);
    CHECK(avg.error_estimate <= 5.0 * truth);
  }
}

TEST_CASE("vector mode and strategies agree") {
  const auto g1 = synth_semigroup({Rational(1, 3)}, {Complex(-0.5, 0.0), Complex(-1.0, 3.0)}, BasisSpec::orthonormal(1));
  const auto g2 = synth_semigroup({Rational(-1, 3), Rational(0)}, {Complex(-0.2, 0.0)}, BasisSpec::orthonormal(2));
  const ContinuousSystem s(make_partition({1, 2, 1}), {g1, g2, g1}, {gaussian_matrix(3, 3, 3), gaussian_matrix(3, 3, 4)});
  ContinuousOptions presum, full;
  full.presum = false;
  presum.estimate_error = full.estimate_error = false;
  const QuadratureSpec q{QuadratureSpec::Scheme::Midpoint, 40};
  const ComplexMatrix a = continuous_entangled_average(s, 12.0, q, presum).value;
  const ComplexMatrix b = continuous_entangled_average(s, 12.0, q, full).value;
  CHECK(op_norm(a - b) <= 1e-12 * std::max(1.0, op_norm(a)));
  const ComplexMatrix x = gaussian_matrix(3, 1, 5);
  CHECK(op_norm(continuous_entangled_average(s, 12.0, q, x, presum).value - a * x) <= 1e-12 * std::max(1.0, op_norm(a)));
}

TEST_CASE("continuous limit") {
  SUBCASE("single semigroup: projection onto the kernel") {
    const auto g = synth_semigroup({Rational(0), Rational(1, 5), Rational(0)}, {Complex(-1.0, 0.5)},
                                   BasisSpec::random_similarity(4, 20.0));
    const ContinuousSystem s(make_partition({1}), {g}, {});
    const ComplexMatrix p = continuous_limit_operator(s);
    CHECK(op_norm(p * p - p) <= 1e-10);
    CHECK(op_norm(g.generator() * p) <= 1e-10);
    CHECK(std::abs(p.trace() - 2.0) <= 1e-10);
  }
  SUBCASE("frequencies one half and zero keep only the zero-zero entry") {
    // Resonances need phi_1 + phi_2 = 0 exactly; 1/2 + 1/2 = 1 does not count, so
    // only (0,0) survives and the a_11 entry is averaged away.
    const auto g = Semigroup::from_generator(diag({Complex(0.0, kTwoPi / 2), 0.0}));
    const ComplexMatrix a = mat2(Complex(0.3, 0.1), 2.0, -1.0, Complex(0.7, -0.4));
    const ContinuousSystem s(make_partition({1, 1}), {g, g}, {a});
    const auto r = continuous_limit_detailed(s);
    CHECK(r.tuples.size() == 1);
    CHECK(op_norm(r.limit - diag({0.0, a(1, 1)})) <= 1e-14);
    const auto avg = continuous_entangled_average(s, 500.0, {QuadratureSpec::Scheme::Midpoint, 20000});
    CHECK(op_norm(avg.value - r.limit) <= 0.01);
  }
  SUBCASE("empty resonance set") {
    const auto g = synth_semigroup({Rational(1, 4)}, {}, BasisSpec::orthonormal(1));
    const ContinuousSystem s(make_partition({1, 1}), {g, g}, {ComplexMatrix::Ones(1, 1)});
    CHECK(continuous_limit_operator(s).norm() == 0.0);
  }
  SUBCASE("averages approach the limit") {
    const auto g1 = synth_semigroup({Rational(1, 2), Rational(0)}, {Complex(-0.4, 0.0)}, BasisSpec::orthonormal(11));
    const auto g2 = synth_semigroup({Rational(-1, 2), Rational(1, 8)}, {Complex(-0.2, 1.0)}, BasisSpec::orthonormal(12));
    const ContinuousSystem s(make_partition({1, 1}), {g1, g2}, {haar_unitary(3, 13)});
    const ComplexMatrix lim = continuous_limit_operator(s);
    ContinuousOptions o;
    o.estimate_error = false;
    const double e1 = op_norm(continuous_entangled_average(s, 20.0, {QuadratureSpec::Scheme::Midpoint, 400}, o).value - lim);
    const double e2 =
        op_norm(continuous_entangled_average(s, 400.0, {QuadratureSpec::Scheme::Midpoint, 8000}, o).value - lim);
    CHECK(e2 < e1);
    CHECK(e2 <= 0.05);
  }
}

TEST_CASE("additive and multiplicative resonances agree on principal frequencies") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    CounterRng rng(seed);
    std::vector<std::vector<UnimodularEigenvalue>> add(4), mul(4);
    for (int j = 0; j < 4; ++j) {
      std::set<Rational> used;
      for (int i = 0; i < 4; ++i) {
        // Principal values strictly inside (-1/2, 1/2) with denominator 8.
        const Rational phi(static_cast<std::int64_t>(rng.next_below(7)) - 3, 8);
        if (!used.insert(phi).second) continue;
        add[static_cast<std::size_t>(j)].push_back({Complex(0.0, kTwoPi * phi.to_double()), phi, 1});
        mul[static_cast<std::size_t>(j)].push_back({unit_root(phi), phi.mod1(), 1});
      }
    }
    // Pair blocks: sums of two principal values lie in (-1, 1).
    const auto p = make_partition({1, 2, 2, 1});
    ResonanceOptions ao;
    ao.rule = ResonanceOptions::Rule::Additive;
    std::set<std::vector<int>> a_set, m_set;
    for (const auto& t : resonant_tuples(add, p, ao)) a_set.insert(t.indices);
    for (const auto& t : resonant_tuples(mul, p)) m_set.insert(t.indices);
    CHECK(a_set == m_set);
  }
}

TEST_CASE("continuous system validation") {
  const auto g = Semigroup::from_generator(ComplexMatrix::Zero(2, 2));
  const auto h = Semigroup::from_generator(ComplexMatrix::Zero(3, 3));
  const auto bad = Semigroup::from_generator(diag({0.5, 0.0}));
  CHECK(code_of([&] { ContinuousSystem(make_partition({1, 1}), {g, h}, {ComplexMatrix::Identity(2, 2)}); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { ContinuousSystem(make_partition({1}), {bad}, {}); }) == ErrorCode::NotBoundedSemigroup);
  const ComplexMatrix eye = ComplexMatrix::Identity(2, 2);
  const ContinuousSystem s(make_partition({1, 2, 1, 2}), {g, g, g, g}, {eye, eye, eye});
  ContinuousOptions tight;
  tight.contraction.budget = 1e5;
  CHECK(code_of([&] { continuous_entangled_average(s, 1.0, {QuadratureSpec::Scheme::Midpoint, 200}, tight); }) ==
        ErrorCode::BudgetExceeded);
}
