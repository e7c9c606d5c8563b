#include "entlab/rational.hpp"

#include <charconv>
#include <cstdlib>

#include "entlab/error.hpp"

namespace entlab {
namespace {

__extension__ typedef __int128 Wide;

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorCode::Overflow, "rational arithmetic overflow");
  return out;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) fail(ErrorCode::Overflow, "rational arithmetic overflow");
  return out;
}

}  // namespace

Rational::Rational(std::int64_t p, std::int64_t q) {
  if (q == 0) fail(ErrorCode::BadAngle, "zero denominator");
  if (q < 0) {
    p = -p;
    q = -q;
  }
  const std::int64_t g = std::gcd(p, q);
  num_ = p / g;
  den_ = q / g;
}

Rational Rational::mod1() const {
  std::int64_t r = num_ % den_;
  if (r < 0) r += den_;
  return Rational(r, den_);
}

Rational Rational::principal() const {
  Rational r = mod1();
  if (Rational(2) * r > Rational(1)) r = r - Rational(1);
  return r;
}

Rational operator+(const Rational& a, const Rational& b) {
  const std::int64_t g = std::gcd(a.den_, b.den_);
  const std::int64_t lhs = checked_mul(a.num_, b.den_ / g);
  const std::int64_t rhs = checked_mul(b.num_, a.den_ / g);
  return Rational(checked_add(lhs, rhs), checked_mul(a.den_ / g, b.den_));
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  const std::int64_t g1 = std::gcd(a.num_, b.den_);
  const std::int64_t g2 = std::gcd(b.num_, a.den_);
  const std::int64_t d1 = g1 == 0 ? 1 : g1;
  const std::int64_t d2 = g2 == 0 ? 1 : g2;
  return Rational(checked_mul(a.num_ / d1, b.num_ / d2), checked_mul(a.den_ / d2, b.den_ / d1));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) fail(ErrorCode::Overflow, "rational division by zero");
  return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const Wide lhs = static_cast<Wide>(a.num_) * b.den_;
  const Wide rhs = static_cast<Wide>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Rational::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

ParsedFraction parse_fraction(std::string_view text) {
  auto parse_int = [&](std::string_view part) {
    while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
    while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
    if (!part.empty() && part.front() == '+') part.remove_prefix(1);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      fail(ErrorCode::BadAngle, "malformed fraction '" + std::string(text) + "'");
    }
    return value;
  };
  const auto slash = text.find('/');
  std::int64_t p = 0;
  std::int64_t q = 1;
  if (slash == std::string_view::npos) {
    p = parse_int(text);
  } else {
    p = parse_int(text.substr(0, slash));
    q = parse_int(text.substr(slash + 1));
  }
  if (q == 0) fail(ErrorCode::BadAngle, "zero denominator in '" + std::string(text) + "'");
  ParsedFraction out{Rational(p, q), false};
  out.was_reduced = (out.value.num() != (q < 0 ? -p : p)) || (out.value.den() != (q < 0 ? -q : q));
  return out;
}

}  // namespace entlab
