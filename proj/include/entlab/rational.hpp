#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>

namespace entlab {

/// Reduced fraction p/q with q > 0. Used for exact eigenvalue angles (in turns),
/// frequencies (in cycles per unit time) and exact averages of 0-1 data.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t p) : num_(p), den_(1) {}
  Rational(std::int64_t p, std::int64_t q);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// Representative of the class modulo 1 in [0, 1).
  Rational mod1() const;
  /// Representative modulo 1 in (-1/2, 1/2].
  Rational principal() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  Rational operator-() const { return Rational(-num_, den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  std::string str() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct ParsedFraction {
  Rational value;
  bool was_reduced = false;  ///< true when the text was not in lowest terms
};

/// Parses "p/q" or "p". Throws Error(BadAngle) on malformed text or q == 0.
ParsedFraction parse_fraction(std::string_view text);

}  // namespace entlab
