#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace coeval {

// Fixed-point token amount with 6 decimal places (1 token = 1'000'000 micros).
class Tokens {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Tokens() = default;
  static constexpr Tokens from_micros(std::int64_t micros) { return Tokens(micros); }
  static constexpr Tokens whole(std::int64_t tokens) { return Tokens(tokens * kScale); }
  // Rounds half away from zero to the nearest micro.
  static Tokens from_double(double tokens);
  // Strict "<digits>.<6 digits>" or "<digits>" parser; throws std::invalid_argument.
  static Tokens parse(std::string_view text);

  constexpr std::int64_t micros() const { return micros_; }
  double to_double() const { return static_cast<double>(micros_) / kScale; }
  // Always renders exactly 6 fractional digits, e.g. "33.333334".
  std::string str() const;

  constexpr Tokens& operator+=(Tokens o) { micros_ += o.micros_; return *this; }
  constexpr Tokens& operator-=(Tokens o) { micros_ -= o.micros_; return *this; }
  friend constexpr Tokens operator+(Tokens a, Tokens b) { return a += b; }
  friend constexpr Tokens operator-(Tokens a, Tokens b) { return a -= b; }
  friend constexpr auto operator<=>(Tokens, Tokens) = default;

 private:
  constexpr explicit Tokens(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

// Benchmark scores travel as decimal strings with exactly 4 fractional digits,
// rounded half-up. The integer form counts ten-thousandths of a point.
std::int64_t score_units(double score);
std::string format_score(double score);
double parse_score(std::string_view text);

}  // namespace coeval
