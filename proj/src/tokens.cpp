#include "coeval/tokens.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace coeval {

namespace {

std::int64_t parse_fixed(std::string_view text, int digits, const char* what) {
  auto fail = [&] {
    throw std::invalid_argument(std::string("malformed ") + what + ": '" + std::string(text) + "'");
  };
  if (text.empty()) fail();
  std::size_t i = 0;
  bool negative = false;
  if (text[0] == '-') {
    negative = true;
    ++i;
  }
  std::int64_t whole = 0;
  std::size_t start = i;
  for (; i < text.size() && text[i] != '.'; ++i) {
    if (text[i] < '0' || text[i] > '9') fail();
    whole = whole * 10 + (text[i] - '0');
    if (whole > 9'000'000'000'000) fail();
  }
  if (i == start) fail();
  std::int64_t frac = 0;
  if (i < text.size()) {
    ++i;
    if (text.size() - i != static_cast<std::size_t>(digits)) fail();
    for (; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') fail();
      frac = frac * 10 + (text[i] - '0');
    }
  }
  std::int64_t scale = 1;
  for (int d = 0; d < digits; ++d) scale *= 10;
  std::int64_t v = whole * scale + frac;
  return negative ? -v : v;
}

std::string render_fixed(std::int64_t v, std::int64_t scale, int digits) {
  const bool negative = v < 0;
  const std::int64_t a = negative ? -v : v;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%0*lld", negative ? "-" : "",
                static_cast<long long>(a / scale), digits, static_cast<long long>(a % scale));
  return buf;
}

}  // namespace

Tokens Tokens::from_double(double tokens) {
  return Tokens(std::llround(tokens * static_cast<double>(kScale)));
}

Tokens Tokens::parse(std::string_view text) { return Tokens(parse_fixed(text, 6, "token amount")); }

std::string Tokens::str() const { return render_fixed(micros_, kScale, 6); }

std::int64_t score_units(double score) {
  // llround is half-away-from-zero, which equals half-up for the [0, 100] domain.
  return std::llround(score * 10'000.0);
}

std::string format_score(double score) { return render_fixed(score_units(score), 10'000, 4); }

double parse_score(std::string_view text) {
  return static_cast<double>(parse_fixed(text, 4, "score")) / 10'000.0;
}

}  // namespace coeval
