#include "frogpred/rational.hpp"

#include <cmath>
#include <limits>

#include "frogpred/error.hpp"

namespace frogpred {

BigInt to_bigint(unsigned __int128 value) {
  BigInt high = static_cast<unsigned long long>(value >> 64);
  BigInt low = static_cast<unsigned long long>(value & ~std::uint64_t{0});
  return (high << 64) | low;
}

std::string to_fraction_string(const Rational& value) {
  return numerator(value).str() + "/" + denominator(value).str();
}

std::string to_compact_string(const Rational& value) {
  if (denominator(value) == 1) return numerator(value).str();
  return to_fraction_string(value);
}

namespace {

BigInt parse_integer(std::string_view text, std::size_t offset, bool allow_sign) {
  std::size_t i = 0;
  bool negative = false;
  if (allow_sign && i < text.size() && (text[i] == '-' || text[i] == '+')) {
    negative = text[i] == '-';
    ++i;
  }
  if (i == text.size()) throw ParseError("expected digits", offset + i);
  BigInt value = 0;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c < '0' || c > '9') throw ParseError(std::string("unexpected character '") + c + "'", offset + i);
    value = value * 10 + (c - '0');
  }
  return negative ? BigInt(-value) : value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  if (text.empty()) throw ParseError("empty rational", 0);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const BigInt num = parse_integer(text.substr(0, slash), 0, true);
    const BigInt den = parse_integer(text.substr(slash + 1), slash + 1, false);
    if (den == 0) throw ParseError("zero denominator", slash + 1);
    return Rational(num, den);
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view whole = text.substr(0, dot);
    std::string_view frac = text.substr(dot + 1);
    bool negative = !whole.empty() && whole.front() == '-';
    if (!whole.empty() && (whole.front() == '-' || whole.front() == '+')) whole.remove_prefix(1);
    const std::size_t whole_offset = text.size() - frac.size() - 1 - whole.size();
    const BigInt int_part = whole.empty() ? BigInt(0) : parse_integer(whole, whole_offset, false);
    if (frac.empty()) throw ParseError("expected digits after '.'", dot + 1);
    const BigInt frac_part = parse_integer(frac, dot + 1, false);
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Rational value = Rational(int_part) + Rational(frac_part, scale);
    return negative ? Rational(-value) : value;
  }
  return Rational(parse_integer(text, 0, true));
}

Rational rational_from_decimal(double x, std::uint64_t max_denominator) {
  if (!std::isfinite(x)) throw InvalidArgument("rational_from_decimal: non-finite input");
  if (max_denominator == 0) throw InvalidArgument("rational_from_decimal: max_denominator must be positive");
  const bool negative = x < 0;
  // The double is itself an exact dyadic rational; approximate that exactly.
  Rational target;
  {
    int exponent = 0;
    const double mantissa = std::frexp(std::fabs(x), &exponent);
    const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
    exponent -= 53;
    BigInt num = scaled;
    BigInt den = 1;
    if (exponent >= 0) num <<= exponent; else den <<= -exponent;
    target = Rational(num, den);
  }
  // Continued fraction walk with semiconvergent check at the cutoff.
  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  Rational rest = target;
  for (;;) {
    const BigInt a = numerator(rest) / denominator(rest);
    const BigInt q2 = q0 + a * q1;
    if (q2 > max_denominator) {
      const BigInt k = (BigInt(max_denominator) - q0) / q1;
      const Rational semi(p0 + k * p1, q0 + k * q1);
      const Rational conv(p1, q1);
      Rational best = abs(semi - target) < abs(conv - target) ? semi : conv;
      return negative ? Rational(-best) : best;
    }
    const BigInt p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const Rational frac = rest - Rational(a);
    if (frac == 0) break;
    rest = 1 / frac;
  }
  Rational result(p1, q1);
  return negative ? Rational(-result) : result;
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

BigInt ceil_nonneg(const Rational& value) {
  const BigInt& num = numerator(value);
  const BigInt& den = denominator(value);
  return (num + den - 1) / den;
}

std::uint64_t to_u64(const BigInt& value, const char* what) {
  if (value < 0 || value > std::numeric_limits<std::uint64_t>::max()) {
    throw CapacityError(std::string(what) + " exceeds the 64-bit range");
  }
  return value.convert_to<std::uint64_t>();
}

}  // namespace frogpred
