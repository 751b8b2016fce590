#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace frogpred {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

BigInt to_bigint(unsigned __int128 value);

/// Always `num/den`, including integers ("0/1", "1/1").
std::string to_fraction_string(const Rational& value);

/// Minimal form for spec tokens: "0", "1", "3/10".
std::string to_compact_string(const Rational& value);

/// Accepts "a/b", "a", and finite decimals such as "0.125" (converted exactly).
/// Throws ParseError on anything else, including a zero denominator.
Rational parse_rational(std::string_view text);

/// Best rational approximation of `x` with denominator at most `max_denominator`
/// (continued-fraction convergents and semiconvergents).
Rational rational_from_decimal(double x, std::uint64_t max_denominator);

double to_double(const Rational& value);

/// ceil(value) for nonnegative values.
BigInt ceil_nonneg(const Rational& value);

/// Throws CapacityError when `value` does not fit in uint64.
std::uint64_t to_u64(const BigInt& value, const char* what);

}  // namespace frogpred
