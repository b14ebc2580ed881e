#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace delayfactor {

// All time, work, and factor arithmetic is exact. Doubles appear only in
// convenience output columns, never in decisions or reports.
using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

using TimePoint = Rational;
using Duration = Rational;

/// Canonical text form: "p/q", or "p" when q == 1.
std::string to_string(const Rational& r);

/// Terminating decimal ("2.5") when the reduced denominator is of the form
/// 2^a * 5^b with at most 18 fraction digits; otherwise falls back to "p/q".
std::string to_decimal_string(const Rational& r);

/// Non-authoritative decimal approximation for convenience columns.
double to_double(const Rational& r);

/// Parses "p", "p/q", or a terminating decimal like "-2.75".
/// Returns nullopt on malformed input or q == 0.
std::optional<Rational> parse_rational(const std::string& text);

/// Largest k with 2^k <= s. Requires s > 0. k may be negative.
int floor_log2(const Rational& s);

/// 2^k as an exact rational; k may be negative.
Rational pow2(int k);

/// Exact non-negative integer power.
Rational pow_int(const Rational& base, unsigned exp);

/// base^(exp_num/exp_den) approximated on the grid of multiples of
/// 2^-log2_grid. Requires base > 0, exp_den > 0. With round_nearest the
/// result is the nearest grid point (half away from zero); otherwise the
/// largest grid point not exceeding the true value.
Rational approx_pow(const Rational& base, int exp_num, int exp_den,
                    int log2_grid, bool round_nearest);

/// gcd over positive rationals: the largest r with a/r and b/r integral.
Rational rational_gcd(const Rational& a, const Rational& b);

}  // namespace delayfactor
