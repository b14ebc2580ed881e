#include "delayfactor/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace delayfactor {

std::string to_string(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) {
    s += "/";
    s += denominator(r).str();
  }
  return s;
}

std::string to_decimal_string(const Rational& r) {
  Int num = numerator(r);
  Int den = denominator(r);
  bool neg = num < 0;
  if (neg) num = -num;
  // den must be 2^a * 5^b for a terminating expansion.
  Int d = den;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  int digits = std::max(twos, fives);
  if (d != 1 || digits > 18) return to_string(r);
  // Scale so that denominator becomes 10^digits.
  Int scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  Int scaled = num * scale / den;
  Int whole = scaled / scale;
  Int frac = scaled % scale;
  std::string out = neg ? "-" : "";
  out += whole.str();
  if (digits > 0) {
    std::string f = frac.str();
    f.insert(f.begin(), digits - f.size(), '0');
    while (!f.empty() && f.back() == '0') f.pop_back();
    if (!f.empty()) out += "." + f;
  }
  return out;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

namespace {

/// Builds an Int from a validated decimal string. cpp_int's own string
/// constructor treats a leading zero as an octal prefix, so the digits are
/// cleaned first; the caller guarantees [sign]digits form.
Int decimal_int(const std::string& s) {
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool neg = s[0] == '-';
  while (i + 1 < s.size() && s[i] == '0') ++i;  // keep one digit at least
  Int value(s.substr(i));
  return neg ? Int(-value) : value;
}

}  // namespace

std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  auto is_int = [](const std::string& s) {
    if (s.empty()) return false;
    size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
  };
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::string n = text.substr(0, slash), d = text.substr(slash + 1);
    if (!is_int(n) || !is_int(d)) return std::nullopt;
    Int num = decimal_int(n), den = decimal_int(d);
    if (den == 0) return std::nullopt;
    return Rational(num, den);
  }
  auto dot = text.find('.');
  if (dot != std::string::npos) {
    std::string whole = text.substr(0, dot), frac = text.substr(dot + 1);
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    if (!is_int(whole)) return std::nullopt;
    if (frac.empty()) return std::nullopt;
    for (char c : frac)
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    Int den = 1;
    for (size_t i = 0; i < frac.size(); ++i) den *= 10;
    Int num = decimal_int(whole) * den;
    Int f = decimal_int(frac);
    if (!whole.empty() && whole[0] == '-') num -= f; else num += f;
    return Rational(num, den);
  }
  if (!is_int(text)) return std::nullopt;
  return Rational(decimal_int(text));
}

int floor_log2(const Rational& s) {
  if (s <= 0) throw std::invalid_argument("floor_log2 requires a positive value");
  const Int num = numerator(s), den = denominator(s);
  long k = static_cast<long>(msb(num)) - static_cast<long>(msb(den));
  auto le = [&](long kk) {  // 2^kk <= num/den ?
    if (kk >= 0) return (den << static_cast<unsigned>(kk)) <= num;
    return den <= (num << static_cast<unsigned>(-kk));
  };
  while (!le(k)) --k;
  while (le(k + 1)) ++k;
  return static_cast<int>(k);
}

Rational pow2(int k) {
  Int one = 1;
  if (k >= 0) return Rational(one << static_cast<unsigned>(k));
  return Rational(one, one << static_cast<unsigned>(-k));
}

Rational pow_int(const Rational& base, unsigned exp) {
  return Rational(pow(numerator(base), exp), pow(denominator(base), exp));
}

Rational approx_pow(const Rational& base, int exp_num, int exp_den,
                    int log2_grid, bool round_nearest) {
  if (base <= 0 || exp_den <= 0 || exp_num < 0 || log2_grid < 0)
    throw std::invalid_argument("approx_pow: bad arguments");
  // Work on a doubled grid so nearest-rounding reduces to one floor.
  const int shift = log2_grid + (round_nearest ? 1 : 0);
  const Int g = Int(1) << static_cast<unsigned>(shift);
  // Find the largest N with (N/g)^exp_den <= base^exp_num, i.e.
  // N^exp_den * q^exp_num <= p^exp_num * g^exp_den.
  const Int p = numerator(base), q = denominator(base);
  const Int rhs = pow(p, static_cast<unsigned>(exp_num)) *
                  pow(g, static_cast<unsigned>(exp_den));
  const Int qs = pow(q, static_cast<unsigned>(exp_num));
  auto fits = [&](const Int& n) {
    return pow(n, static_cast<unsigned>(exp_den)) * qs <= rhs;
  };
  Int hi = 1;
  while (fits(hi)) hi <<= 1;
  Int lo = hi >> 1;  // fits(lo), !fits(hi)
  while (hi - lo > 1) {
    Int mid = (lo + hi) / 2;
    if (fits(mid)) lo = mid; else hi = mid;
  }
  Int n = lo;
  if (round_nearest) n = (n + 1) / 2;  // back to the requested grid
  return Rational(n, Int(1) << static_cast<unsigned>(log2_grid));
}

Rational rational_gcd(const Rational& a, const Rational& b) {
  if (a <= 0) return b;
  if (b <= 0) return a;
  const Int an = numerator(a), ad = denominator(a);
  const Int bn = numerator(b), bd = denominator(b);
  return Rational(gcd(an * bd, bn * ad), ad * bd);
}

}  // namespace delayfactor
