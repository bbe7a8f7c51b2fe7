#pragma once

#include <gmpxx.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fairdiv {

using Rational = mpq_class;
using Integer = mpz_class;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

// Accepts "12", "-3", "2.5", ".5", "1e3", "7/3". Returns nullopt on anything else.
inline std::optional<Rational> try_parse_rational(std::string_view text) {
  std::string_view s = detail::trim(text);
  if (s.empty()) return std::nullopt;

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = try_parse_rational(s.substr(0, slash));
    auto den = try_parse_rational(s.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    Rational r = *num / *den;
    r.canonicalize();
    return r;
  }

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }

  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_part = s.substr(e + 1);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part.front() == '+' || exp_part.front() == '-')) {
      exp_negative = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (!detail::all_digits(exp_part) || exp_part.size() > 6) return std::nullopt;
    exponent = std::stol(std::string(exp_part));
    if (exp_negative) exponent = -exponent;
    s = s.substr(0, e);
  }

  std::string_view int_part = s;
  std::string_view frac_part;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    int_part = s.substr(0, dot);
    frac_part = s.substr(dot + 1);
  }
  if (int_part.empty() && frac_part.empty()) return std::nullopt;
  if (!int_part.empty() && !detail::all_digits(int_part)) return std::nullopt;
  if (!frac_part.empty() && !detail::all_digits(frac_part)) return std::nullopt;

  std::string digits = std::string(int_part) + std::string(frac_part);
  Integer numerator(digits.empty() ? "0" : digits, 10);
  Integer ten_pow;
  mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, frac_part.size());
  Rational r(numerator, ten_pow);
  if (exponent != 0) {
    Integer scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
    if (exponent > 0)
      r *= Rational(scale);
    else
      r /= Rational(scale);
  }
  r.canonicalize();
  if (negative) r = -r;
  return r;
}

inline Rational parse_rational(std::string_view text) {
  auto r = try_parse_rational(text);
  if (!r) throw ParseError("not a number: '" + std::string(text) + "'");
  return *r;
}

// Doubles coming from JSON are recovered through their shortest round-trip
// decimal, so 0.1 becomes exactly 1/10.
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw ParseError("non-finite number");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return parse_rational(std::string_view(buf, static_cast<size_t>(res.ptr - buf)));
}

inline bool is_integer(const Rational& r) { return r.get_den() == 1; }

// "45", "-3", "7/3"
inline std::string to_string(const Rational& r) { return r.get_str(); }

// Terminating decimal if the denominator is 2^a 5^b, else nullopt.
inline std::optional<std::string> to_exact_decimal(const Rational& r) {
  if (is_integer(r)) return r.get_num().get_str();
  Integer den = r.get_den();
  unsigned long twos = 0, fives = 0;
  while (mpz_divisible_ui_p(den.get_mpz_t(), 2)) { den /= 2; ++twos; }
  while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) { den /= 5; ++fives; }
  if (den != 1) return std::nullopt;
  unsigned long places = std::max(twos, fives);
  Integer scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  Rational scaled = r * Rational(scale);
  Integer n = scaled.get_num();
  bool negative = n < 0;
  if (negative) n = -n;
  std::string digits = n.get_str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  digits.insert(digits.size() - places, ".");
  return negative ? "-" + digits : digits;
}

// Decimal when exact, fraction otherwise.
inline std::string to_display(const Rational& r) {
  if (auto d = to_exact_decimal(r)) return *d;
  return to_string(r);
}

inline double to_double(const Rational& r) { return r.get_d(); }

inline Rational sum(const std::vector<Rational>& xs) {
  Rational s = 0;
  for (const auto& x : xs) s += x;
  return s;
}

}  // namespace fairdiv
