#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace mcspace {

/// Exact scalar used for couplings, shell labels, and observable values.
/// Desk-scale inputs keep numerators/denominators far below the int64 range.
using Rational = boost::rational<long long>;

/// Error type for precondition and validation failures across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double to_double(const Rational& r) {
  return boost::rational_cast<double>(r);
}

inline double to_double(double x) { return x; }

inline Rational rational_abs(const Rational& r) { return r < 0 ? -r : r; }

/// Canonical text form: "p" when the denominator is 1, else "p/q".
inline std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

/// Parses "p", "p/q", or a plain decimal ("1.25" -> 5/4). Exact; no rounding.
inline Rational parse_rational(const std::string& text) {
  const auto fail = [&]() -> Rational {
    throw Error("not a rational literal: '" + text + "'");
  };
  if (text.empty()) return fail();

  const auto parse_ll = [&](const std::string& s) -> long long {
    if (s.empty()) fail();
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      fail();
    }
    if (pos != s.size()) fail();
    return v;
  };

  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const long long num = parse_ll(text.substr(0, slash));
    const long long den = parse_ll(text.substr(slash + 1));
    if (den == 0) throw Error("zero denominator in rational literal: '" + text + "'");
    return Rational(num, den);
  }

  const auto dot = text.find('.');
  if (dot != std::string::npos) {
    std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const std::size_t frac_len = text.size() - dot - 1;
    if (frac_len == 0 || frac_len > 15) fail();
    long long den = 1;
    for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
    return Rational(parse_ll(digits), den);
  }

  return Rational(parse_ll(text));
}

}  // namespace mcspace
