#pragma once

#include <gmpxx.h>

#include <boost/multiprecision/mpfr.hpp>

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

namespace slowft {

using Integer = mpz_class;
using Rational = mpq_class;

// ~266 bits. Used wherever log-magnitudes reach 1e40 and still need
// absolute accuracy well below 1e-20.
using ExtReal = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<80>,
                                              boost::multiprecision::et_off>;
// ~130 bits, the extended Fourier path.
using Real128 = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<39>,
                                              boost::multiprecision::et_off>;

using Complex = std::complex<long double>;

inline constexpr long double kPi = 3.141592653589793238462643383279502884L;
inline constexpr long double kTwoPi = 2.0L * kPi;

// Accepts "123", "-7", "p/q", "10^L", "b^e", decimal "0.25" and "1e-3".
// Throws ValidationError on malformed input.
Rational parse_rational(std::string_view text);
Integer parse_integer(std::string_view text);

// Canonical text: integers as digits, otherwise "p/q".
std::string to_string(const Rational& q);
std::string to_string(const Integer& z);

// Exact decimal expansion of q when the reduced denominator is 2^a 5^b,
// otherwise "p/q".
std::string to_decimal_string(const Rational& q);

Integer pow_int(long base, unsigned long exponent);
Rational pow_rat(const Rational& base, unsigned long exponent);

// Fractional part in [0, 1).
Rational frac(const Rational& q);
Integer floor_int(const Rational& q);

// Nearest long double (handles values far outside double range).
long double to_long_double(const Rational& q);
long double to_long_double(const Integer& z);
// Natural log of |z|, z != 0.
long double log_abs(const Integer& z);

ExtReal to_ext(const Rational& q);

// "%.*Lg" with a fixed locale-independent format.
std::string format_real(long double v, int digits = 17);
std::string format_ext(const ExtReal& v, int digits = 40);

}  // namespace slowft
