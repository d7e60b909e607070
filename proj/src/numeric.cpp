#include "slowft/numeric.hpp"

#include "slowft/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace slowft {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Integer digits_to_integer(std::string_view s) {
    if (!all_digits(s)) throw ValidationError("not an integer: '" + std::string(s) + "'");
    return Integer(std::string(s), 10);
}

// Unsigned atom: digits, b^e with e possibly negative, or a decimal literal.
Rational parse_atom(std::string_view s) {
    s = trim(s);
    if (s.empty()) throw ValidationError("empty number");
    if (auto caret = s.find('^'); caret != std::string_view::npos) {
        if (s.find("^^") != std::string_view::npos)
            throw ValidationError("tower notation '" + std::string(s) + "' is only accepted by symbolic commands");
        const Integer base = digits_to_integer(trim(s.substr(0, caret)));
        std::string_view e = trim(s.substr(caret + 1));
        bool neg = false;
        if (!e.empty() && (e.front() == '-' || e.front() == '+')) {
            neg = e.front() == '-';
            e.remove_prefix(1);
        }
        const Integer ez = digits_to_integer(e);
        if (ez > 100'000'000) throw ValidationError("exponent too large: " + std::string(e));
        if (base == 0 && neg) throw ValidationError("0 to a negative power");
        Integer p;
        mpz_pow_ui(p.get_mpz_t(), base.get_mpz_t(), ez.get_ui());
        Rational r = neg ? Rational(Integer(1), p) : Rational(p);
        r.canonicalize();
        return r;
    }
    // Decimal / scientific literal, converted exactly.
    std::string_view mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        mant = s.substr(0, e);
        std::string_view ex = s.substr(e + 1);
        bool neg = false;
        if (!ex.empty() && (ex.front() == '-' || ex.front() == '+')) {
            neg = ex.front() == '-';
            ex.remove_prefix(1);
        }
        if (!all_digits(ex) || ex.size() > 9) throw ValidationError("bad exponent in '" + std::string(s) + "'");
        exp10 = std::stol(std::string(ex));
        if (neg) exp10 = -exp10;
    }
    std::string digits;
    if (auto dot = mant.find('.'); dot != std::string_view::npos) {
        std::string_view ip = mant.substr(0, dot), fp = mant.substr(dot + 1);
        if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
            throw ValidationError("bad number '" + std::string(s) + "'");
        digits = std::string(ip) + std::string(fp);
        exp10 -= static_cast<long>(fp.size());
    } else {
        if (!all_digits(mant)) throw ValidationError("bad number '" + std::string(s) + "'");
        digits = std::string(mant);
    }
    Rational r{Integer(digits, 10)};
    if (exp10 > 0) r *= Rational(pow_int(10, static_cast<unsigned long>(exp10)));
    if (exp10 < 0) r /= Rational(pow_int(10, static_cast<unsigned long>(-exp10)));
    r.canonicalize();
    return r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = trim(text);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    Rational r;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        const Rational num = parse_atom(s.substr(0, slash));
        const Rational den = parse_atom(s.substr(slash + 1));
        if (den == 0) throw ValidationError("zero denominator in '" + std::string(text) + "'");
        r = num / den;
    } else {
        r = parse_atom(s);
    }
    if (neg) r = -r;
    r.canonicalize();
    return r;
}

Integer parse_integer(std::string_view text) {
    const Rational q = parse_rational(text);
    if (q.get_den() != 1) throw ValidationError("expected an integer, got '" + std::string(text) + "'");
    return q.get_num();
}

std::string to_string(const Integer& z) { return z.get_str(10); }

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str(10);
    return q.get_num().get_str(10) + "/" + q.get_den().get_str(10);
}

std::string to_decimal_string(const Rational& q) {
    Integer den = q.get_den();
    unsigned long twos = 0, fives = 0;
    twos = mpz_scan1(den.get_mpz_t(), 0);
    mpz_tdiv_q_2exp(den.get_mpz_t(), den.get_mpz_t(), twos);
    while (mpz_divisible_ui_p(den.get_mpz_t(), 5)) {
        mpz_divexact_ui(den.get_mpz_t(), den.get_mpz_t(), 5);
        ++fives;
    }
    if (den != 1) return to_string(q);
    const unsigned long places = std::max(twos, fives);
    if (places == 0) return q.get_num().get_str(10);
    Integer scaled = q.get_num() * pow_int(10, places) / q.get_den();
    const bool neg = scaled < 0;
    if (neg) scaled = -scaled;
    std::string d = scaled.get_str(10);
    if (d.size() <= places) d.insert(0, places - d.size() + 1, '0');
    d.insert(d.size() - places, ".");
    return neg ? "-" + d : d;
}

Integer pow_int(long base, unsigned long exponent) {
    Integer r;
    const Integer b(base);
    mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), exponent);
    return r;
}

Rational pow_rat(const Rational& base, unsigned long exponent) {
    Integer n, d;
    mpz_pow_ui(n.get_mpz_t(), base.get_num_mpz_t(), exponent);
    mpz_pow_ui(d.get_mpz_t(), base.get_den_mpz_t(), exponent);
    Rational r(n, d);
    r.canonicalize();
    return r;
}

Integer floor_int(const Rational& q) {
    Integer r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

Rational frac(const Rational& q) {
    Integer r;
    mpz_fdiv_r(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    Rational f(r, q.get_den());
    f.canonicalize();
    return f;
}

long double to_long_double(const Integer& z) {
    const size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
    if (bits <= 64) {
        Integer a = abs(z);
        const long double v = static_cast<long double>(mpz_get_ui(a.get_mpz_t()));
        return z < 0 ? -v : v;
    }
    Integer top;
    mpz_tdiv_q_2exp(top.get_mpz_t(), z.get_mpz_t(), bits - 64);
    Integer a = abs(top);
    long double v = std::ldexp(static_cast<long double>(mpz_get_ui(a.get_mpz_t())), static_cast<int>(bits - 64));
    return z < 0 ? -v : v;
}

long double to_long_double(const Rational& q) {
    if (q == 0) return 0.0L;
    const long nb = static_cast<long>(mpz_sizeinbase(q.get_num_mpz_t(), 2));
    const long db = static_cast<long>(mpz_sizeinbase(q.get_den_mpz_t(), 2));
    // Quotient with 66 significant bits, then scale.
    const long shift = 66 - (nb - db);
    Integer num = q.get_num(), quo;
    if (shift > 0) mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(shift));
    else mpz_tdiv_q_2exp(num.get_mpz_t(), num.get_mpz_t(), static_cast<unsigned long>(-shift));
    mpz_tdiv_q(quo.get_mpz_t(), num.get_mpz_t(), q.get_den_mpz_t());
    return std::ldexp(to_long_double(quo), static_cast<int>(-shift));
}

long double log_abs(const Integer& z) {
    long exp2 = 0;
    const double m = mpz_get_d_2exp(&exp2, z.get_mpz_t());
    return std::log(std::fabs(static_cast<long double>(m))) + static_cast<long double>(exp2) * std::log(2.0L);
}

ExtReal to_ext(const Rational& q) {
    return ExtReal(q.get_num().get_str(10)) / ExtReal(q.get_den().get_str(10));
}

std::string format_real(long double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*Lg", digits, v);
    return buf;
}

std::string format_ext(const ExtReal& v, int digits) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(digits);
    os << v;
    return os.str();
}

}  // namespace slowft
