#pragma once

#include "slowft/numeric.hpp"

#include <string>

namespace slowft {

// sign * exp(logmag), with a bound on |logmag - true log-magnitude|.
// Magnitudes far outside any floating range (exp(-exp(100)) and beyond)
// stay representable.
class LogDomainReal {
public:
    LogDomainReal() = default;  // exact zero
    explicit LogDomainReal(const ExtReal& value);
    explicit LogDomainReal(long double value) : LogDomainReal(ExtReal(value)) {}

    static LogDomainReal from_log(int sign, const ExtReal& logmag, const ExtReal& log_err = 0);
    static LogDomainReal exp(const ExtReal& exponent) { return from_log(1, exponent); }

    int sign() const { return sign_; }
    bool is_zero() const { return sign_ == 0; }
    const ExtReal& logmag() const { return logmag_; }
    const ExtReal& log_err() const { return log_err_; }
    // False once a difference of nearly equal values may have flipped the sign.
    bool sign_certain() const { return sign_certain_; }

    // Underflows to 0 and overflows to +-inf outside the ExtReal range.
    ExtReal to_ext() const;
    long double to_long_double() const;

    LogDomainReal operator-() const;
    LogDomainReal abs() const;
    // |x|^e for x >= 0.
    LogDomainReal pow(const ExtReal& exponent) const;
    LogDomainReal with_extra_error(const ExtReal& log_err) const;

    friend LogDomainReal operator*(const LogDomainReal& a, const LogDomainReal& b);
    friend LogDomainReal operator/(const LogDomainReal& a, const LogDomainReal& b);
    friend LogDomainReal operator+(const LogDomainReal& a, const LogDomainReal& b);
    friend LogDomainReal operator-(const LogDomainReal& a, const LogDomainReal& b);
    LogDomainReal& operator+=(const LogDomainReal& b) { return *this = *this + b; }
    LogDomainReal& operator*=(const LogDomainReal& b) { return *this = *this * b; }

    // "0", "exp(-123.4)" or "-exp(5.6)".
    std::string to_string(int digits = 25) const;

private:
    int sign_ = 0;
    ExtReal logmag_ = 0;
    ExtReal log_err_ = 0;
    bool sign_certain_ = true;
};

// Compares representatives, ignoring error bounds.
int compare(const LogDomainReal& a, const LogDomainReal& b);
// log(b) - log(a) for positive a, b, minus both error bounds: positive means
// a <= b holds with that much room in log terms.
ExtReal log_margin(const LogDomainReal& a, const LogDomainReal& b);
LogDomainReal min(const LogDomainReal& a, const LogDomainReal& b);

}  // namespace slowft
