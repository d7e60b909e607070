#include "slowft/logdomain.hpp"

#include "slowft/errors.hpp"

#include <algorithm>
#include <limits>

namespace slowft {
namespace {

namespace bmp = boost::multiprecision;

// Rounding added per operation: a few ulps of the operands' log-magnitudes.
ExtReal rounding(const ExtReal& a, const ExtReal& b) {
    static const ExtReal ulp = bmp::ldexp(ExtReal(1), -255);
    return (1 + bmp::abs(a) + bmp::abs(b)) * ulp;
}

}  // namespace

LogDomainReal::LogDomainReal(const ExtReal& value) {
    if (value == 0) return;
    sign_ = value > 0 ? 1 : -1;
    logmag_ = bmp::log(bmp::abs(value));
    log_err_ = rounding(logmag_, 0);
}

LogDomainReal LogDomainReal::from_log(int sign, const ExtReal& logmag, const ExtReal& log_err) {
    LogDomainReal out;
    if (sign == 0) return out;
    if (!bmp::isfinite(logmag)) throw ValidationError("log-magnitude must be finite");
    out.sign_ = sign > 0 ? 1 : -1;
    out.logmag_ = logmag;
    out.log_err_ = bmp::abs(log_err);
    return out;
}

ExtReal LogDomainReal::to_ext() const {
    if (sign_ == 0) return 0;
    return sign_ * bmp::exp(logmag_);
}

long double LogDomainReal::to_long_double() const {
    if (sign_ == 0) return 0;
    if (logmag_ < -12000) return sign_ > 0 ? 0.0L : -0.0L;
    if (logmag_ > 12000) return sign_ * std::numeric_limits<long double>::infinity();
    return sign_ * std::exp(static_cast<long double>(logmag_));
}

LogDomainReal LogDomainReal::operator-() const {
    LogDomainReal out = *this;
    out.sign_ = -sign_;
    return out;
}

LogDomainReal LogDomainReal::abs() const {
    LogDomainReal out = *this;
    out.sign_ = sign_ == 0 ? 0 : 1;
    return out;
}

LogDomainReal LogDomainReal::pow(const ExtReal& exponent) const {
    if (sign_ < 0) throw ValidationError("power of a negative log-domain value");
    if (sign_ == 0) {
        if (exponent <= 0) throw ValidationError("non-positive power of zero");
        return {};
    }
    const ExtReal lm = logmag_ * exponent;
    return from_log(1, lm, log_err_ * bmp::abs(exponent) + rounding(lm, 0));
}

LogDomainReal LogDomainReal::with_extra_error(const ExtReal& log_err) const {
    LogDomainReal out = *this;
    if (sign_ != 0) out.log_err_ += bmp::abs(log_err);
    return out;
}

LogDomainReal operator*(const LogDomainReal& a, const LogDomainReal& b) {
    if (a.sign_ == 0 || b.sign_ == 0) return {};
    const ExtReal lm = a.logmag_ + b.logmag_;
    auto out = LogDomainReal::from_log(a.sign_ * b.sign_, lm, a.log_err_ + b.log_err_ + rounding(a.logmag_, b.logmag_));
    out.sign_certain_ = a.sign_certain_ && b.sign_certain_;
    return out;
}

LogDomainReal operator/(const LogDomainReal& a, const LogDomainReal& b) {
    if (b.sign_ == 0) throw ValidationError("log-domain division by zero");
    if (a.sign_ == 0) return {};
    const ExtReal lm = a.logmag_ - b.logmag_;
    auto out = LogDomainReal::from_log(a.sign_ * b.sign_, lm, a.log_err_ + b.log_err_ + rounding(a.logmag_, b.logmag_));
    out.sign_certain_ = a.sign_certain_ && b.sign_certain_;
    return out;
}

LogDomainReal operator+(const LogDomainReal& a, const LogDomainReal& b) {
    if (a.sign_ == 0) return b;
    if (b.sign_ == 0) return a;
    const bool a_big = a.logmag_ >= b.logmag_;
    const LogDomainReal& big = a_big ? a : b;
    const LogDomainReal& small = a_big ? b : a;
    const ExtReal gap = small.logmag_ - big.logmag_;  // <= 0
    const ExtReal ratio = bmp::exp(gap);
    if (a.sign_ == b.sign_) {
        const ExtReal lm = big.logmag_ + bmp::log1p(ratio);
        const ExtReal err = std::max(big.log_err_, small.log_err_) + rounding(big.logmag_, small.logmag_);
        auto out = LogDomainReal::from_log(big.sign_, lm, err);
        out.sign_certain_ = a.sign_certain_ && b.sign_certain_;
        return out;
    }
    if (gap == 0) {
        // Equal representatives cancel exactly; the true value may have either sign.
        LogDomainReal out;
        out.sign_certain_ = false;
        return out;
    }
    const ExtReal lm = big.logmag_ + bmp::log1p(-ratio);
    // Absolute error relative to the result: (|big| e_big + |small| e_small) / |result|.
    const ExtReal e_big = bmp::expm1(big.log_err_);
    const ExtReal e_small = bmp::expm1(small.log_err_);
    const ExtReal rel = (e_big + ratio * e_small) / (1 - ratio);
    const ExtReal err = bmp::log1p(rel) + rounding(big.logmag_, small.logmag_) / (1 - ratio);
    auto out = LogDomainReal::from_log(big.sign_, lm, err);
    out.sign_certain_ = a.sign_certain_ && b.sign_certain_ &&
                        big.logmag_ - big.log_err_ > small.logmag_ + small.log_err_;
    return out;
}

LogDomainReal operator-(const LogDomainReal& a, const LogDomainReal& b) { return a + (-b); }

std::string LogDomainReal::to_string(int digits) const {
    if (sign_ == 0) return "0";
    return std::string(sign_ < 0 ? "-" : "") + "exp(" + format_ext(logmag_, digits) + ")";
}

int compare(const LogDomainReal& a, const LogDomainReal& b) {
    if (a.sign() != b.sign()) return a.sign() < b.sign() ? -1 : 1;
    if (a.sign() == 0) return 0;
    const int mag = a.logmag() < b.logmag() ? -1 : (a.logmag() > b.logmag() ? 1 : 0);
    return a.sign() > 0 ? mag : -mag;
}

ExtReal log_margin(const LogDomainReal& a, const LogDomainReal& b) {
    if (a.sign() <= 0 || b.sign() <= 0) throw ValidationError("log_margin needs positive operands");
    return b.logmag() - a.logmag() - a.log_err() - b.log_err();
}

LogDomainReal min(const LogDomainReal& a, const LogDomainReal& b) { return compare(a, b) <= 0 ? a : b; }

}  // namespace slowft
