#include "slowft/tower.hpp"

#include "slowft/errors.hpp"

#include <sstream>

namespace slowft {
namespace {

const ExtReal& top_max() {
    static const ExtReal v("1e15");
    return v;
}
const ExtReal& log_top_max() {
    static const ExtReal v = log(top_max());
    return v;
}
// Relative gap below which two tops count as tied.
const ExtReal& tie_margin() {
    static const ExtReal v("1e-60");
    return v;
}

}  // namespace

void Tower::normalize() {
    if (top_ <= 0 && height_ > 0) throw ValidationError("tower top must be positive");
    if (top_ < 0) throw ValidationError("tower value must be non-negative");
    while (top_ > top_max()) {
        top_ = boost::multiprecision::log(top_);
        ++height_;
    }
    while (height_ > 0 && top_ <= log_top_max()) {
        top_ = boost::multiprecision::exp(top_);
        --height_;
    }
}

Tower Tower::up_arrow10(int n) {
    if (n < 1) throw ValidationError("10^^n needs n >= 1");
    Tower t(ExtReal(10));
    static const ExtReal ln10 = boost::multiprecision::log(ExtReal(10));
    for (int i = 1; i < n; ++i) t = t.multiply(ln10).exp();
    return t;
}

Tower Tower::from_integer(const Integer& z) {
    if (z < 0) throw ValidationError("tower from negative integer");
    const std::size_t bits = mpz_sizeinbase(z.get_mpz_t(), 2);
    if (bits < 200) return Tower(ExtReal(z.get_str(10)));
    // ln z from the leading 300 bits.
    const std::size_t shift = bits > 300 ? bits - 300 : 0;
    const Integer head = z >> shift;
    const ExtReal lnz = boost::multiprecision::log(ExtReal(head.get_str(10))) +
                        ExtReal(static_cast<unsigned long>(shift)) * boost::multiprecision::log(ExtReal(2));
    return Tower(1, lnz);
}

std::optional<ExtReal> Tower::value() const {
    if (height_ == 0) return top_;
    if (height_ == 1 && top_ < 1e8) return boost::multiprecision::exp(top_);
    return std::nullopt;
}

Tower Tower::log() const {
    if (height_ == 0) {
        if (top_ <= 0) throw ValidationError("log of non-positive tower");
        const ExtReal l = boost::multiprecision::log(top_);
        if (l < 0) throw ValidationError("tower log below zero is not representable");
        return Tower(l);
    }
    return Tower(height_ - 1, top_);
}

Tower Tower::exp() const { return Tower(height_ + 1, top_); }

Tower Tower::add(const ExtReal& c) const {
    if (height_ == 0) return Tower(top_ + c);
    if (height_ == 1) {
        // e^top + c = exp(top + log1p(c e^-top))
        return Tower(1, top_ + boost::multiprecision::log1p(c * boost::multiprecision::exp(-top_)));
    }
    // At height >= 2 the change sits below e^{-1e15} relative: absorbed.
    return *this;
}

Tower Tower::multiply(const ExtReal& c) const {
    if (c <= 0) throw ValidationError("tower multiply needs a positive factor");
    if (height_ == 0) return Tower(top_ * c);
    return log().add(boost::multiprecision::log(c)).exp();
}

std::string Tower::to_string() const {
    std::ostringstream os;
    if (height_ == 0) return format_ext(top_, 30);
    for (int i = 0; i < height_; ++i) os << "exp(";
    os << format_ext(top_, 30);
    for (int i = 0; i < height_; ++i) os << ")";
    return os.str();
}

Certainty compare(const Tower& a, const Tower& b) {
    if (a.height() != b.height()) return a.height() < b.height() ? Certainty::Less : Certainty::Greater;
    const ExtReal diff = a.top() - b.top();
    const ExtReal scale = boost::multiprecision::fmax(abs(a.top()), abs(b.top()));
    if (abs(diff) <= scale * tie_margin()) return Certainty::Undecided;
    return diff < 0 ? Certainty::Less : Certainty::Greater;
}

Tower sum(const Tower& a, const Tower& b) {
    if (a.is_plain() && b.is_plain()) return Tower(a.top() + b.top());
    const bool a_big = compare(a, b) != Certainty::Less;
    const Tower& big = a_big ? a : b;
    const Tower& small = a_big ? b : a;
    if (small.is_plain()) return big.add(small.top());
    const Tower ls = small.log(), lb = big.log();
    ExtReal ratio = 0;
    if (ls.is_plain() && lb.is_plain()) ratio = boost::multiprecision::exp(ls.top() - lb.top());
    else if (compare(ls, lb) == Certainty::Undecided) ratio = 1;
    return big.multiply(1 + ratio);
}

HugeNat::HugeNat(Integer exact) : exact_(std::move(exact)) {
    if (*exact_ < 0) throw ValidationError("HugeNat must be non-negative");
    base_ = Tower::from_integer(*exact_);
}

HugeNat::HugeNat(Tower base, long offset) : base_(std::move(base)), offset_(offset) {}

Tower HugeNat::approx() const {
    if (exact_) return base_;
    return base_.add(ExtReal(offset_));
}

std::string HugeNat::to_string() const {
    if (exact_) return exact_->get_str(10);
    std::string s = "~" + base_.to_string();
    if (offset_ > 0) s += "+" + std::to_string(offset_);
    if (offset_ < 0) s += std::to_string(offset_);
    return s;
}

}  // namespace slowft
