#pragma once

#include "slowft/numeric.hpp"

#include <compare>
#include <optional>
#include <string>

namespace slowft {

// Positive real in level-index form: exp applied `height` times to `top`.
// Canonical: height 0 with top <= 1e15, or height >= 1 with top in
// (ln 1e15, 1e15].
class Tower {
public:
    Tower() = default;
    explicit Tower(ExtReal value) : top_(std::move(value)) { normalize(); }
    Tower(int height, ExtReal top) : height_(height), top_(std::move(top)) { normalize(); }

    // 10^^n (n >= 1).
    static Tower up_arrow10(int n);
    static Tower from_integer(const Integer& z);

    int height() const { return height_; }
    const ExtReal& top() const { return top_; }
    bool is_plain() const { return height_ == 0; }
    // The value itself if it fits an ExtReal comfortably.
    std::optional<ExtReal> value() const;

    Tower log() const;
    Tower exp() const;
    Tower add(const ExtReal& c) const;      // value + c, value + c must stay > 0
    Tower multiply(const ExtReal& c) const; // c > 0

    std::string to_string() const;

private:
    void normalize();
    int height_ = 0;
    ExtReal top_ = 0;
};

enum class Certainty { Less, Greater, Undecided };

// Compares with a relative margin at the first differing level; near-ties
// report Undecided rather than guessing.
Certainty compare(const Tower& a, const Tower& b);
Tower sum(const Tower& a, const Tower& b);

// Natural number that may be far too large to hold: exact when small,
// otherwise symbolic as floor(base) + offset with base a Tower.
class HugeNat {
public:
    HugeNat() = default;
    explicit HugeNat(Integer exact);
    HugeNat(Tower base, long offset);

    bool is_exact() const { return exact_.has_value(); }
    const Integer& exact() const { return *exact_; }
    const Tower& base() const { return base_; }
    long offset() const { return offset_; }
    Tower approx() const;  // Tower approximation of the full value

    std::string to_string() const;

private:
    std::optional<Integer> exact_;
    Tower base_;
    long offset_ = 0;
};

}  // namespace slowft
