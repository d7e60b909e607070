#pragma once

#include "slowft/errors.hpp"
#include "slowft/measures.hpp"
#include "slowft/numeric.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace slowft {

// Exact integer or rational frequency of any size.
class ExactFrequency {
public:
    ExactFrequency() = default;
    explicit ExactFrequency(Rational value) : value_(std::move(value)) { value_.canonicalize(); }
    explicit ExactFrequency(long v) : value_(v) {}

    // "123", "-5", "10^L", "p/q".
    static ExactFrequency parse(std::string_view text) { return ExactFrequency(parse_rational(text)); }
    static ExactFrequency power(long base, unsigned long exponent) {
        return ExactFrequency(Rational(pow_int(base, exponent)));
    }

    const Rational& value() const { return value_; }
    bool is_zero() const { return value_ == 0; }
    bool is_integer() const { return value_.get_den() == 1; }
    ExactFrequency operator-() const { return ExactFrequency(Rational(-value_)); }
    // Natural log of |value|; value must be non-zero.
    long double log_abs() const;
    std::string to_decimal() const { return to_decimal_string(value_); }

private:
    Rational value_ = 0;
};

struct FourierValue {
    long double re = 1.0L;
    long double im = 0.0L;
    long double err = 0.0L;  // rigorous radius around (re, im)

    Complex value() const { return {re, im}; }
    long double modulus() const;
};

struct FtOptions {
    // 64 selects long double arithmetic; 128 and 256 select MPFR.
    int mantissa_bits = 64;
};

// prod_j sum_a p_a exp(2 pi i xi d_a / b^j), digits d_a as rationals in [0, b-1].
FourierValue ft_homogeneous(long base, const std::vector<Rational>& digits, const std::vector<Rational>& probs,
                            const ExactFrequency& xi, long double tol, const FtOptions& options = {});
// Same product for non-exact inputs; phases are formed in long double.
FourierValue ft_homogeneous(long base, const std::vector<long double>& digits, const std::vector<long double>& probs,
                            long double xi, long double tol);
// Convenience for a missing-digit / homogeneous IFS.
FourierValue ft_homogeneous(const SelfSimilarIFS& ifs, const ExactFrequency& xi, long double tol,
                            const FtOptions& options = {});
FourierValue ft_homogeneous(const SelfSimilarIFS& ifs, long double xi, long double tol);

// mu_t: digits {0, 1, t} in base 10, weights 1/3.
FourierValue ft_mu_t(const Rational& t, const ExactFrequency& xi, long double tol, const FtOptions& options = {});
FourierValue ft_mu_t(long double t, long double xi, long double tol);

// One factor of the exact product: the reduced phases frac(xi d_a / b^j)
// and the factor value computed from them.
struct ProductFactor {
    std::vector<Rational> phases;
    Complex value;
};
ProductFactor homogeneous_factor(long base, const std::vector<Rational>& digits, const std::vector<Rational>& probs,
                                 const ExactFrequency& xi, unsigned long j);
ProductFactor mu_t_factor(const Rational& t, const ExactFrequency& xi, unsigned long j);

// Number of factors the exact product keeps for the given tolerance.
unsigned long truncation_index(long base, long double digit_mass, long double log_abs_xi, long double tol);

struct GeneralFtOptions {
    long double xi_base = 1e-3L;
    std::size_t node_budget = 2'000'000;
};

class FourierBudgetExceeded : public BudgetExceeded {
public:
    FourierBudgetExceeded(const std::string& what, FourierValue partial)
        : BudgetExceeded(what), partial_(partial) {}
    const FourierValue& partial() const { return partial_; }

private:
    FourierValue partial_;
};

// Functional-equation recursion mu^(xi) = sum_a p_a e^{2 pi i xi d_a} mu^(r_a xi).
FourierValue ft_general(const SelfSimilarIFS& ifs, long double xi, long double tol,
                        const GeneralFtOptions& options = {});

FourierValue ft_product(const std::vector<FourierValue>& values);

struct DecayScanRow {
    std::string xi;
    FourierValue value;
    std::int64_t wall_ns = 0;
};
void write_decay_csv(std::ostream& out, const std::vector<DecayScanRow>& rows);

}  // namespace slowft
