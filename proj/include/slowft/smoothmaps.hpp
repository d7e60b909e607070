#pragma once

#include "slowft/logdomain.hpp"
#include "slowft/measures.hpp"
#include "slowft/numeric.hpp"
#include "slowft/slowdecay.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace slowft {

// W(s) = exp(-1/s^2) for s > 0 and 0 otherwise; order 0, 1 or 2.
LogDomainReal bump(const ExtReal& s, int order = 0);
// int_0^d W and int_0^d (d - s) W(s) ds (times = 1 or 2), d > 0. The
// quadrature error is folded into log_err.
LogDomainReal bump_integral(const ExtReal& d, int times);

// Strictly decreasing psi given through -ln psi(xi).
struct DecayRate {
    std::string name;
    std::function<ExtReal(const ExtReal&)> neg_log;

    static DecayRate exponential();  // psi(xi) = e^-xi
    static DecayRate from_envelope(MonotoneEnvelope envelope, std::string name);
    // "exp" or "envelope:<phi preset>".
    static DecayRate parse(std::string_view text);
};

// r(xi) = psi^(1 / ln ln(1/psi)); needs -ln psi(xi) > e, where r is decreasing.
ExtReal radius_at(const DecayRate& psi, const ExtReal& xi);

enum class ScheduleVariant { LemmaFix, PropPushforward };
std::string to_string(ScheduleVariant v);
ScheduleVariant parse_schedule_variant(std::string_view text);

// Indices are 1-based through the accessors. With N = terms():
// xi, r hold N + 2 entries, c holds N, y holds N + 1.
struct BumpSchedule {
    ScheduleVariant variant = ScheduleVariant::LemmaFix;
    std::string psi_name;
    std::vector<ExtReal> xi, r;
    std::vector<LogDomainReal> c, y;

    std::size_t terms() const { return c.size(); }
    const ExtReal& xi_at(std::size_t n) const { return xi.at(n - 1); }
    const ExtReal& r_at(std::size_t n) const { return r.at(n - 1); }
    const LogDomainReal& c_at(std::size_t n) const { return c.at(n - 1); }
    const LogDomainReal& y_at(std::size_t n) const { return y.at(n - 1); }
};

struct BuildScheduleOptions {
    ExtReal first_neg_log = 3;  // xi_1: first xi with -ln psi >= this (must exceed e)
    ExtReal initial_step = 1;
    int max_halvings = 2000;
};

// Throws Infeasible naming the index and constraint that could not be met.
BumpSchedule build_schedule(const DecayRate& psi, ScheduleVariant variant, std::size_t n_terms,
                            const BuildScheduleOptions& options = {});

// One inequality at one index; margin = log(rhs) - log(lhs) after error bounds.
struct InequalityCheck {
    std::string name;
    std::size_t n = 0;
    std::size_t j = 0;  // second index where the inequality has one
    ExtReal margin = 0;
    ExtReal required = 0;  // pass means margin >= required (> 0 when required is 0)
    bool pass = false;
};

// Construction invariants: r spacing, xi density, c caps, y caps.
// Cap inequalities need margin >= ln 2 (the half-cap rule); monotonicity
// checks need a positive margin.
std::vector<InequalityCheck> audit_schedule(const BumpSchedule& schedule, const DecayRate& psi);

struct ScheduleVerification {
    // Lemma-fix: g(r_n) <= y_n, g(r_{n+1}) <= 0.01 g(r_n)^{1/r_n},
    // f(r_{n+1}) <= 0.01 f(r_n), xi_{n+1} f(r_n) <= 0.01.
    // Prop-pushforward: the first two only.
    std::vector<InequalityCheck> checks;
    bool all_pass() const;
    std::vector<std::size_t> failing_indices(const std::string& name) const;
};
// Terms beyond the built horizon are bounded by the construction rule
// c_m W(r_n - r_{m+1}) <= 2^{-(m+1-n)} y_n.
ScheduleVerification verify_schedule(const BumpSchedule& schedule, unsigned jobs = 0);

nlohmann::json schedule_to_json(const BumpSchedule& schedule);
BumpSchedule schedule_from_json(const nlohmann::json& j);

class SmoothMapSpec {
public:
    enum class Variant { Identity, Affine, ExplicitH, ExplicitXPlusH, PolyFlat, BumpSumG, IntegratedF };

    static SmoothMapSpec identity();
    static SmoothMapSpec affine(const Rational& a, const Rational& b);
    static SmoothMapSpec explicit_h();    // exp(-exp(x^-2))
    static SmoothMapSpec x_plus_h();      // x + exp(-exp(x^-2))
    static SmoothMapSpec poly_flat(int m);  // x + x^m
    static SmoothMapSpec bump_sum(std::shared_ptr<const BumpSchedule> schedule);
    static SmoothMapSpec integrated(std::shared_ptr<const BumpSchedule> schedule, bool with_linear_term);
    // "identity", "affine:a,b", "h", "x+h", "polyflat:m"; schedule variants
    // are built by the caller.
    static SmoothMapSpec parse(std::string_view text);

    Variant variant() const { return variant_; }
    std::string name() const;
    int degree() const { return degree_; }
    const Rational& slope() const { return a_; }
    const Rational& offset() const { return b_; }
    const std::shared_ptr<const BumpSchedule>& schedule() const { return schedule_; }
    bool with_linear_term() const { return linear_; }

    // f, f' or f'' at x. Flat variants return exact zeros at x = 0.
    LogDomainReal eval(const ExtReal& x, int order) const;
    long double value(long double x) const { return eval(ExtReal(x), 0).to_long_double(); }
    long double d1(long double x) const { return eval(ExtReal(x), 1).to_long_double(); }
    long double d2(long double x) const { return eval(ExtReal(x), 2).to_long_double(); }

private:
    Variant variant_ = Variant::Identity;
    Rational a_ = 1, b_ = 0;
    int degree_ = 0;
    std::shared_ptr<const BumpSchedule> schedule_;
    bool linear_ = false;
};

LogDomainReal eval_map(const SmoothMapSpec& f, const ExtReal& x, int order);

// x -> ratio * x + shift with real coefficients, 0 < ratio < 1.
struct AffineContraction {
    ExtReal ratio, shift;
    static AffineContraction from(const SimilarityMap& map);
    ExtReal operator()(const ExtReal& x) const { return ratio * x + shift; }
};

struct ConjugateDerivatives {
    ExtReal y;  // f(x)
    LogDomainReal value, d1, d2;  // S = f o T o f^-1 and its derivatives at y
};
// Closed-form conjugation; throws ValidationError("singular-conjugation ...") when f'(x) = 0.
ConjugateDerivatives conjugate_derivatives(const SmoothMapSpec& f, const AffineContraction& T, const ExtReal& x);

struct ZeroBracket {
    ExtReal x_lo, x_hi;
    ExtReal y_lo, y_hi;
};

struct ZeroScanOptions {
    long double bracket_width = 1e-12L;
    int near_zero_points = 12;  // x = 2^-k, k = 1..this, for the sign profile
};

struct ZeroScanReport {
    std::vector<ZeroBracket> brackets;
    std::size_t refined_count = 0;  // sign changes on the x4 grid
    bool stable = false;
    std::size_t negative = 0, positive = 0, zero = 0, uncertain = 0;
    std::vector<std::pair<long double, int>> near_zero;  // (x, sign of S'')
};

// Sign changes of S'' over x in [lo, hi] (the point 0 itself is skipped).
ZeroScanReport zero_scan(const SmoothMapSpec& f, const AffineContraction& T, const ExtReal& lo, const ExtReal& hi,
                         int grid_n, const ZeroScanOptions& options = {}, unsigned jobs = 0);

struct SignThreshold {
    bool found = false;
    int index = 0;  // x0 = 2^-index
    ExtReal x0, y0;
};
// Exponential-grid search on x = 2^-k, k = 1..max_index, for the first k from
// which f''(T_0 x)/f''(x) <= 1/5 and f''(T_t x)/f''(x) >= 5 / ratio for each
// other branch hold through max_index.
SignThreshold find_sign_threshold(const SmoothMapSpec& f, const AffineContraction& zero_branch,
                                  const std::vector<AffineContraction>& other_branches, int max_index);

struct RecurrenceWord {
    Word word;
    std::vector<Interval> overlap;  // {x in Z : T_word(x) in Z}
    MeasureEnclosure measure;
};
// Shortest word (then lexicographic) whose overlap has positive measure.
std::optional<RecurrenceWord> recurrence_zero_word(const std::vector<Interval>& Z, const SelfSimilarIFS& ifs,
                                                   int max_depth, const Rational& tol = Rational(1, 1000000));

}  // namespace slowft
