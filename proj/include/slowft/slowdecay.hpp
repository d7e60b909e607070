#pragma once

#include "slowft/fourier.hpp"
#include "slowft/numeric.hpp"
#include "slowft/tower.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace slowft {

struct ConstantC {
    ExtReal ext;            // product to j = 64 with the tail midpoint folded in
    long double value = 0;
    long double error = 0;  // bound on |value - c|
};

// c = prod_{j>=1} (1 - 4 pi / (3 10^j)).
const ConstantC& constant_c();
// Plain partial product over j = 1..terms.
ExtReal partial_c(unsigned terms);

// Target decay phi: [0, inf) -> (0, 1].
class DecayFunction {
public:
    enum class Kind { Log10, IteratedLog, Power, Constant, Table };

    // "log", "loglog", "ilog:k", "power:a", "const:k".
    static DecayFunction parse(std::string_view text);
    static DecayFunction log10();
    static DecayFunction iterated_log(int depth);
    static DecayFunction power(const ExtReal& exponent);
    static DecayFunction constant(const ExtReal& level);
    // Samples (xi, phi) with xi strictly increasing, interpolated in log-log
    // and extrapolated from the last two samples. The tail must decrease.
    static DecayFunction table(std::vector<std::pair<long double, long double>> samples);
    static DecayFunction table_from_csv(const std::string& path);

    Kind kind() const { return kind_; }
    std::string name() const;

    long double operator()(long double xi) const;
    // -ln phi(xi) from ln xi.
    ExtReal neg_log_at_log(const ExtReal& log_xi) const;
    Tower neg_log_at_log(const Tower& log_xi) const;
    // -ln phi(10^L).
    ExtReal neg_log_at_pow10(const ExtReal& L) const;

    // Smallest ln xi with -ln phi >= target on all of [xi, inf); nullopt when
    // that threshold is at most 0. Throws Infeasible when no xi qualifies.
    std::optional<Tower> log_threshold(const Tower& target) const;

    bool monotone() const { return kind_ != Kind::Table; }

private:
    Kind kind_ = Kind::Log10;
    int depth_ = 1;
    ExtReal param_ = 0;
    std::vector<ExtReal> log_xi_, neg_log_phi_;
};

// Piecewise-affine psi through (0, 1) and (xi_n, 2^-n), n = 1..N.
class MonotoneEnvelope {
public:
    explicit MonotoneEnvelope(std::vector<Tower> breakpoints) : breakpoints_(std::move(breakpoints)) {}

    const std::vector<Tower>& breakpoints() const { return breakpoints_; }
    std::size_t size() const { return breakpoints_.size(); }
    // xi_n, n = 0..N (xi_0 = 0).
    Tower breakpoint(std::size_t n) const;
    static Rational level(std::size_t n) { return Rational(1, 1) / Rational(pow_int(2, n)); }

    // Throws ValidationError beyond the last breakpoint.
    ExtReal operator()(const ExtReal& xi) const;
    long double operator()(long double xi) const;

private:
    std::vector<Tower> breakpoints_;
};

MonotoneEnvelope monotone_envelope(const DecayFunction& phi, std::size_t count = 12);

struct EnvelopeCheck {
    bool dominates_inverse = true;    // psi >= (1+xi)^-1 on the scan
    bool strictly_increasing = true;  // breakpoints
    std::vector<long double> tail_ratio;  // sup phi / psi over [xi_n, xi_{n+1}], upper bound
    bool tail_ratio_decays = true;
};
EnvelopeCheck check_envelope(const MonotoneEnvelope& env, const DecayFunction& phi, int samples_per_piece = 64);

struct ChooseLOptions {
    long scan_cap = 10'000;  // table presets only
};

// Minimal L with c 3^-n >= 2 phi(10^L).
HugeNat choose_L(const HugeNat& n, const DecayFunction& phi, const ChooseLOptions& options = {});
HugeNat choose_L(long n, const DecayFunction& phi, const ChooseLOptions& options = {});
// Whether L satisfies the defining inequality, evaluated in ExtReal.
bool choose_L_holds(const Integer& n, const Integer& L, const DecayFunction& phi);

struct ScheduleEntry {
    HugeNat k;
    HugeNat L;  // L_{k}
    // Certificates for k_{m+1} > 2 k_m and 10^-k_{m+1} < phi(10^L)/(4 pi 10^L).
    bool doubling_certified = false;
    bool membership_certified = false;
    std::string method;  // "exact", "log-domain" or "tower"
};

struct ScheduleOptions {
    long first_k = 1;
    int max_tower_height = 64;
    // t_prefix terms are materialized while k stays at or below this.
    long prefix_digit_budget = 100'000;
    ChooseLOptions choose;
};

struct LiouvilleSchedule {
    std::string phi_name;
    std::vector<ScheduleEntry> entries;  // m = 1..depth
    HugeNat next_k;                      // k_{depth+1}
    // Sum over the leading terms whose k fit the digit budget.
    Rational t_prefix;
    std::size_t prefix_terms = 0;

    const HugeNat& k(std::size_t m) const { return m <= entries.size() ? entries[m - 1].k : next_k; }
    std::size_t depth() const { return entries.size(); }
    bool fully_certified() const;
    // Sum_{i <= m} 10^-k_i; requires m <= prefix_terms.
    Rational prefix(std::size_t m) const;
};

LiouvilleSchedule build_liouville_t(const DecayFunction& phi, std::size_t depth, const ScheduleOptions& options = {});
// k, L as exact decimal strings or {"tower_height", "tower_top", "offset"};
// t_prefix as an exact decimal string.
nlohmann::json liouville_to_json(const LiouvilleSchedule& schedule);
LiouvilleSchedule liouville_from_json(const nlohmann::json& j);
nlohmann::json huge_nat_to_json(const HugeNat& value);
HugeNat huge_nat_from_json(const nlohmann::json& j);

// Recomputes every certificate of a schedule from its k and L values.
bool recheck_schedule(const LiouvilleSchedule& schedule, const DecayFunction& phi);

struct LowerBoundReport {
    std::string t;
    std::string L;
    long double modulus = 0;
    long double err = 0;
    std::optional<long double> lemma_bound;  // c 3^-n when t = p/10^n and L > n
    std::optional<long double> phi_bound;    // phi(10^L)
    long double tail_penalty = 0;            // schedule verification only
    long double slack = 0;
    bool pass = false;
};

struct VerifyOptions {
    long double tol = 1e-12L;
    long double slack = 1e-9L;
    long max_L_eval = 10'000;
};

LowerBoundReport verify_lower_bound(const Rational& t, unsigned n, const Integer& L, const DecayFunction* phi,
                                    const VerifyOptions& options = {});

struct IndexVerification {
    std::size_t index = 0;
    bool evaluated = false;  // false when L exceeds max_L_eval or the prefix is not materialized
    LowerBoundReport report;
};
// Evaluates |mu_hat_prefix(10^L)| - err - tail penalty >= phi(10^L) for every
// index whose L is within budget; indices run in parallel.
std::vector<IndexVerification> verify_schedule(const LiouvilleSchedule& schedule, const DecayFunction& phi,
                                               const VerifyOptions& options = {}, unsigned jobs = 0);

enum class RajchmanStatus { Rajchman, NonRajchman, Unknown };
std::string to_string(RajchmanStatus s);
RajchmanStatus rajchman_status_mu_t(const Rational& t);
RajchmanStatus rajchman_status_mu_t(const LiouvilleSchedule& schedule);

// For phi = 1/log log, checks c 3^-m >= 2 phi(10^L) at m = 10^^n,
// L = 10^^(n+2) by tower comparison.
Certainty loglog_tower_rule(int n);

}  // namespace slowft
