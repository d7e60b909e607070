#pragma once

#include "slowft/errors.hpp"
#include "slowft/fourier.hpp"
#include "slowft/logdomain.hpp"
#include "slowft/measures.hpp"
#include "slowft/smoothmaps.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace slowft {

struct OscIntegralResult {
    long double re = 0, im = 0;
    long double err = 0;  // certified radius given the leaf error rule
    std::size_t leaf_count = 0;
    std::size_t linear_leaf_count = 0;
    std::size_t depth_max = 0;
    // Mass of cylinders cut by a region endpoint, charged to err in full.
    long double boundary_mass = 0;

    Complex value() const { return {re, im}; }
    long double modulus() const;
};

class PushforwardBudgetExceeded : public BudgetExceeded {
public:
    PushforwardBudgetExceeded(const std::string& what, OscIntegralResult partial)
        : BudgetExceeded(what), partial_(partial) {}
    const OscIntegralResult& partial() const { return partial_; }

private:
    OscIntegralResult partial_;
};

struct PushforwardOptions {
    long double leaf_eps = 0;  // 0: tol / 4
    bool linearize = true;     // tangent-line leaves through the exact affine-image FT
    std::size_t leaf_budget = 100'000'000;
    std::optional<Interval> region;  // integrate over mu restricted to this interval
    unsigned jobs = 0;
};

// int e^{2 pi i xi f(x)} dmu(x) by recursive cylinder subdivision.
OscIntegralResult pushforward_ft(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, long double xi, long double tol,
                                 const PushforwardOptions& options = {});

// Upper bound of |f^(order)| on [a, b] within [0, 1] for maps whose
// derivative magnitude is nondecreasing in |x| there; nullopt otherwise.
std::optional<long double> derivative_bound(const SmoothMapSpec& f, long double a, long double b, int order);

struct RegionReport {
    OscIntegralResult near;  // over [0, x1]
    MeasureEnclosure middle_mass;  // of (x1, x2)
    OscIntegralResult far;  // over [x2, 1]
    LogDomainReal min_second_deriv_far;  // min |f''| over the far region, at its endpoints
    OscIntegralResult full;
    // |full - near - far| <= middle upper + errors.
    long double bracket_gap = 0;
    bool bracket_holds = false;
};

RegionReport region_report(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, long double xi, const Rational& x1,
                           const Rational& x2, long double tol, const PushforwardOptions& options = {});

// Largest k with j b^k (f(b^-n) - b^-n) <= 0.01 |c_mu|.
struct FrequencyIndex {
    enum class Kind { Finite, Symbolic, Unbounded };
    Kind kind = Kind::Finite;
    long k = 0;            // Finite only
    ExtReal bound = 0;     // the real-valued bound whose floor is k
    ExtReal log_bound = 0;  // ln(bound), kept for Symbolic
    LogDomainReal excess;  // f(b^-n) - b^-n
};
std::string to_string(FrequencyIndex::Kind kind);

FrequencyIndex select_kn(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, int n, long j, const Complex& c_mu);

struct NearZeroReport {
    int n = 0;
    long j = 0;
    FrequencyIndex k;
    bool skipped = false;
    std::string note;
    long double xi = 0;
    Complex c_mu;
    OscIntegralResult integral;
    long double modulus = 0, threshold = 0, margin = 0;  // margin = modulus + err - threshold
    bool pass = false;
};

// Integral over the level-n zero cylinder at xi = j b^{k_n}, compared with
// 0.9 mu([0, b^-n]) |c_mu|. Unbounded k_n uses k = n.
NearZeroReport near_zero_check(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, int n, long j, long double tol,
                               const PushforwardOptions& options = {});

struct DecayProfileRow {
    std::string xi_text;
    long double xi = 0;
    OscIntegralResult value;
};

struct DecayProfile {
    std::vector<DecayProfileRow> rows;
    // Least-squares slope of log|value| against log xi over rows whose
    // modulus exceeds err. Empirical, not certified.
    long double slope = 0;
    std::size_t fitted = 0;
    long double min_modulus = 0, max_modulus = 0;
};

DecayProfile decay_profile(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, const std::vector<long double>& xi_grid,
                           long double tol, const PushforwardOptions& options = {});
// Least squares slope of y on x.
long double fit_slope(const std::vector<long double>& x, const std::vector<long double>& y);
void write_decay_profile_csv(std::ostream& out, const DecayProfile& profile);

}  // namespace slowft
