#pragma once

#include "slowft/numeric.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace slowft {

using Coding = std::vector<std::uint8_t>;  // letters 0, 1, 2

// Digit positions M_1 < M_2 < ... standing in for the tower exponents.
struct ScaledTowerSchedule {
    std::vector<long> M;

    static ScaledTowerSchedule defaults() { return {{100, 10'000, 1'000'000}}; }
    std::size_t size() const { return M.size(); }
    long at(std::size_t j) const { return M.at(j - 1); }  // 1-based
};

// 10^block > 1000 * 9^window, decided exactly.
bool counting_bound_holds(long block, long window);

struct ScheduleValidation {
    bool gaps_ok = true;  // M_{j+1} - M_j >= 70
    std::vector<bool> counting_bound;  // per j: 10^{M_{j+1}-M_j} > 1000 * 9^{M_{j+1}}
    bool all_ok() const;
};
// Throws ValidationError unless M has >= 2 strictly increasing positive
// entries whose gaps widen.
ScheduleValidation validate_schedule(const ScaledTowerSchedule& schedule);

// t = sum_j 10^-M_j.
Rational scaled_t(const ScaledTowerSchedule& schedule);

struct PsiBlock {
    long first = 1;  // inclusive
    long last = 1;   // inclusive
    Rational value;
};

class PsiSchedule {
public:
    PsiSchedule() = default;
    explicit PsiSchedule(std::vector<PsiBlock> blocks);
    static PsiSchedule constant(const Rational& value, long horizon);

    const std::vector<PsiBlock>& blocks() const { return blocks_; }
    long horizon() const { return blocks_.empty() ? 0 : blocks_.back().last; }
    // 1-based block index containing n.
    std::size_t block_of(long n) const;
    const Rational& operator()(long n) const;
    // Psi(N) = sum_{n <= N} psi(n), exact.
    Rational prefix_sum(long N) const;

private:
    std::vector<PsiBlock> blocks_;
};

struct PsiOptions {
    // Replaces the first block value 10^-M_1; must lie in (0, 1/5].
    std::optional<Rational> head_value;
};

// Block 1: 1 <= n <= M_2 - M_1 with value 10^-M_1;
// block j >= 2: M_j - M_{j-1} < n <= M_{j+1} - M_j with value 10^-M_j.
PsiSchedule build_psi(const ScaledTowerSchedule& schedule, const PsiOptions& options = {});

Rational point_from_coding(const Rational& t, const Coding& coding);
// All 3^depth codings of exactly this length, lexicographic.
std::vector<Coding> all_codings(int depth);
std::string to_string(const Coding& coding);

struct GammaDigits {
    std::vector<std::uint8_t> digits;
    Rational value() const;  // 0.d_1 d_2 ... d_m exactly
    std::string to_string() const;
};

struct GammaOptions {
    int first_digit = 5;
    unsigned jobs = 0;
};

// Chooses gamma block by block so that dist(10^{n-1} x - gamma, Z) > psi(n)
// for every sample x and n <= n_max; verifies the result exactly.
// Throws Infeasible naming the block when no candidate avoids the sample.
GammaDigits build_gamma(const ScaledTowerSchedule& schedule, const PsiSchedule& psi, const std::vector<Rational>& samples,
                        long n_max, const GammaOptions& options = {});

struct RCount {
    long count = 0;
    long first_violation = -1;
};

// #{1 <= n <= N : dist(b^{n-1} x - gamma, Z) <= psi(n)}, integer arithmetic throughout.
RCount r_count_detail(const Rational& x, long N, const Rational& gamma, const PsiSchedule& psi, long base = 10);
long r_count(const Rational& x, long N, const Rational& gamma, const PsiSchedule& psi, long base = 10);
std::vector<RCount> r_count_batch(const std::vector<Rational>& xs, long N, const Rational& gamma, const PsiSchedule& psi,
                                  long base = 10, unsigned jobs = 0);

// x = x1 + x2 + x3 for n in block j+1, window W = M_{j+1}, with t split as
// t1 = sum_{k <= j+1} 10^-M_k and t2 = t - t1.
struct PointDecomposition {
    Rational x1, x2, x3;
};
PointDecomposition decompose_point(const ScaledTowerSchedule& schedule, const Coding& coding, std::size_t j, long n);
// Digits d_start .. d_{start+length-1} of x in [0, 1) as an integer.
Integer digit_window(const Rational& x, long start, long length);

struct GrowthRow {
    std::size_t j = 0;
    long N = 0;  // checkpoint N_j = M_j
    long double log_ratio = 0;  // log Psi(N) / log N
    long double floor = 0;      // 1 - (M_{j-1} + 1) log 10 / log N
    bool lower_bound_ok = false;  // Psi(N_j) > N_j / 10^{M_{j-1}+1}
    bool below_identity = false;  // Psi(N_j) < N_j
};
// Checkpoints j >= 2 with N_j inside the psi horizon.
std::vector<GrowthRow> growth_diagnostics(const ScaledTowerSchedule& schedule, const PsiSchedule& psi);

// {"M": ["100", "10000"], "head_value": "p/q" (optional)}.
nlohmann::json scaled_schedule_to_json(const ScaledTowerSchedule& schedule);
ScaledTowerSchedule scaled_schedule_from_json(const nlohmann::json& j);
// {"blocks": [{"first": 1, "last": 9900, "value": "p/q"}]}.
nlohmann::json psi_to_json(const PsiSchedule& psi);
PsiSchedule psi_from_json(const nlohmann::json& j);
GammaDigits gamma_from_string(std::string_view digits);

}  // namespace slowft
