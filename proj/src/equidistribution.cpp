#include "slowft/equidistribution.hpp"

#include "slowft/errors.hpp"
#include "slowft/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string_view>

namespace slowft {
namespace {

Rational inv_pow10(long e) { return Rational(Integer(1), pow_int(10, static_cast<unsigned long>(e))); }

Integer fdiv_r(const Integer& a, const Integer& m) {
    Integer r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
    return r;
}

// Forbidden grid residues as closed integer intervals inside [0, modulus).
struct IntRange {
    Integer lo, hi;
};

// Adds [lo, hi] taken modulo `circle`, clipped to [0, limit).
void add_wrapped(std::vector<IntRange>& out, Integer lo, Integer hi, const Integer& circle, const Integer& limit) {
    auto clip = [&](const Integer& a, const Integer& b) {
        if (a >= limit || b < 0) return;
        out.push_back({a < 0 ? Integer(0) : a, b >= limit ? limit - 1 : b});
    };
    if (hi - lo + 1 >= circle) {
        clip(0, circle - 1);
        return;
    }
    const Integer shift = fdiv_r(lo, circle) - lo;
    lo += shift;
    hi += shift;
    if (hi < circle) {
        clip(lo, hi);
    } else {
        clip(lo, circle - 1);
        clip(0, hi - circle);
    }
}

std::vector<IntRange> merge(std::vector<IntRange> ranges) {
    std::sort(ranges.begin(), ranges.end(), [](const IntRange& a, const IntRange& b) { return a.lo < b.lo; });
    std::vector<IntRange> out;
    for (auto& r : ranges) {
        if (!out.empty() && r.lo <= out.back().hi + 1) {
            if (r.hi > out.back().hi) out.back().hi = r.hi;
        } else {
            out.push_back(std::move(r));
        }
    }
    return out;
}

Integer repdigit(int digit, long length) { return Integer(digit) * (pow_int(10, length) - 1) / 9; }

// Exact decimal expansion of frac(x) when x has denominator 2^a 5^b.
// Orbit points y_n = frac(10^{n-1} x) are suffixes of the digit string.
class DecimalExpansion {
public:
    static std::optional<DecimalExpansion> from(const Rational& x) {
        Rational f = x;
        if (f < 0 || f >= 1) f = frac(f);
        Integer q = f.get_den();
        const Integer two = 2, five = 5;
        const auto twos = mpz_remove(q.get_mpz_t(), q.get_mpz_t(), two.get_mpz_t());
        const auto fives = mpz_remove(q.get_mpz_t(), q.get_mpz_t(), five.get_mpz_t());
        if (q != 1) return std::nullopt;
        const auto K = static_cast<std::size_t>(std::max(twos, fives));
        const Integer num = f.get_num() * (pow_int(10, K) / f.get_den());
        DecimalExpansion out;
        out.digits_ = num == 0 ? std::string() : num.get_str(10);
        out.digits_.insert(0, K - out.digits_.size(), '0');
        const auto last = out.digits_.find_last_not_of('0');
        out.digits_.resize(last == std::string::npos ? 0 : last + 1);
        return out;
    }

    // Sign of y_n - frac(other).
    int compare_shifted(long n, const DecimalExpansion& other) const {
        const std::string_view mine =
            static_cast<std::size_t>(n - 1) < digits_.size() ? std::string_view(digits_).substr(n - 1) : std::string_view();
        const int c = mine.compare(other.digits_);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }

private:
    std::string digits_;  // no trailing zeros
};

// Closed arc [from, to] on R/Z, or the whole circle.
struct DecimalArc {
    DecimalExpansion from, to;
    bool whole = false;

    static std::optional<DecimalArc> make(const Rational& start, const Rational& length) {
        if (length >= 1) return DecimalArc{DecimalExpansion{}, DecimalExpansion{}, true};
        auto a = DecimalExpansion::from(start);
        auto b = DecimalExpansion::from(start + length);
        if (!a || !b) return std::nullopt;
        return DecimalArc{std::move(*a), std::move(*b), false};
    }

    bool contains(const DecimalExpansion& x, long n) const {
        if (whole) return true;
        const bool after_from = x.compare_shifted(n, from) >= 0;
        const bool before_to = x.compare_shifted(n, to) <= 0;
        return from.compare_shifted(1, to) <= 0 ? (after_from && before_to) : (after_from || before_to);
    }
};

}  // namespace

// ---------------------------------------------------------------- schedule

bool counting_bound_holds(long block, long window) {
    if (block < 0 || window < 0) throw ValidationError("counting bound needs non-negative sizes");
    if (window <= 2'000'000 && block <= 2'000'000)
        return pow_int(10, block) > 1000 * pow_int(9, window);
    const long double margin = block * std::log10(10.0L) - 3 - window * std::log10(9.0L);
    if (std::fabs(margin) < 1) throw BudgetExceeded("counting bound too close to decide in log domain");
    return margin > 0;
}

bool ScheduleValidation::all_ok() const {
    return gaps_ok && std::all_of(counting_bound.begin(), counting_bound.end(), [](bool b) { return b; });
}

ScheduleValidation validate_schedule(const ScaledTowerSchedule& schedule) {
    const auto& M = schedule.M;
    if (M.size() < 2) throw ValidationError("tower schedule needs at least two entries");
    if (M[0] < 1) throw ValidationError("tower schedule entries must be positive");
    long prev_gap = M[0];
    for (std::size_t i = 1; i < M.size(); ++i) {
        const long gap = M[i] - M[i - 1];
        if (gap <= 0) throw ValidationError("tower schedule must be strictly increasing");
        if (i >= 2 && gap <= prev_gap) throw ValidationError("tower schedule gaps must widen");
        prev_gap = gap;
    }
    ScheduleValidation v;
    for (std::size_t i = 1; i < M.size(); ++i) {
        if (M[i] - M[i - 1] < 70) v.gaps_ok = false;
        v.counting_bound.push_back(counting_bound_holds(M[i] - M[i - 1], M[i]));
    }
    return v;
}

Rational scaled_t(const ScaledTowerSchedule& schedule) {
    Rational t = 0;
    for (long m : schedule.M) t += inv_pow10(m);
    t.canonicalize();
    return t;
}

// ---------------------------------------------------------------- psi

PsiSchedule::PsiSchedule(std::vector<PsiBlock> blocks) : blocks_(std::move(blocks)) {
    long expect = 1;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        auto& b = blocks_[i];
        b.value.canonicalize();
        if (b.first != expect || b.last < b.first) throw ValidationError("psi blocks must be contiguous from n = 1");
        if (b.value <= 0) throw ValidationError("psi values must be positive");
        if (i > 0 && b.value > blocks_[i - 1].value) throw ValidationError("psi values must not increase");
        expect = b.last + 1;
    }
}

PsiSchedule PsiSchedule::constant(const Rational& value, long horizon) {
    return PsiSchedule({PsiBlock{1, horizon, value}});
}

std::size_t PsiSchedule::block_of(long n) const {
    if (n < 1 || n > horizon()) throw std::out_of_range("psi index outside the schedule horizon");
    const auto it = std::lower_bound(blocks_.begin(), blocks_.end(), n,
                                     [](const PsiBlock& b, long v) { return b.last < v; });
    return static_cast<std::size_t>(it - blocks_.begin()) + 1;
}

const Rational& PsiSchedule::operator()(long n) const { return blocks_[block_of(n) - 1].value; }

Rational PsiSchedule::prefix_sum(long N) const {
    if (N > horizon()) throw std::out_of_range("Psi(N) beyond the schedule horizon");
    Rational s = 0;
    for (const auto& b : blocks_) {
        if (b.first > N) break;
        s += Rational(std::min(N, b.last) - b.first + 1) * b.value;
    }
    s.canonicalize();
    return s;
}

PsiSchedule build_psi(const ScaledTowerSchedule& schedule, const PsiOptions& options) {
    validate_schedule(schedule);
    const auto& M = schedule.M;
    std::vector<PsiBlock> blocks;
    blocks.push_back({1, M[1] - M[0], inv_pow10(M[0])});
    for (std::size_t j = 2; j + 1 <= M.size(); ++j)
        blocks.push_back({M[j - 1] - M[j - 2] + 1, M[j] - M[j - 1], inv_pow10(M[j - 1])});
    if (options.head_value) {
        const Rational& h = *options.head_value;
        if (h <= 0 || h > Rational(1, 5)) throw ValidationError("psi head value must lie in (0, 1/5]");
        blocks[0].value = h;
    }
    return PsiSchedule(std::move(blocks));
}

// ---------------------------------------------------------------- points

Rational point_from_coding(const Rational& t, const Coding& coding) {
    Integer ones = 0, twos = 0;  // digit strings scaled by 10^depth
    for (std::uint8_t a : coding) {
        ones *= 10;
        twos *= 10;
        if (a == 1) ones += 1;
        else if (a == 2) twos += 1;
        else if (a != 0) throw ValidationError("coding letters must be 0, 1 or 2");
    }
    const Integer scale = pow_int(10, coding.size());
    Rational x = Rational(ones, scale) + t * Rational(twos, scale);
    x.canonicalize();
    return x;
}

std::vector<Coding> all_codings(int depth) {
    if (depth < 0 || depth > 16) throw ValidationError("coding depth must lie in [0, 16]");
    std::vector<Coding> out;
    Coding c(static_cast<std::size_t>(depth), 0);
    std::size_t total = 1;
    for (int i = 0; i < depth; ++i) total *= 3;
    out.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t v = idx;
        for (int i = depth - 1; i >= 0; --i) {
            c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v % 3);
            v /= 3;
        }
        out.push_back(c);
    }
    return out;
}

std::string to_string(const Coding& coding) {
    std::string s;
    for (auto a : coding) s.push_back(static_cast<char>('0' + a));
    return s;
}

Rational GammaDigits::value() const {
    Integer num = 0;
    for (auto d : digits) num = num * 10 + d;
    Rational g(num, pow_int(10, digits.size()));
    g.canonicalize();
    return g;
}

std::string GammaDigits::to_string() const {
    std::string s = "0.";
    for (auto d : digits) s.push_back(static_cast<char>('0' + d));
    return s;
}

// ---------------------------------------------------------------- counting

RCount r_count_detail(const Rational& x, long N, const Rational& gamma, const PsiSchedule& psi, long base) {
    if (N < 1) throw ValidationError("r_count needs N >= 1");
    if (base < 2) throw ValidationError("r_count needs base >= 2");
    if (N > psi.horizon()) throw ValidationError("N exceeds the psi horizon");
    Rational gr = gamma;
    gr.canonicalize();
    const Integer& D = gr.get_den();
    RCount out;
    const auto& blocks = psi.blocks();

    // y = F / Q; violation iff dist(y - gamma, Z) <= v.
    auto violates = [&](const Integer& F, const Integer& Q, const Rational& v) {
        const Integer QD = Q * D;
        Integer r = F * D - gr.get_num() * Q;
        mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), QD.get_mpz_t());
        Integer d = QD - r;
        if (r < d) d = r;
        return d * v.get_den() <= v.get_num() * QD;
    };
    auto record = [&](long n) {
        ++out.count;
        if (out.first_violation < 0) out.first_violation = n;
    };

    // Bad set {y : dist(y - gamma, Z) <= v} is the arc [gamma - v, gamma + v].
    const auto expansion = base == 10 ? DecimalExpansion::from(x) : std::nullopt;
    if (expansion) {
        std::vector<std::optional<DecimalArc>> arcs;
        for (const auto& blk : blocks) arcs.push_back(DecimalArc::make(gr - blk.value, 2 * blk.value));
        if (std::all_of(arcs.begin(), arcs.end(), [](const auto& a) { return a.has_value(); })) {
            std::size_t block = 0;
            for (long n = 1; n <= N; ++n) {
                while (n > blocks[block].last) ++block;
                if (arcs[block]->contains(*expansion, n)) record(n);
            }
            return out;
        }
    }

    Rational xr = x;
    xr.canonicalize();
    const Integer& Q = xr.get_den();
    Integer F = fdiv_r(xr.get_num(), Q);  // b^{n-1} x mod 1 = F / Q
    std::size_t block = 0;
    for (long n = 1; n <= N; ++n) {
        while (n > blocks[block].last) ++block;
        if (violates(F, Q, blocks[block].value)) record(n);
        F *= base;
        mpz_fdiv_r(F.get_mpz_t(), F.get_mpz_t(), Q.get_mpz_t());
    }
    return out;
}

long r_count(const Rational& x, long N, const Rational& gamma, const PsiSchedule& psi, long base) {
    return r_count_detail(x, N, gamma, psi, base).count;
}

std::vector<RCount> r_count_batch(const std::vector<Rational>& xs, long N, const Rational& gamma, const PsiSchedule& psi,
                                  long base, unsigned jobs) {
    std::vector<RCount> out(xs.size());
    parallel_for(xs.size(), jobs, [&](std::size_t i) { out[i] = r_count_detail(xs[i], N, gamma, psi, base); });
    return out;
}

// ---------------------------------------------------------------- gamma

namespace {

// Orbit y_n = frac(10^{n-1} x) = F / Q in integers, with offsets against a
// fixed rational g = G / D reported as r / (Q D), r = (y - g) mod 1 scaled.
class DecimalOrbit {
public:
    DecimalOrbit(const Rational& x, const Rational& g, long first_n) {
        Rational xr = x, gr = g;
        xr.canonicalize();
        gr.canonicalize();
        Q_ = xr.get_den();
        D_ = gr.get_den();
        QD_ = Q_ * D_;
        GQ_ = gr.get_num() * Q_;
        F_ = xr.get_num() * pow_int(10, static_cast<unsigned long>(first_n - 1));
        mpz_fdiv_r(F_.get_mpz_t(), F_.get_mpz_t(), Q_.get_mpz_t());
    }
    const Integer& scale() const { return QD_; }
    const Integer& offset() {
        r_ = F_ * D_ - GQ_;
        mpz_fdiv_r(r_.get_mpz_t(), r_.get_mpz_t(), QD_.get_mpz_t());
        return r_;
    }
    void step() {
        F_ *= 10;
        mpz_fdiv_r(F_.get_mpz_t(), F_.get_mpz_t(), Q_.get_mpz_t());
    }

private:
    Integer Q_, D_, QD_, GQ_, F_, r_;
};

Integer fdiv_q(const Integer& a, const Integer& b) {
    Integer q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

}  // namespace

GammaDigits build_gamma(const ScaledTowerSchedule& schedule, const PsiSchedule& psi, const std::vector<Rational>& samples,
                        long n_max, const GammaOptions& options) {
    validate_schedule(schedule);
    if (options.first_digit < 0 || options.first_digit > 9) throw ValidationError("first gamma digit must be 0..9");
    if (n_max < 1 || n_max > psi.horizon()) throw ValidationError("n_max must lie within the psi horizon");
    if (psi.blocks().size() + 1 > schedule.size()) throw ValidationError("psi has more blocks than the schedule supports");
    const auto& M = schedule.M;

    GammaDigits g;
    g.digits.assign(static_cast<std::size_t>(M[0]), static_cast<std::uint8_t>(options.first_digit));
    const std::size_t last_block = psi.block_of(n_max);

    // Block 1: later digits keep gamma inside [g, g + 10^-M_1], so each
    // offset (y - g) mod 1 must exceed 10^-M_1 + psi and stay below 1 - psi.
    {
        const Rational lo = g.value();
        const PsiBlock& blk = psi.blocks()[0];
        const Rational low_gap = inv_pow10(M[0]) + blk.value;
        const Rational high_gap = 1 - blk.value;
        const long end = std::min(n_max, blk.last);
        std::vector<char> bad(samples.size(), 0);
        // Bad offsets r <= low_gap or r >= high_gap form the arc [lo - psi, lo + low_gap].
        const auto arc = DecimalArc::make(lo - blk.value, low_gap + blk.value);
        parallel_for(samples.size(), options.jobs, [&](std::size_t i) {
            const auto expansion = DecimalExpansion::from(samples[i]);
            if (arc && expansion) {
                for (long n = 1; n <= end; ++n) {
                    if (arc->contains(*expansion, n)) {
                        bad[i] = 1;
                        return;
                    }
                }
                return;
            }
            DecimalOrbit orbit(samples[i], lo, 1);
            const Integer above = low_gap.get_num() * orbit.scale();
            const Integer below = high_gap.get_num() * orbit.scale();
            for (long n = 1; n <= end; ++n, orbit.step()) {
                const Integer& r = orbit.offset();
                if (!(r * low_gap.get_den() > above && r * high_gap.get_den() < below)) {
                    bad[i] = 1;
                    return;
                }
            }
        });
        if (std::any_of(bad.begin(), bad.end(), [](char b) { return b != 0; }))
            throw Infeasible("infeasible-block 1: the leading digit block meets a sampled window");
    }

    for (std::size_t b = 2; b <= last_block; ++b) {
        const PsiBlock& blk = psi.blocks()[b - 1];
        const long width_digits = M[b - 1] - M[b - 2];
        const Integer modulus = pow_int(10, width_digits);
        const Integer circle = pow_int(10, M[b - 1]);
        const Rational prefix = g.value();
        const Rational reach = blk.value * Rational(circle);  // psi in grid units
        const long end = std::min(n_max, blk.last);

        std::vector<std::vector<IntRange>> per_sample(samples.size());
        parallel_for(samples.size(), options.jobs, [&](std::size_t i) {
            DecimalOrbit orbit(samples[i], prefix, blk.first);
            // Grid point k covers [prefix + k h, prefix + (k+1) h], h = 1/circle; with
            // e = offset / h it must avoid [e - 1 - reach, e + reach] modulo circle.
            const Integer den = orbit.scale() * reach.get_den();
            const Integer reach_scaled = reach.get_num() * orbit.scale();
            for (long n = blk.first; n <= end; ++n, orbit.step()) {
                const Integer e_num = orbit.offset() * circle * reach.get_den();
                const Integer lo = -fdiv_q(-(e_num - den - reach_scaled), den);
                const Integer hi = fdiv_q(e_num + reach_scaled, den);
                add_wrapped(per_sample[i], lo, hi, circle, modulus);
            }
        });
        std::vector<IntRange> all;
        for (auto& v : per_sample)
            for (auto& r : v) all.push_back(std::move(r));
        const auto forbidden = merge(std::move(all));

        const Integer preferred = repdigit(options.first_digit, width_digits);
        Integer choice = preferred;
        const auto hit = std::find_if(forbidden.begin(), forbidden.end(),
                                      [&](const IntRange& r) { return r.lo <= preferred && preferred <= r.hi; });
        if (hit != forbidden.end()) {
            std::optional<Integer> below, above;
            if (hit->lo > 0) below = hit->lo - 1;
            if (hit->hi + 1 < modulus) above = hit->hi + 1;
            if (!below && !above)
                throw Infeasible("infeasible-block " + std::to_string(b) + ": every digit block meets a sampled window");
            if (below && above) choice = (preferred - *below <= *above - preferred) ? *below : *above;
            else choice = below ? *below : *above;
        }
        const std::string digits = choice.get_str(10);
        g.digits.insert(g.digits.end(), static_cast<std::size_t>(width_digits) - digits.size(), 0);
        for (char ch : digits) g.digits.push_back(static_cast<std::uint8_t>(ch - '0'));
    }

    const Rational gamma = g.value();
    const auto counts = r_count_batch(samples, n_max, gamma, psi, 10, options.jobs);
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i].count != 0)
            throw std::logic_error("gamma verification failed at sample " + std::to_string(i) + ", n = " +
                                   std::to_string(counts[i].first_violation));
    return g;
}

// ---------------------------------------------------------------- decomposition

Integer digit_window(const Rational& x, long start, long length) {
    if (start < 1 || length < 0) throw ValidationError("digit window needs start >= 1, length >= 0");
    const Rational scaled = frac(x) * Rational(pow_int(10, static_cast<unsigned long>(start + length - 1)));
    return fdiv_r(floor_int(scaled), pow_int(10, static_cast<unsigned long>(length)));
}

PointDecomposition decompose_point(const ScaledTowerSchedule& schedule, const Coding& coding, std::size_t j, long n) {
    validate_schedule(schedule);
    if (j < 1 || j + 1 > schedule.size()) throw ValidationError("decomposition index j out of range");
    const long W = schedule.at(j + 1);
    Rational t1 = 0, t2 = 0;
    for (std::size_t k = 1; k <= schedule.size(); ++k) (k <= j + 1 ? t1 : t2) += inv_pow10(schedule.at(k));
    PointDecomposition out;
    for (std::size_t idx = 0; idx < coding.size(); ++idx) {
        const long k = static_cast<long>(idx) + 1;
        const Rational unit = inv_pow10(k);
        if (coding[idx] == 1) {
            (k < n ? out.x1 : k < n + W ? out.x2 : out.x3) += unit;
        } else if (coding[idx] == 2) {
            (k < n - W ? out.x1 : k < n + W ? out.x2 : out.x3) += t1 * unit;
            out.x3 += t2 * unit;
        }
    }
    out.x1.canonicalize();
    out.x2.canonicalize();
    out.x3.canonicalize();
    return out;
}

// ---------------------------------------------------------------- diagnostics

std::vector<GrowthRow> growth_diagnostics(const ScaledTowerSchedule& schedule, const PsiSchedule& psi) {
    validate_schedule(schedule);
    std::vector<GrowthRow> rows;
    const long double ln10 = std::log(10.0L);
    for (std::size_t j = 2; j <= schedule.size(); ++j) {
        const long N = schedule.at(j);
        if (N > psi.horizon()) break;
        GrowthRow row;
        row.j = j;
        row.N = N;
        const Rational Psi = psi.prefix_sum(N);
        const long double log_psi = log_abs(Psi.get_num()) - log_abs(Psi.get_den());
        const long double log_n = std::log(static_cast<long double>(N));
        row.log_ratio = log_psi / log_n;
        row.floor = 1 - (schedule.at(j - 1) + 1) * ln10 / log_n;
        row.lower_bound_ok = Psi > Rational(N) * inv_pow10(schedule.at(j - 1) + 1);
        row.below_identity = Psi < N;
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json scaled_schedule_to_json(const ScaledTowerSchedule& schedule) {
    nlohmann::json M = nlohmann::json::array();
    for (long m : schedule.M) M.push_back(std::to_string(m));
    return {{"M", M}};
}

ScaledTowerSchedule scaled_schedule_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("M") || !j.at("M").is_array())
        throw ValidationError("scaled schedule needs an array field M");
    ScaledTowerSchedule s;
    for (const auto& v : j.at("M")) {
        const Integer m = v.is_string() ? parse_integer(v.get<std::string>()) : Integer(v.get<long>());
        if (!m.fits_slong_p()) throw ValidationError("schedule entry out of range");
        s.M.push_back(m.get_si());
    }
    validate_schedule(s);
    return s;
}

nlohmann::json psi_to_json(const PsiSchedule& psi) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : psi.blocks())
        blocks.push_back({{"first", b.first}, {"last", b.last}, {"value", slowft::to_string(b.value)}});
    return {{"blocks", blocks}};
}

PsiSchedule psi_from_json(const nlohmann::json& j) {
    try {
        std::vector<PsiBlock> blocks;
        for (const auto& b : j.at("blocks"))
            blocks.push_back({b.at("first").get<long>(), b.at("last").get<long>(),
                              parse_rational(b.at("value").get<std::string>())});
        if (blocks.empty()) throw ValidationError("psi schedule has no blocks");
        return PsiSchedule(std::move(blocks));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("psi json: ") + e.what());
    }
}

GammaDigits gamma_from_string(std::string_view digits) {
    if (digits.starts_with("0.")) digits.remove_prefix(2);
    GammaDigits g;
    for (char ch : digits) {
        if (ch < '0' || ch > '9') throw ValidationError("gamma digits must be decimal");
        g.digits.push_back(static_cast<std::uint8_t>(ch - '0'));
    }
    return g;
}

}  // namespace slowft
