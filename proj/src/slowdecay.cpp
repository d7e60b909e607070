#include "slowft/slowdecay.hpp"

#include "slowft/errors.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <future>
#include <sstream>
#include <thread>

namespace slowft {
namespace {

namespace mp = boost::multiprecision;

const ExtReal& ext_pi() {
    static const ExtReal v = boost::math::constants::pi<ExtReal>();
    return v;
}
const ExtReal& ln10() {
    static const ExtReal v = mp::log(ExtReal(10));
    return v;
}
const ExtReal& ln3() {
    static const ExtReal v = mp::log(ExtReal(3));
    return v;
}
// ln(4 pi) / ln 10
const ExtReal& log10_four_pi() {
    static const ExtReal v = mp::log(4 * ext_pi()) / ln10();
    return v;
}
// ln(2 / c)
const ExtReal& log_two_over_c() {
    static const ExtReal v = mp::log(2 / constant_c().ext);
    return v;
}

// Values this large or smaller are handled as plain ExtReal reals.
const ExtReal& plain_limit() {
    static const ExtReal v("1e60");
    return v;
}

Integer floor_to_integer(const ExtReal& x) {
    std::string s = mp::floor(x).str(0, std::ios_base::fixed);
    if (const auto dot = s.find('.'); dot != std::string::npos) s.resize(dot);
    return Integer(s, 10);
}

long double to_ld(const ExtReal& x) { return x.convert_to<long double>(); }

// Upper bound for pi: 3.14159265358979323846264338327950288420.
const Rational& pi_upper() {
    static const Rational v = [] {
        Rational q(Integer("314159265358979323846264338327950288420"), pow_int(10, 38));
        q.canonicalize();
        return q;
    }();
    return v;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

ExtReal parse_positive(std::string_view text, const char* what) {
    try {
        const Rational q = parse_rational(text);
        if (q <= 0) throw ValidationError(std::string(what) + " must be positive");
        return to_ext(q);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError(std::string("bad ") + what + ": " + std::string(text));
    }
}

}  // namespace

ExtReal partial_c(unsigned terms) {
    const ExtReal a = 4 * ext_pi() / 3;
    ExtReal p = 1, scale = 1;
    for (unsigned j = 1; j <= terms; ++j) {
        scale *= 10;
        p *= 1 - a / scale;
    }
    return p;
}

const ConstantC& constant_c() {
    static const ConstantC c = [] {
        ConstantC out;
        constexpr unsigned kTerms = 64;
        const ExtReal head = partial_c(kTerms);
        // prod_{j>64}(1 - a_j) lies in [1 - S, 1] with S = sum_{j>64} a_j = 4 pi / (27 10^64).
        const ExtReal tail_sum = 4 * ext_pi() / (27 * mp::pow(ExtReal(10), kTerms));
        out.ext = head * (1 - tail_sum / 2);
        out.value = to_ld(out.ext);
        const ExtReal rounding = mp::abs(out.ext - ExtReal(out.value));
        out.error = to_ld(rounding + head * tail_sum / 2 + ExtReal("1e-70"));
        return out;
    }();
    return c;
}

// ---------------------------------------------------------------- DecayFunction

DecayFunction DecayFunction::log10() { return DecayFunction(); }

DecayFunction DecayFunction::iterated_log(int depth) {
    if (depth < 1) throw ValidationError("ilog depth must be >= 1");
    DecayFunction f;
    f.kind_ = Kind::IteratedLog;
    f.depth_ = depth;
    return f;
}

DecayFunction DecayFunction::power(const ExtReal& exponent) {
    if (exponent <= 0) throw ValidationError("power exponent must be positive");
    DecayFunction f;
    f.kind_ = Kind::Power;
    f.param_ = exponent;
    return f;
}

DecayFunction DecayFunction::constant(const ExtReal& level) {
    if (level <= 0 || level > 1) throw ValidationError("constant phi must lie in (0, 1]");
    DecayFunction f;
    f.kind_ = Kind::Constant;
    f.param_ = level;
    return f;
}

DecayFunction DecayFunction::table(std::vector<std::pair<long double, long double>> samples) {
    if (samples.size() < 2) throw ValidationError("phi table needs at least two samples");
    DecayFunction f;
    f.kind_ = Kind::Table;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto [xi, v] = samples[i];
        if (!(xi > 0) || !std::isfinite(xi)) throw ValidationError("phi table xi must be positive");
        if (!(v > 0) || v > 1) throw ValidationError("phi table values must lie in (0, 1]");
        if (i > 0 && !(xi > samples[i - 1].first)) throw ValidationError("phi table xi must increase");
        f.log_xi_.push_back(mp::log(ExtReal(xi)));
        f.neg_log_phi_.push_back(-mp::log(ExtReal(v)));
    }
    const std::size_t m = samples.size();
    if (!(f.neg_log_phi_[m - 1] > f.neg_log_phi_[m - 2]))
        throw ValidationError("cannot-envelope: phi table tail is not decreasing");
    return f;
}

DecayFunction DecayFunction::table_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open phi table " + path);
    std::vector<std::pair<long double, long double>> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cols = split(line, ',');
        if (cols.size() < 2) throw ValidationError("phi table line needs xi,phi: " + line);
        try {
            samples.emplace_back(std::stold(cols[0]), std::stold(cols[1]));
        } catch (const std::exception&) {
            if (samples.empty()) continue;  // header
            throw ValidationError("bad phi table line: " + line);
        }
    }
    return table(std::move(samples));
}

DecayFunction DecayFunction::parse(std::string_view text) {
    if (text == "log") return log10();
    if (text == "loglog") return iterated_log(2);
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ValidationError("unknown phi preset: " + std::string(text));
    const auto head = text.substr(0, colon);
    const auto arg = text.substr(colon + 1);
    if (head == "ilog") {
        int k = 0;
        const auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
        if (ec != std::errc() || p != arg.data() + arg.size()) throw ValidationError("bad ilog depth");
        return iterated_log(k);
    }
    if (head == "power") return power(parse_positive(arg, "power exponent"));
    if (head == "const") return constant(parse_positive(arg, "constant level"));
    if (head == "table") return table_from_csv(std::string(arg));
    throw ValidationError("unknown phi preset: " + std::string(text));
}

std::string DecayFunction::name() const {
    switch (kind_) {
        case Kind::Log10: return "log";
        case Kind::IteratedLog: return depth_ == 2 ? "loglog" : "ilog:" + std::to_string(depth_);
        case Kind::Power: return "power:" + format_ext(param_, 20);
        case Kind::Constant: return "const:" + format_ext(param_, 20);
        case Kind::Table: return "table";
    }
    return "?";
}

ExtReal DecayFunction::neg_log_at_log(const ExtReal& log_xi) const {
    switch (kind_) {
        case Kind::Log10: {
            const ExtReal v = log_xi / ln10();
            return v > 1 ? mp::log(v) : ExtReal(0);
        }
        case Kind::IteratedLog: {
            ExtReal v = log_xi;
            for (int i = 1; i < depth_; ++i) {
                if (v <= 1) return 0;
                v = mp::log(v);
            }
            return v > 1 ? mp::log(v) : ExtReal(0);
        }
        case Kind::Power:
            if (log_xi < -40) return param_ * mp::log1p(mp::exp(log_xi));
            return param_ * (log_xi + mp::log1p(mp::exp(-log_xi)));
        case Kind::Constant: return -mp::log(param_);
        case Kind::Table: {
            const std::size_t m = log_xi_.size();
            if (log_xi <= log_xi_[0]) return neg_log_phi_[0];
            std::size_t i = 1;
            while (i < m - 1 && log_xi > log_xi_[i]) ++i;
            // Segment [i-1, i]; past the end this extrapolates the last one.
            const ExtReal slope = (neg_log_phi_[i] - neg_log_phi_[i - 1]) / (log_xi_[i] - log_xi_[i - 1]);
            return mp::fmax(ExtReal(0), neg_log_phi_[i - 1] + slope * (log_xi - log_xi_[i - 1]));
        }
    }
    return 0;
}

Tower DecayFunction::neg_log_at_log(const Tower& log_xi) const {
    if (auto v = log_xi.value(); v && *v <= plain_limit()) return Tower(neg_log_at_log(*v));
    switch (kind_) {
        case Kind::Log10: return log_xi.multiply(1 / ln10()).log();
        case Kind::IteratedLog: {
            Tower v = log_xi;
            for (int i = 0; i < depth_; ++i) v = v.log();
            return v;
        }
        case Kind::Power: return log_xi.multiply(param_);
        case Kind::Constant: return Tower(-mp::log(param_));
        case Kind::Table: {
            const std::size_t m = log_xi_.size();
            const ExtReal slope = (neg_log_phi_[m - 1] - neg_log_phi_[m - 2]) / (log_xi_[m - 1] - log_xi_[m - 2]);
            return log_xi.multiply(slope).add(neg_log_phi_[m - 1] - slope * log_xi_[m - 1]);
        }
    }
    return Tower();
}

ExtReal DecayFunction::neg_log_at_pow10(const ExtReal& L) const { return neg_log_at_log(L * ln10()); }

long double DecayFunction::operator()(long double xi) const {
    if (xi < 0) throw ValidationError("phi is defined on [0, inf)");
    if (kind_ == Kind::Constant) return to_ld(param_);
    if (kind_ == Kind::Power) return std::pow(1 + xi, -to_ld(param_));
    if (xi == 0) return kind_ == Kind::Table ? to_ld(mp::exp(-neg_log_phi_[0])) : 1.0L;
    return to_ld(mp::exp(-neg_log_at_log(mp::log(ExtReal(xi)))));
}

std::optional<Tower> DecayFunction::log_threshold(const Tower& target) const {
    switch (kind_) {
        case Kind::Log10: return target.exp().multiply(ln10());
        case Kind::IteratedLog: {
            Tower v = target;
            for (int i = 0; i < depth_; ++i) v = v.exp();
            return v;
        }
        case Kind::Power: {
            if (auto g = target.value(); g && *g / param_ <= 1e6) {
                const ExtReal xi = mp::expm1(*g / param_);
                if (xi <= 1) return std::nullopt;
                return Tower(mp::log(xi));
            }
            return target.multiply(1 / param_);
        }
        case Kind::Constant:
            if (compare(target, Tower(-mp::log(param_))) == Certainty::Greater)
                throw Infeasible("unbounded-phi: constant phi " + format_ext(param_, 20) +
                                 " never reaches the required level");
            return std::nullopt;
        case Kind::Table: {
            const std::size_t m = log_xi_.size();
            const ExtReal slope = (neg_log_phi_[m - 1] - neg_log_phi_[m - 2]) / (log_xi_[m - 1] - log_xi_[m - 2]);
            const auto g = target.value();
            if (!g || *g > plain_limit())
                return target.add(-neg_log_phi_[m - 1]).multiply(1 / slope).add(log_xi_[m - 1]);
            ExtReal lambda;
            if (neg_log_phi_[m - 1] < *g) {
                lambda = log_xi_[m - 1] + (*g - neg_log_phi_[m - 1]) / slope;
            } else {
                std::size_t i = m - 1;
                while (i > 0 && neg_log_phi_[i - 1] >= *g) --i;
                if (i == 0) return std::nullopt;
                lambda = log_xi_[i - 1] + (*g - neg_log_phi_[i - 1]) * (log_xi_[i] - log_xi_[i - 1]) /
                                              (neg_log_phi_[i] - neg_log_phi_[i - 1]);
            }
            if (lambda <= 0) return std::nullopt;
            return Tower(lambda);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- envelope

Tower MonotoneEnvelope::breakpoint(std::size_t n) const {
    if (n == 0) return Tower(ExtReal(0));
    if (n > breakpoints_.size()) throw std::out_of_range("envelope breakpoint index");
    return breakpoints_[n - 1];
}

ExtReal MonotoneEnvelope::operator()(const ExtReal& xi) const {
    if (xi < 0) throw ValidationError("psi is defined on [0, inf)");
    const Tower tx(xi);
    std::size_t n = 1;
    while (n <= breakpoints_.size() && compare(tx, breakpoints_[n - 1]) == Certainty::Greater) ++n;
    if (n > breakpoints_.size()) throw ValidationError("xi lies beyond the last envelope breakpoint");
    const ExtReal a = breakpoint(n - 1).value().value();
    const Tower b = breakpoints_[n - 1];
    ExtReal fraction;
    if (auto bv = b.value()) {
        fraction = (xi - a) / (*bv - a);
    } else if (xi <= a) {
        fraction = 0;
    } else {
        // b - a is b to within a relative e^-1e8; only ln b is needed.
        const Tower lb = b.log();
        fraction = lb.is_plain() ? mp::exp(mp::log(xi - a) - lb.top()) : ExtReal(0);
    }
    fraction = mp::fmin(ExtReal(1), mp::fmax(ExtReal(0), fraction));
    const ExtReal hi = mp::ldexp(ExtReal(1), -static_cast<int>(n - 1));
    return hi - hi / 2 * fraction;
}

long double MonotoneEnvelope::operator()(long double xi) const { return to_ld((*this)(ExtReal(xi))); }

MonotoneEnvelope monotone_envelope(const DecayFunction& phi, std::size_t count) {
    if (count == 0) throw ValidationError("envelope needs at least one breakpoint");
    std::vector<Tower> points;
    for (std::size_t n = 1; n <= count; ++n) {
        const Tower target(ExtReal(static_cast<long>(n + 2)) * ln3());
        std::optional<Tower> lambda;
        try {
            lambda = phi.log_threshold(target);
        } catch (const Infeasible& e) {
            throw ValidationError(std::string("cannot-envelope: ") + e.what());
        }
        const Tower from_phi = lambda ? lambda->exp() : Tower(ExtReal(1));
        const Tower floor_point(ExtReal(to_string(Integer(pow_int(3, n + 2) - 1)).c_str()));
        Tower xi = compare(from_phi, floor_point) == Certainty::Greater ? from_phi : floor_point;
        if (!points.empty() && compare(xi, points.back()) != Certainty::Greater) xi = points.back().multiply(2);
        points.push_back(xi);
    }
    return MonotoneEnvelope(std::move(points));
}

EnvelopeCheck check_envelope(const MonotoneEnvelope& env, const DecayFunction& phi, int samples_per_piece) {
    EnvelopeCheck out;
    for (std::size_t n = 1; n <= env.size(); ++n) {
        const Tower a = env.breakpoint(n - 1), b = env.breakpoint(n);
        if (compare(a, b) != Certainty::Less) out.strictly_increasing = false;
        // Endpoint: 1 + xi_n >= 2^n.
        if (compare(b.add(1), Tower(mp::ldexp(ExtReal(1), static_cast<int>(n)))) == Certainty::Less)
            out.dominates_inverse = false;
        if (auto bv = b.value(); bv && *bv < ExtReal("1e300")) {
            const ExtReal av = a.value().value();
            for (int s = 0; s <= samples_per_piece; ++s) {
                const ExtReal xi = av + (*bv - av) * s / samples_per_piece;
                if (env(xi) < 1 / (1 + xi)) out.dominates_inverse = false;
            }
        }
        // sup_{[xi_n, xi_{n+1}]} phi / psi <= sup_{xi >= xi_n} phi / 2^-(n+1).
        ExtReal sup_phi;
        if (phi.monotone()) {
            const Tower nl = phi.neg_log_at_log(b.log());
            sup_phi = nl.is_plain() ? mp::exp(-nl.top()) : ExtReal(0);
        } else {
            sup_phi = mp::pow(ExtReal(3), -static_cast<long>(n + 2));
        }
        const ExtReal ratio = sup_phi * mp::ldexp(ExtReal(1), static_cast<int>(n + 1));
        out.tail_ratio.push_back(to_ld(ratio));
        const ExtReal proven = mp::ldexp(ExtReal(1), static_cast<int>(n + 1)) * mp::pow(ExtReal(3), -static_cast<long>(n + 2));
        if (ratio > proven * (1 + ExtReal("1e-40"))) out.tail_ratio_decays = false;
    }
    return out;
}

// ---------------------------------------------------------------- choose_L

bool choose_L_holds(const Integer& n, const Integer& L, const DecayFunction& phi) {
    const ExtReal target = log_two_over_c() + ExtReal(n.get_str()) * ln3();
    return phi.neg_log_at_pow10(ExtReal(L.get_str())) >= target;
}

HugeNat choose_L(const HugeNat& n, const DecayFunction& phi, const ChooseLOptions& options) {
    if (n.is_exact() && n.exact() < 1) throw ValidationError("choose_L needs n >= 1");
    const Tower target = n.approx().multiply(ln3()).add(log_two_over_c());

    if (phi.kind() == DecayFunction::Kind::Table) {
        if (!n.is_exact() || !target.is_plain())
            throw Infeasible("unbounded-phi: table phi cannot reach level c 3^-n / 2 within the scan cap");
        for (long L = 1; L <= options.scan_cap; ++L)
            if (choose_L_holds(n.exact(), Integer(L), phi)) return HugeNat(Integer(L));
        throw Infeasible("unbounded-phi: no L <= " + std::to_string(options.scan_cap) +
                         " satisfies c 3^-n >= 2 phi(10^L)");
    }

    const auto lambda = phi.log_threshold(target);
    if (!lambda) return HugeNat(Integer(1));
    const Tower real_L = lambda->multiply(1 / ln10());
    const auto v = real_L.value();
    if (!v || *v > plain_limit() || !n.is_exact()) return HugeNat(real_L, 1);

    Integer L = floor_to_integer(*v) + 1;
    if (L < 1) L = 1;
    // The threshold is accurate to ~80 digits; settle the last unit directly.
    for (int guard = 0; L > 1 && choose_L_holds(n.exact(), L - 1, phi); ++guard) {
        if (guard > 4) throw std::logic_error("choose_L: threshold inversion is off");
        --L;
    }
    for (int guard = 0; !choose_L_holds(n.exact(), L, phi); ++guard) {
        if (guard > 4) throw std::logic_error("choose_L: threshold inversion is off");
        ++L;
    }
    return HugeNat(std::move(L));
}

HugeNat choose_L(long n, const DecayFunction& phi, const ChooseLOptions& options) {
    return choose_L(HugeNat(Integer(n)), phi, options);
}

// ---------------------------------------------------------------- schedule

namespace {

// L + log10(4 pi) + (-ln phi(10^L)) / ln 10, the level k_{m+1} must exceed.
Tower next_k_bound(const HugeNat& L, const DecayFunction& phi) {
    if (L.is_exact() && mpz_sizeinbase(L.exact().get_mpz_t(), 10) < 60) {
        const ExtReal Lr(L.exact().get_str());
        return Tower(Lr + log10_four_pi() + phi.neg_log_at_pow10(Lr) / ln10());
    }
    const Tower Lt = L.approx();
    const Tower nl = phi.neg_log_at_log(Lt.multiply(ln10()));
    Tower b = Lt.add(log10_four_pi());
    if (nl.is_plain()) return b.add(nl.top() / ln10());
    return sum(b, nl.multiply(1 / ln10()));
}

void certify(ScheduleEntry& e, const HugeNat& next, const DecayFunction& phi) {
    const HugeNat& k = e.k;
    const HugeNat& L = e.L;
    if (k.is_exact() && next.is_exact()) {
        e.doubling_certified = next.exact() > 2 * k.exact();
    } else {
        e.doubling_certified = compare(next.approx(), k.approx().multiply(2)) == Certainty::Greater;
    }

    const bool small_L = L.is_exact() && mpz_sizeinbase(L.exact().get_mpz_t(), 10) < 60;
    if (small_L && next.is_exact()) {
        const Integer gap = next.exact() - L.exact();
        if (phi.kind() == DecayFunction::Kind::Log10) {
            // phi(10^L) = 1/L: need 4 pi L 10^L < 10^k, i.e. 4 pi L < 10^(k - L).
            e.method = "exact";
            if (gap <= 0) {
                e.membership_certified = false;
            } else if (gap > 80) {
                e.membership_certified = true;
            } else {
                const Rational lhs = 4 * pi_upper() * Rational(L.exact());
                e.membership_certified = lhs < Rational(pow_int(10, gap.get_ui()));
            }
        } else {
            e.method = "log-domain";
            const ExtReal Lr(L.exact().get_str());
            const ExtReal lhs = ExtReal(next.exact().get_str()) * ln10();
            const ExtReal rhs = mp::log(4 * ext_pi()) + Lr * ln10() + phi.neg_log_at_pow10(Lr);
            e.membership_certified = lhs - rhs > mp::fabs(rhs) * ExtReal("1e-60") + ExtReal("1e-60");
        }
        return;
    }
    e.method = "tower";
    const Tower bound = next_k_bound(L, phi);
    if (!next.is_exact() && next.offset() >= 1 && next.base().height() == bound.height() &&
        next.base().top() == bound.top()) {
        // next = floor(bound) + 1 by construction.
        e.membership_certified = true;
    } else {
        e.membership_certified = compare(next.approx(), bound) == Certainty::Greater;
    }
}

HugeNat next_k(const HugeNat& k, const HugeNat& L, const DecayFunction& phi) {
    const Tower bound = next_k_bound(L, phi);
    if (k.is_exact()) {
        const Integer doubled = 2 * k.exact() + 1;
        if (auto v = bound.value(); v && *v <= plain_limit()) {
            const Integer from_bound = floor_to_integer(*v) + 1;
            return HugeNat(from_bound > doubled ? from_bound : doubled);
        }
    }
    const Tower doubled = k.approx().multiply(2);
    switch (compare(bound, doubled)) {
        case Certainty::Greater: return HugeNat(bound, 1);
        case Certainty::Less: return HugeNat(doubled, 1);
        case Certainty::Undecided: break;
    }
    throw BudgetExceeded("schedule: cannot order 2 k_m against the decay bound");
}

}  // namespace

bool LiouvilleSchedule::fully_certified() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const ScheduleEntry& e) { return e.doubling_certified && e.membership_certified; });
}

Rational LiouvilleSchedule::prefix(std::size_t m) const {
    if (m > prefix_terms) throw std::out_of_range("schedule prefix beyond materialized terms");
    Rational t = 0;
    for (std::size_t i = 1; i <= m; ++i) t += Rational(1, 1) / Rational(pow_int(10, k(i).exact().get_ui()));
    t.canonicalize();
    return t;
}

LiouvilleSchedule build_liouville_t(const DecayFunction& phi, std::size_t depth, const ScheduleOptions& options) {
    if (depth < 1) throw ValidationError("schedule depth must be >= 1");
    if (options.first_k < 1) throw ValidationError("first k must be >= 1");
    LiouvilleSchedule s;
    s.phi_name = phi.name();
    HugeNat k(Integer(options.first_k));
    for (std::size_t m = 1; m <= depth; ++m) {
        ScheduleEntry e;
        e.k = k;
        e.L = choose_L(k, phi, options.choose);
        if (e.L.approx().height() > options.max_tower_height)
            throw BudgetExceeded("schedule: L exceeds the tower budget; max feasible depth " + std::to_string(m - 1));
        const HugeNat next = next_k(k, e.L, phi);
        certify(e, next, phi);
        s.entries.push_back(e);
        k = next;
    }
    s.next_k = k;
    for (const auto& e : s.entries) {
        if (!e.k.is_exact() || e.k.exact() > options.prefix_digit_budget) break;
        ++s.prefix_terms;
    }
    s.t_prefix = s.prefix(s.prefix_terms);
    return s;
}

nlohmann::json huge_nat_to_json(const HugeNat& value) {
    if (value.is_exact()) return value.exact().get_str(10);
    return {{"tower_height", value.base().height()},
            {"tower_top", format_ext(value.base().top(), std::numeric_limits<ExtReal>::max_digits10)},
            {"offset", value.offset()}};
}

HugeNat huge_nat_from_json(const nlohmann::json& j) {
    if (j.is_string()) return HugeNat(parse_integer(j.get<std::string>()));
    if (j.is_number_integer()) return HugeNat(Integer(j.get<long>()));
    if (!j.is_object() || !j.contains("tower_height") || !j.contains("tower_top"))
        throw ValidationError("huge integer must be a decimal string or a tower object");
    const Tower base(j.at("tower_height").get<int>(), ExtReal(j.at("tower_top").get<std::string>()));
    return HugeNat(base, j.value("offset", 0L));
}

nlohmann::json liouville_to_json(const LiouvilleSchedule& schedule) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : schedule.entries) {
        entries.push_back({{"k", huge_nat_to_json(e.k)},
                           {"L", huge_nat_to_json(e.L)},
                           {"doubling_certified", e.doubling_certified},
                           {"membership_certified", e.membership_certified},
                           {"method", e.method}});
    }
    return {{"phi", schedule.phi_name},
            {"entries", entries},
            {"next_k", huge_nat_to_json(schedule.next_k)},
            {"prefix_terms", schedule.prefix_terms},
            {"t_prefix", to_decimal_string(schedule.t_prefix)}};
}

LiouvilleSchedule liouville_from_json(const nlohmann::json& j) {
    try {
        LiouvilleSchedule s;
        s.phi_name = j.at("phi").get<std::string>();
        for (const auto& e : j.at("entries")) {
            ScheduleEntry entry;
            entry.k = huge_nat_from_json(e.at("k"));
            entry.L = huge_nat_from_json(e.at("L"));
            entry.doubling_certified = e.value("doubling_certified", false);
            entry.membership_certified = e.value("membership_certified", false);
            entry.method = e.value("method", std::string());
            s.entries.push_back(std::move(entry));
        }
        if (s.entries.empty()) throw ValidationError("schedule has no entries");
        s.next_k = huge_nat_from_json(j.at("next_k"));
        s.prefix_terms = j.value("prefix_terms", std::size_t{0});
        if (s.prefix_terms > s.entries.size()) throw ValidationError("prefix_terms exceeds the schedule depth");
        for (std::size_t m = 1; m <= s.prefix_terms; ++m)
            if (!s.k(m).is_exact()) throw ValidationError("prefix term with a non-exact k");
        s.t_prefix = s.prefix(s.prefix_terms);
        if (j.contains("t_prefix") && parse_rational(j.at("t_prefix").get<std::string>()) != s.t_prefix)
            throw ValidationError("t_prefix does not match the listed k values");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("schedule json: ") + e.what());
    }
}

bool recheck_schedule(const LiouvilleSchedule& schedule, const DecayFunction& phi) {
    for (std::size_t m = 1; m <= schedule.depth(); ++m) {
        ScheduleEntry e = schedule.entries[m - 1];
        const HugeNat& next = schedule.k(m + 1);
        const HugeNat L = choose_L(e.k, phi);
        if (L.is_exact() != e.L.is_exact()) return false;
        if (L.is_exact() ? L.exact() != e.L.exact() : compare(L.approx(), e.L.approx()) != Certainty::Undecided)
            return false;
        e.doubling_certified = e.membership_certified = false;
        certify(e, next, phi);
        if (!e.doubling_certified || !e.membership_certified) return false;
    }
    return true;
}

// ---------------------------------------------------------------- verification

LowerBoundReport verify_lower_bound(const Rational& t, unsigned n, const Integer& L, const DecayFunction* phi,
                                    const VerifyOptions& options) {
    if (L < 0) throw ValidationError("L must be non-negative");
    if (L > options.max_L_eval)
        throw BudgetExceeded("L = " + L.get_str() + " exceeds the evaluation cap " + std::to_string(options.max_L_eval));
    LowerBoundReport r;
    r.t = to_decimal_string(t);
    r.L = L.get_str();
    r.slack = options.slack;
    const auto v = ft_mu_t(t, ExactFrequency::power(10, L.get_ui()), options.tol);
    r.modulus = v.modulus();
    r.err = v.err;
    bool ok = true, any = false;
    const Rational scaled = t * Rational(pow_int(10, n));
    if (scaled.get_den() == 1 && L > n) {
        r.lemma_bound = to_ld(constant_c().ext * mp::pow(ExtReal(3), -static_cast<long>(n)));
        ok = ok && r.modulus - r.err >= *r.lemma_bound - r.slack;
        any = true;
    }
    if (phi) {
        r.phi_bound = to_ld(mp::exp(-phi->neg_log_at_pow10(ExtReal(L.get_str()))));
        ok = ok && r.modulus - r.err >= *r.phi_bound - r.slack;
        any = true;
    }
    r.pass = ok && any;
    return r;
}

std::vector<IndexVerification> verify_schedule(const LiouvilleSchedule& schedule, const DecayFunction& phi,
                                               const VerifyOptions& options, unsigned jobs) {
    auto run = [&](std::size_t m) {
        IndexVerification iv;
        iv.index = m;
        const ScheduleEntry& e = schedule.entries[m - 1];
        if (m > schedule.prefix_terms || !e.L.is_exact() || e.L.exact() > options.max_L_eval) return iv;
        iv.evaluated = true;
        const Integer& L = e.L.exact();
        const unsigned long k_m = e.k.exact().get_ui();
        VerifyOptions strict = options;
        strict.slack = 0;
        LowerBoundReport r = verify_lower_bound(schedule.prefix(m), static_cast<unsigned>(k_m), L, &phi, strict);
        // |t - prefix_m| < 2 10^-k_{m+1}; the map t -> mu_hat_t(xi) is 2 pi |xi|-Lipschitz.
        const HugeNat& next = schedule.k(m + 1);
        ExtReal log_penalty = mp::log(4 * ext_pi()) + ExtReal(L.get_str()) * ln10();
        if (next.is_exact()) log_penalty -= ExtReal(next.exact().get_str()) * ln10();
        else log_penalty = ExtReal(-1e6);
        const long double penalty = to_ld(mp::exp(log_penalty));
        r.tail_penalty = penalty > 0 ? penalty : std::numeric_limits<long double>::denorm_min();
        r.pass = r.phi_bound && r.modulus - r.err - r.tail_penalty >= *r.phi_bound;
        iv.report = r;
        return iv;
    };
    const std::size_t depth = schedule.depth();
    std::vector<IndexVerification> out(depth);
    const unsigned workers = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
    if (workers <= 1) {
        for (std::size_t m = 1; m <= depth; ++m) out[m - 1] = run(m);
        return out;
    }
    std::vector<std::future<IndexVerification>> futures;
    for (std::size_t m = 1; m <= depth; ++m) futures.push_back(std::async(std::launch::async, run, m));
    for (std::size_t m = 1; m <= depth; ++m) out[m - 1] = futures[m - 1].get();
    return out;
}

std::string to_string(RajchmanStatus s) {
    switch (s) {
        case RajchmanStatus::Rajchman: return "rajchman";
        case RajchmanStatus::NonRajchman: return "non-rajchman";
        case RajchmanStatus::Unknown: return "unknown";
    }
    return "unknown";
}

RajchmanStatus rajchman_status_mu_t(const Rational& t) {
    Rational q = t;
    q.canonicalize();
    Integer den = q.get_den();
    for (long p : {2L, 5L})
        while (mpz_divisible_ui_p(den.get_mpz_t(), p)) den /= p;
    return den == 1 ? RajchmanStatus::NonRajchman : RajchmanStatus::Unknown;
}

RajchmanStatus rajchman_status_mu_t(const LiouvilleSchedule& schedule) {
    return schedule.fully_certified() ? RajchmanStatus::Rajchman : RajchmanStatus::Unknown;
}

Certainty loglog_tower_rule(int n) {
    if (n < 1) throw ValidationError("tower rule needs n >= 1");
    // With m = 10^^n and L = 10^^(n+2) = 10^(10^^(n+1)):
    //   -ln phi(10^L) = ln ln(L ln 10) = m ln 10 + ln(ln 10 + ln ln 10 / 10^^(n+1)) > m ln 10 + ln ln 10,
    //   the required level is m ln 3 + ln(2/c).
    // Both are affine in m, so the gap is (ln 10 - ln 3) m + ln ln 10 - ln(2/c) with m >= 10.
    const ExtReal slope = ln10() - ln3();
    const ExtReal offset = mp::log(ln10()) - log_two_over_c();
    return slope > 0 && slope * 10 + offset > 0 ? Certainty::Greater : Certainty::Undecided;
}

}  // namespace slowft
