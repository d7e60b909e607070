#include "slowft/smoothmaps.hpp"

#include "slowft/errors.hpp"
#include "slowft/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace slowft {
namespace {

namespace bmp = boost::multiprecision;

const ExtReal& ln2() {
    static const ExtReal v = bmp::log(ExtReal(2));
    return v;
}

// Error bound for a log-magnitude assembled from a handful of ExtReal ops.
ExtReal op_err(const ExtReal& scale) {
    static const ExtReal ulp = bmp::ldexp(ExtReal(1), -250);
    return (1 + bmp::abs(scale)) * ulp;
}

LogDomainReal ld(const ExtReal& v) { return LogDomainReal(v); }
LogDomainReal ld(long double v) { return LogDomainReal(v); }

// Lower bound of a positive quantity as an exact representative.
LogDomainReal lower_rep(const LogDomainReal& v) {
    if (v.sign() <= 0) throw ValidationError("lower_rep needs a positive value");
    return LogDomainReal::from_log(1, v.logmag() - v.log_err());
}

LogDomainReal halved_exact(const LogDomainReal& cap) {
    const LogDomainReal low = lower_rep(cap);
    return LogDomainReal::from_log(1, low.logmag() - ln2(), op_err(low.logmag()));
}

// Adaptive Simpson for A(eps) = int phi and B(eps) = int v phi over [0, V].
struct Quad {
    long double a = 0, b = 0;
    long double err_a = 0, err_b = 0;
};

long double phi_at(long double eps, long double v) {
    const long double den = 1.0L - eps * v / 2.0L;
    if (den <= 0) return 0;
    return std::exp(-v * (1.0L - eps * v / 4.0L) / (den * den));
}

struct Simpson {
    long double eps;
    long double tol;
    long double err_a = 0, err_b = 0;

    void run(long double lo, long double hi, long double flo, long double fmid, long double fhi, long double whole_a,
             long double whole_b, int depth, long double& acc_a, long double& acc_b) {
        const long double mid = (lo + hi) / 2, h = hi - lo;
        const long double lm = (lo + mid) / 2, rm = (mid + hi) / 2;
        const long double flm = phi_at(eps, lm), frm = phi_at(eps, rm);
        const long double left_a = h / 12 * (flo + 4 * flm + fmid);
        const long double right_a = h / 12 * (fmid + 4 * frm + fhi);
        const long double left_b = h / 12 * (lo * flo + 4 * lm * flm + mid * fmid);
        const long double right_b = h / 12 * (mid * fmid + 4 * rm * frm + hi * fhi);
        const long double da = left_a + right_a - whole_a, db = left_b + right_b - whole_b;
        if (depth <= 0 || (std::fabs(da) <= 15 * tol * h && std::fabs(db) <= 15 * tol * h)) {
            acc_a += left_a + right_a + da / 15;
            acc_b += left_b + right_b + db / 15;
            err_a += std::fabs(da) / 15;
            err_b += std::fabs(db) / 15;
            return;
        }
        run(lo, mid, flo, flm, fmid, left_a, left_b, depth - 1, acc_a, acc_b);
        run(mid, hi, fmid, frm, fhi, right_a, right_b, depth - 1, acc_a, acc_b);
    }
};

Quad integrate_profile(long double eps) {
    static std::mutex mutex;
    static std::map<long double, Quad> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(eps); it != cache.end()) return it->second;
    }
    const long double cut = std::min(2.0L / eps, 200.0L);
    Simpson s{eps, 1e-15L};
    // Split so the fast decay near 0 and the long tail get separate panels.
    Quad q;
    long double lo = 0;
    for (long double hi : {1.0L, 4.0L, 16.0L, 64.0L, 200.0L}) {
        const long double top = std::min(hi, cut);
        if (top <= lo) break;
        const long double flo = phi_at(eps, lo), fhi = phi_at(eps, top), fmid = phi_at(eps, (lo + top) / 2);
        const long double h = top - lo, mid = (lo + top) / 2;
        s.run(lo, top, flo, fmid, fhi, h / 6 * (flo + 4 * fmid + fhi), h / 6 * (lo * flo + 4 * mid * fmid + top * fhi),
              30, q.a, q.b);
        lo = top;
    }
    // phi(v) <= e^{-v/2} past the cut while eps v <= 2.
    const long double tail_a = cut < 2.0L / eps ? 2.0L * std::exp(-cut / 2) : 0.0L;
    const long double tail_b = cut < 2.0L / eps ? (2.0L * cut + 4.0L) * std::exp(-cut / 2) : 0.0L;
    q.err_a = s.err_a + tail_a + 64 * std::numeric_limits<long double>::epsilon() * q.a;
    q.err_b = s.err_b + tail_b + 64 * std::numeric_limits<long double>::epsilon() * q.b;
    std::lock_guard lock(mutex);
    if (cache.size() > 200000) cache.clear();
    cache.emplace(eps, q);
    return q;
}

ExtReal parse_ext(const nlohmann::json& j) { return ExtReal(j.get<std::string>()); }

nlohmann::json ld_to_json(const LogDomainReal& v) {
    return {{"sign", v.sign()}, {"logmag", format_ext(v.logmag(), 80)}, {"log_err", format_ext(v.log_err(), 20)}};
}

LogDomainReal ld_from_json(const nlohmann::json& j) {
    return LogDomainReal::from_log(j.at("sign").get<int>(), parse_ext(j.at("logmag")), parse_ext(j.at("log_err")));
}

InequalityCheck make_check(std::string name, std::size_t n, std::size_t j, const ExtReal& margin,
                           const ExtReal& required) {
    InequalityCheck c{std::move(name), n, j, margin, required, false};
    c.pass = required > 0 ? margin >= required : margin > 0;
    return c;
}

// Half-cap rule tolerance: the stored values are exact, so only rounding of
// the recomputed right-hand side eats into ln 2.
ExtReal half_cap_required() { return ln2() - ExtReal("1e-25"); }

}  // namespace

LogDomainReal bump(const ExtReal& s, int order) {
    if (order < 0 || order > 2) throw ValidationError("bump order must be 0, 1 or 2");
    if (s <= 0) return {};
    const ExtReal inv2 = 1 / (s * s);
    const ExtReal ls = bmp::log(s);
    switch (order) {
        case 0:
            return LogDomainReal::from_log(1, -inv2, op_err(inv2));
        case 1:
            return LogDomainReal::from_log(1, ln2() - 3 * ls - inv2, op_err(inv2 + ls));
        default: {
            const ExtReal k = 2 - 3 * s * s;
            if (k == 0) return {};
            return LogDomainReal::from_log(k > 0 ? 1 : -1, ln2() - 6 * ls + bmp::log(bmp::abs(k)) - inv2,
                                           op_err(inv2 + ls) + op_err(0) / bmp::abs(k));
        }
    }
}

LogDomainReal bump_integral(const ExtReal& d, int times) {
    if (times != 1 && times != 2) throw ValidationError("bump_integral times must be 1 or 2");
    if (d <= 0) return {};
    const long double eps = static_cast<long double>(d * d);
    const Quad q = integrate_profile(eps);
    const long double value = times == 1 ? q.a : q.b;
    const long double err = times == 1 ? q.err_a : q.err_b;
    if (!(value > err)) throw BudgetExceeded("bump integral quadrature lost all accuracy");
    // eps is rounded to long double; d(A)/d(eps) is O(1) so the shift is O(ulp).
    const long double rel = err / (value - err) + 4 * std::numeric_limits<long double>::epsilon();
    const LogDomainReal scale = ld(d * d * d / 2);
    LogDomainReal out = bump(d, 0) * (times == 1 ? scale : scale * scale) * ld(value);
    return out.with_extra_error(ExtReal(std::log1p(rel)));
}

DecayRate DecayRate::exponential() { return {"exp", [](const ExtReal& xi) { return xi; }}; }

DecayRate DecayRate::from_envelope(MonotoneEnvelope envelope, std::string name) {
    auto env = std::make_shared<const MonotoneEnvelope>(std::move(envelope));
    return {std::move(name), [env](const ExtReal& xi) { return -bmp::log((*env)(xi)); }};
}

DecayRate DecayRate::parse(std::string_view text) {
    if (text == "exp") return exponential();
    constexpr std::string_view prefix = "envelope:";
    if (text.substr(0, prefix.size()) == prefix) {
        const auto phi = DecayFunction::parse(text.substr(prefix.size()));
        return from_envelope(monotone_envelope(phi, 24), std::string(text));
    }
    throw ValidationError("unknown decay rate '" + std::string(text) + "' (use exp or envelope:<phi>)");
}

ExtReal radius_at(const DecayRate& psi, const ExtReal& xi) {
    const ExtReal L = psi.neg_log(xi);
    if (!(L > bmp::exp(ExtReal(1)))) throw ValidationError("radius needs -ln psi(xi) > e");
    return bmp::exp(-L / bmp::log(L));
}

std::string to_string(ScheduleVariant v) {
    return v == ScheduleVariant::LemmaFix ? "lemma-fix" : "prop-pushforward";
}

ScheduleVariant parse_schedule_variant(std::string_view text) {
    if (text == "lemma-fix") return ScheduleVariant::LemmaFix;
    if (text == "prop-pushforward") return ScheduleVariant::PropPushforward;
    throw ValidationError("unknown schedule variant '" + std::string(text) + "'");
}

BumpSchedule build_schedule(const DecayRate& psi, ScheduleVariant variant, std::size_t n_terms,
                            const BuildScheduleOptions& options) {
    if (n_terms < 1) throw ValidationError("schedule needs at least one term");
    if (!(options.first_neg_log > bmp::exp(ExtReal(1)))) throw ValidationError("first_neg_log must exceed e");
    if (!(options.initial_step > 0)) throw ValidationError("initial_step must be positive");

    BumpSchedule s;
    s.variant = variant;
    s.psi_name = psi.name;

    // xi_1 by doubling then bisection.
    ExtReal lo = 0, hi = 1;
    for (int k = 0; psi.neg_log(hi) < options.first_neg_log; ++k) {
        if (k > 400) throw Infeasible("schedule index 1: psi never drops below the starting level");
        lo = hi;
        hi *= 2;
    }
    for (int k = 0; k < 300; ++k) {
        const ExtReal mid = (lo + hi) / 2;
        (psi.neg_log(mid) >= options.first_neg_log ? hi : lo) = mid;
    }
    s.xi.push_back(hi);
    s.r.push_back(radius_at(psi, hi));

    ExtReal step = options.initial_step;
    std::optional<ExtReal> prev_log_ratio;
    for (std::size_t n = 1; n <= n_terms + 1; ++n) {
        const ExtReal& xn = s.xi.back();
        const ExtReal rn = s.r.back();
        const ExtReal allowed = bmp::exp(-1 / rn) / 2;
        const ExtReal shrink = prev_log_ratio ? bmp::log(ExtReal(n) / ExtReal(n + 1)) : ExtReal(0);
        for (int h = 0;; ++h) {
            if (h > options.max_halvings) {
                throw Infeasible("schedule index " + std::to_string(n + 1) +
                                 ": r-spacing and xi-density could not both be met");
            }
            const ExtReal cand = xn + step;
            if (cand == xn) {
                throw Infeasible("schedule index " + std::to_string(n + 1) + ": step fell below ExtReal precision");
            }
            const ExtReal rc = radius_at(psi, cand);
            const ExtReal dr = rn - rc;
            const ExtReal log_ratio = bmp::log(step) + psi.neg_log(cand);
            const bool spacing = dr > 0 && dr <= allowed;
            const bool density = !prev_log_ratio || log_ratio <= *prev_log_ratio + shrink;
            if (spacing && density) {
                s.xi.push_back(cand);
                s.r.push_back(rc);
                prev_log_ratio = log_ratio;
                break;
            }
            step /= 2;
        }
    }

    s.y.push_back(LogDomainReal::from_log(1, bmp::log(ExtReal("0.01") * std::min(ExtReal(1), ExtReal(1 / s.xi_at(2))))));
    const LogDomainReal hundredth = ld(ExtReal("0.01"));
    for (std::size_t n = 1; n <= n_terms; ++n) {
        LogDomainReal cap = LogDomainReal::from_log(1, -ExtReal(n) * ln2());
        for (std::size_t j = 1; j <= n; ++j) {
            const LogDomainReal window = LogDomainReal::from_log(1, -ExtReal(n + 1 - j) * ln2()) * s.y_at(j) /
                                         bump(s.r_at(j) - s.r_at(n + 1), 0);
            cap = min(cap, lower_rep(window));
        }
        s.c.push_back(halved_exact(cap));

        const LogDomainReal& cn = s.c.back();
        const ExtReal rn = s.r_at(n), rn1 = s.r_at(n + 1);
        const LogDomainReal root = hundredth * (cn * bump(rn - rn1, 0)).pow(1 / rn);
        LogDomainReal ycap = lower_rep(root);
        if (variant == ScheduleVariant::LemmaFix) {
            ycap = min(ycap, lower_rep(hundredth / ld(s.xi_at(n + 2))));
            const LogDomainReal dbl = ld(ExtReal("0.02")) * cn * bump_integral(rn - rn1, 2) / ld(rn1 * rn1);
            ycap = min(ycap, lower_rep(dbl));
        } else {
            ycap = min(ycap, lower_rep(hundredth / ld(s.xi_at(n + 1))));
            ycap = min(ycap, lower_rep(hundredth * ld(rn1).pow(1 / rn1)));
        }
        s.y.push_back(halved_exact(ycap));
    }
    return s;
}

std::vector<InequalityCheck> audit_schedule(const BumpSchedule& s, const DecayRate& psi) {
    const std::size_t N = s.terms();
    if (s.xi.size() != N + 2 || s.r.size() != N + 2 || s.y.size() != N + 1) {
        throw ValidationError("schedule arrays have inconsistent lengths");
    }
    const ExtReal need = half_cap_required();
    const LogDomainReal hundredth = ld(ExtReal("0.01"));
    std::vector<InequalityCheck> out;
    std::optional<ExtReal> prev_log_ratio;
    for (std::size_t n = 1; n <= N + 1; ++n) {
        const ExtReal dr = s.r_at(n) - s.r_at(n + 1);
        if (dr <= 0) {
            out.push_back(make_check("r-spacing", n, 0, ExtReal(-1), need));
        } else {
            const ExtReal margin = -1 / s.r_at(n) - bmp::log(dr) - op_err(1 / s.r_at(n));
            out.push_back(make_check("r-spacing", n, 0, margin, need));
        }
        const ExtReal log_ratio = bmp::log(s.xi_at(n + 1) - s.xi_at(n)) + psi.neg_log(s.xi_at(n + 1));
        if (prev_log_ratio) out.push_back(make_check("xi-density", n, 0, *prev_log_ratio - log_ratio, 0));
        prev_log_ratio = log_ratio;
    }
    for (std::size_t n = 1; n <= N; ++n) {
        const LogDomainReal& cn = s.c_at(n);
        out.push_back(make_check("c-cap", n, 0, log_margin(cn, LogDomainReal::from_log(1, -ExtReal(n) * ln2())), need));
        for (std::size_t j = 1; j <= n; ++j) {
            const LogDomainReal lhs = cn * bump(s.r_at(j) - s.r_at(n + 1), 0);
            const LogDomainReal rhs = LogDomainReal::from_log(1, -ExtReal(n + 1 - j) * ln2()) * s.y_at(j);
            out.push_back(make_check("c-window", n, j, log_margin(lhs, rhs), need));
        }
        const ExtReal rn = s.r_at(n), rn1 = s.r_at(n + 1);
        const LogDomainReal& yn1 = s.y_at(n + 1);
        out.push_back(make_check("y-root", n, 0, log_margin(yn1, hundredth * (cn * bump(rn - rn1, 0)).pow(1 / rn)), need));
        if (s.variant == ScheduleVariant::LemmaFix) {
            out.push_back(make_check("y-xi", n, 0, log_margin(yn1, hundredth / ld(s.xi_at(n + 2))), need));
            const LogDomainReal lhs = yn1 * ld(rn1 * rn1 / 2);
            const LogDomainReal rhs = hundredth * cn * bump_integral(rn - rn1, 2);
            out.push_back(make_check("y-double-integral", n, 0, log_margin(lhs, rhs), need));
        } else {
            out.push_back(make_check("y-xi", n, 0, log_margin(yn1, hundredth / ld(s.xi_at(n + 1))), need));
            out.push_back(make_check("y-radius", n, 0, log_margin(yn1, hundredth * ld(rn1).pow(1 / rn1)), need));
        }
    }
    return out;
}

bool ScheduleVerification::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const InequalityCheck& c) { return c.pass; });
}

std::vector<std::size_t> ScheduleVerification::failing_indices(const std::string& name) const {
    std::vector<std::size_t> out;
    for (const auto& c : checks)
        if (c.name == name && !c.pass) out.push_back(c.n);
    return out;
}

ScheduleVerification verify_schedule(const BumpSchedule& s, unsigned jobs) {
    const std::size_t N = s.terms();
    if (s.xi.size() != N + 2 || s.r.size() != N + 2 || s.y.size() != N + 1) {
        throw ValidationError("schedule arrays have inconsistent lengths");
    }
    // Sums at r_n, n = 1..N+1: built terms m = n..N, tails beyond N.
    struct Sums {
        LogDomainReal g_low, g_up, f_low, f_up;
    };
    std::vector<Sums> sums(N + 1);
    const bool lemma = s.variant == ScheduleVariant::LemmaFix;
    parallel_for(N + 1, jobs, [&](std::size_t i) {
        const std::size_t n = i + 1;
        const ExtReal rn = s.r_at(n);
        Sums out;
        for (std::size_t m = n; m <= N; ++m) {
            const ExtReal d = rn - s.r_at(m + 1);
            out.g_low += s.c_at(m) * bump(d, 0);
            if (lemma) out.f_low += s.c_at(m) * bump_integral(d, 2);
        }
        const LogDomainReal tail = LogDomainReal::from_log(1, -ExtReal(N + 1 - n) * ln2()) * s.y_at(n);
        out.g_up = out.g_low + tail;
        out.f_up = out.f_low + ld(rn * rn / 2) * tail;
        sums[i] = std::move(out);
    });

    ScheduleVerification v;
    const LogDomainReal hundredth = ld(ExtReal("0.01"));
    const std::string first = lemma ? "conclusion-1" : "conclusion-A";
    const std::string second = lemma ? "conclusion-2" : "conclusion-B";
    for (std::size_t n = 1; n <= N; ++n) {
        const Sums& at_n = sums[n - 1];
        const Sums& at_next = sums[n];
        v.checks.push_back(make_check(first, n, 0, log_margin(at_n.g_up, s.y_at(n)), 0));
        v.checks.push_back(
            make_check(second, n, 0, log_margin(at_next.g_up, hundredth * at_n.g_low.pow(1 / s.r_at(n))), 0));
        if (lemma) {
            v.checks.push_back(make_check("conclusion-3", n, 0, log_margin(at_next.f_up, hundredth * at_n.f_low), 0));
            v.checks.push_back(make_check("conclusion-4", n, 0, log_margin(ld(s.xi_at(n + 1)) * at_n.f_up, hundredth), 0));
        }
    }
    return v;
}

nlohmann::json schedule_to_json(const BumpSchedule& s) {
    nlohmann::json j;
    j["variant"] = to_string(s.variant);
    j["psi"] = s.psi_name;
    j["terms"] = s.terms();
    auto& xi = j["xi"] = nlohmann::json::array();
    auto& r = j["r"] = nlohmann::json::array();
    for (const auto& v : s.xi) xi.push_back(format_ext(v, 80));
    for (const auto& v : s.r) r.push_back(format_ext(v, 80));
    auto& c = j["c"] = nlohmann::json::array();
    auto& y = j["y"] = nlohmann::json::array();
    for (const auto& v : s.c) c.push_back(ld_to_json(v));
    for (const auto& v : s.y) y.push_back(ld_to_json(v));
    return j;
}

BumpSchedule schedule_from_json(const nlohmann::json& j) {
    try {
        BumpSchedule s;
        s.variant = parse_schedule_variant(j.at("variant").get<std::string>());
        s.psi_name = j.at("psi").get<std::string>();
        for (const auto& v : j.at("xi")) s.xi.push_back(parse_ext(v));
        for (const auto& v : j.at("r")) s.r.push_back(parse_ext(v));
        for (const auto& v : j.at("c")) s.c.push_back(ld_from_json(v));
        for (const auto& v : j.at("y")) s.y.push_back(ld_from_json(v));
        const std::size_t N = s.terms();
        if (s.xi.size() != N + 2 || s.r.size() != N + 2 || s.y.size() != N + 1) {
            throw ValidationError("schedule arrays have inconsistent lengths");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed schedule json: ") + e.what());
    }
}

SmoothMapSpec SmoothMapSpec::identity() { return {}; }

SmoothMapSpec SmoothMapSpec::affine(const Rational& a, const Rational& b) {
    SmoothMapSpec f;
    f.variant_ = Variant::Affine;
    f.a_ = a;
    f.b_ = b;
    return f;
}

SmoothMapSpec SmoothMapSpec::explicit_h() {
    SmoothMapSpec f;
    f.variant_ = Variant::ExplicitH;
    return f;
}

SmoothMapSpec SmoothMapSpec::x_plus_h() {
    SmoothMapSpec f;
    f.variant_ = Variant::ExplicitXPlusH;
    return f;
}

SmoothMapSpec SmoothMapSpec::poly_flat(int m) {
    if (m < 3) throw ValidationError("polyflat degree must be at least 3");
    SmoothMapSpec f;
    f.variant_ = Variant::PolyFlat;
    f.degree_ = m;
    return f;
}

SmoothMapSpec SmoothMapSpec::bump_sum(std::shared_ptr<const BumpSchedule> schedule) {
    if (!schedule) throw ValidationError("bump_sum needs a schedule");
    SmoothMapSpec f;
    f.variant_ = Variant::BumpSumG;
    f.schedule_ = std::move(schedule);
    return f;
}

SmoothMapSpec SmoothMapSpec::integrated(std::shared_ptr<const BumpSchedule> schedule, bool with_linear_term) {
    if (!schedule) throw ValidationError("integrated needs a schedule");
    SmoothMapSpec f;
    f.variant_ = Variant::IntegratedF;
    f.schedule_ = std::move(schedule);
    f.linear_ = with_linear_term;
    return f;
}

SmoothMapSpec SmoothMapSpec::parse(std::string_view text) {
    if (text == "identity") return identity();
    if (text == "h") return explicit_h();
    if (text == "x+h") return x_plus_h();
    if (text.substr(0, 7) == "affine:") {
        const auto rest = text.substr(7);
        const auto comma = rest.find(',');
        if (comma == std::string_view::npos) throw ValidationError("affine needs 'affine:a,b'");
        const Rational a = parse_rational(rest.substr(0, comma));
        if (a == 0) throw ValidationError("affine slope must be nonzero");
        return affine(a, parse_rational(rest.substr(comma + 1)));
    }
    if (text.substr(0, 9) == "polyflat:") {
        const Integer m = parse_integer(text.substr(9));
        if (m < 3 || m > 1000) throw ValidationError("polyflat degree must lie in [3, 1000]");
        return poly_flat(static_cast<int>(m.get_si()));
    }
    throw ValidationError("unknown map '" + std::string(text) + "' (identity, affine:a,b, h, x+h, polyflat:m)");
}

std::string SmoothMapSpec::name() const {
    switch (variant_) {
        case Variant::Identity: return "identity";
        case Variant::Affine: return "affine:" + to_string(a_) + "," + to_string(b_);
        case Variant::ExplicitH: return "h";
        case Variant::ExplicitXPlusH: return "x+h";
        case Variant::PolyFlat: return "polyflat:" + std::to_string(degree_);
        case Variant::BumpSumG: return "bumpsum:" + to_string(schedule_->variant);
        case Variant::IntegratedF:
            return std::string(linear_ ? "x+" : "") + "integrated:" + to_string(schedule_->variant);
    }
    return "?";
}

namespace {

// h(x) = exp(-exp(x^-2)) for x > 0.
LogDomainReal explicit_h_at(const ExtReal& x, int order) {
    if (x < 0) throw ValidationError("h is only defined for x >= 0");
    if (x == 0) return {};
    const ExtReal q = 1 / (x * x);
    if (q > 1e8) throw BudgetExceeded("h: x below 1e-4 leaves the representable range");
    const ExtReal E = bmp::exp(q);
    const ExtReal lx = bmp::log(x);
    const ExtReal base_err = op_err(E + q + lx);
    switch (order) {
        case 0:
            return LogDomainReal::from_log(1, -E, base_err);
        case 1:
            return LogDomainReal::from_log(1, ln2() - 3 * lx + q - E, base_err);
        default: {
            const ExtReal k = 4 * E - 6 * x * x - 4;
            if (k == 0) return {};
            return LogDomainReal::from_log(k > 0 ? 1 : -1, -E + q - 6 * lx + bmp::log(bmp::abs(k)),
                                           base_err + op_err(E) / bmp::abs(k));
        }
    }
}

// Truncated sum over the built terms; odd extension to x < 0.
LogDomainReal bump_sum_at(const BumpSchedule& s, const ExtReal& x, int order) {
    if (x < 0) {
        const LogDomainReal v = bump_sum_at(s, -x, order);
        return order == 1 ? v : -v;
    }
    LogDomainReal total;
    for (std::size_t n = 1; n <= s.terms(); ++n) total += s.c_at(n) * bump(x - s.r_at(n + 1), order);
    return total;
}

LogDomainReal integrated_at(const BumpSchedule& s, bool linear, const ExtReal& x, int order) {
    if (x < 0) {
        const LogDomainReal v = integrated_at(s, linear, -x, order);
        return order == 1 ? v : -v;
    }
    if (order == 2) return bump_sum_at(s, x, 0);
    LogDomainReal total;
    if (linear) total = order == 0 ? ld(x) : ld(ExtReal(1));
    const int times = order == 0 ? 2 : 1;
    for (std::size_t n = 1; n <= s.terms(); ++n) {
        const ExtReal d = x - s.r_at(n + 1);
        if (d > 0) total += s.c_at(n) * bump_integral(d, times);
    }
    return total;
}

}  // namespace

LogDomainReal SmoothMapSpec::eval(const ExtReal& x, int order) const {
    if (order < 0 || order > 2) throw ValidationError("derivative order must be 0, 1 or 2");
    switch (variant_) {
        case Variant::Identity:
            return order == 0 ? ld(x) : (order == 1 ? ld(ExtReal(1)) : LogDomainReal{});
        case Variant::Affine:
            if (order == 0) return ld(to_ext(a_) * x + to_ext(b_));
            return order == 1 ? ld(to_ext(a_)) : LogDomainReal{};
        case Variant::ExplicitH:
            return explicit_h_at(x, order);
        case Variant::ExplicitXPlusH:
            if (order == 0) return ld(x) + explicit_h_at(x, 0);
            if (order == 1) return ld(ExtReal(1)) + explicit_h_at(x, 1);
            return explicit_h_at(x, 2);
        case Variant::PolyFlat: {
            const int m = degree_;
            if (order == 0) return ld(x + bmp::pow(x, m));
            if (order == 1) return ld(1 + m * bmp::pow(x, m - 1));
            return ld(ExtReal(m) * (m - 1) * bmp::pow(x, m - 2));
        }
        case Variant::BumpSumG:
            return bump_sum_at(*schedule_, x, order);
        case Variant::IntegratedF:
            return integrated_at(*schedule_, linear_, x, order);
    }
    throw ValidationError("unknown map variant");
}

LogDomainReal eval_map(const SmoothMapSpec& f, const ExtReal& x, int order) { return f.eval(x, order); }

AffineContraction AffineContraction::from(const SimilarityMap& map) {
    return {to_ext(map.ratio()), to_ext(map.translation())};
}

ConjugateDerivatives conjugate_derivatives(const SmoothMapSpec& f, const AffineContraction& T, const ExtReal& x) {
    const LogDomainReal fx1 = f.eval(x, 1);
    if (fx1.is_zero()) throw ValidationError("singular-conjugation: f'(x) = 0 at x = " + format_ext(x, 20));
    const ExtReal tx = T(x);
    const LogDomainReal c = ld(T.ratio);
    ConjugateDerivatives out;
    out.y = f.eval(x, 0).to_ext();
    out.value = f.eval(tx, 0);
    const LogDomainReal q = f.eval(tx, 1) / fx1;
    out.d1 = c * q;
    out.d2 = c / (fx1 * fx1) * (c * f.eval(tx, 2) - q * f.eval(x, 2));
    return out;
}

namespace {

int certain_sign(const LogDomainReal& v, bool& uncertain) {
    uncertain = !v.sign_certain();
    return uncertain ? 0 : v.sign();
}

}  // namespace

ZeroScanReport zero_scan(const SmoothMapSpec& f, const AffineContraction& T, const ExtReal& lo, const ExtReal& hi,
                         int grid_n, const ZeroScanOptions& options, unsigned jobs) {
    if (grid_n < 1) throw ValidationError("grid size must be positive");
    if (!(lo < hi)) throw ValidationError("scan interval must have lo < hi");

    struct Sample {
        ExtReal x;
        int sign = 0;
        bool uncertain = false;
        bool skipped = false;
    };
    auto sample = [&](const ExtReal& x) {
        Sample s{x};
        if (x == 0) {
            s.skipped = true;
            return s;
        }
        s.sign = certain_sign(conjugate_derivatives(f, T, x).d2, s.uncertain);
        return s;
    };
    auto grid = [&](int n) {
        std::vector<Sample> out(static_cast<std::size_t>(n) + 1);
        parallel_for(out.size(), jobs, [&](std::size_t i) { out[i] = sample(lo + (hi - lo) * ExtReal(i) / n); });
        return out;
    };
    // Pairs of consecutive nonzero certain signs that differ.
    auto changes = [](const std::vector<Sample>& g) {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        std::optional<std::size_t> last;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g[i].skipped || g[i].uncertain || g[i].sign == 0) continue;
            if (last && g[*last].sign != g[i].sign) out.emplace_back(*last, i);
            last = i;
        }
        return out;
    };

    ZeroScanReport report;
    const auto coarse = grid(grid_n);
    for (const auto& s : coarse) {
        if (s.skipped) continue;
        if (s.uncertain) ++report.uncertain;
        else if (s.sign < 0) ++report.negative;
        else if (s.sign > 0) ++report.positive;
        else ++report.zero;
    }
    const auto pairs = changes(coarse);
    report.brackets.resize(pairs.size());
    const ExtReal width = options.bracket_width;
    parallel_for(pairs.size(), jobs, [&](std::size_t k) {
        Sample a = coarse[pairs[k].first], b = coarse[pairs[k].second];
        for (int it = 0; it < 200 && b.x - a.x > width; ++it) {
            const Sample m = sample((a.x + b.x) / 2);
            if (m.skipped || m.uncertain || m.sign == 0) break;
            (m.sign == a.sign ? a : b) = m;
        }
        report.brackets[k] = {a.x, b.x, f.eval(a.x, 0).to_ext(), f.eval(b.x, 0).to_ext()};
    });
    report.refined_count = changes(grid(4 * grid_n)).size();
    report.stable = report.refined_count == pairs.size();

    const ExtReal top = std::max(ExtReal(bmp::abs(lo)), ExtReal(bmp::abs(hi)));
    for (int k = 1; k <= options.near_zero_points; ++k) {
        const ExtReal x = top * bmp::ldexp(ExtReal(1), -k);
        if (x < lo || x > hi) continue;
        const Sample s = sample(x);
        report.near_zero.emplace_back(static_cast<long double>(x), s.uncertain ? 0 : s.sign);
    }
    return report;
}

SignThreshold find_sign_threshold(const SmoothMapSpec& f, const AffineContraction& zero_branch,
                                  const std::vector<AffineContraction>& other_branches, int max_index) {
    if (max_index < 1) throw ValidationError("max_index must be positive");
    const LogDomainReal fifth = ld(ExtReal("0.2"));
    auto holds = [&](int k) {
        const ExtReal x = bmp::ldexp(ExtReal(1), -k);
        const LogDomainReal gx = f.eval(x, 2);
        if (gx.sign() <= 0 || !gx.sign_certain()) return false;
        const LogDomainReal low = f.eval(zero_branch(x), 2) / gx;
        if (low.sign() > 0 && !(log_margin(low, fifth) > 0)) return false;
        for (const auto& t : other_branches) {
            const LogDomainReal high = f.eval(t(x), 2) / gx;
            if (high.sign() <= 0 || !(log_margin(ld(5 / t.ratio), high) > 0)) return false;
        }
        return true;
    };
    SignThreshold out;
    for (int k = max_index; k >= 1 && holds(k); --k) {
        out.found = true;
        out.index = k;
    }
    if (out.found) {
        out.x0 = bmp::ldexp(ExtReal(1), -out.index);
        out.y0 = f.eval(out.x0, 0).to_ext();
    }
    return out;
}

std::optional<RecurrenceWord> recurrence_zero_word(const std::vector<Interval>& Z, const SelfSimilarIFS& ifs,
                                                   int max_depth, const Rational& tol) {
    if (max_depth < 1) throw ValidationError("max_depth must be positive");
    std::vector<Interval> zs;
    for (const auto& I : Z) {
        Interval c{std::max(I.lo, Rational(0)), std::min(I.hi, Rational(1))};
        if (c.lo < c.hi) zs.push_back(c);
    }
    std::sort(zs.begin(), zs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& I : zs) {
        if (!merged.empty() && I.lo <= merged.back().hi) merged.back().hi = std::max(merged.back().hi, I.hi);
        else merged.push_back(I);
    }
    auto measure_of = [&](const std::vector<Interval>& pieces) {
        MeasureEnclosure total{0, 0, 0};
        for (const auto& I : pieces) {
            const auto e = measure_interval(ifs, I, tol);
            total.lower += e.lower;
            total.upper += e.upper;
            total.cylinders += e.cylinders;
        }
        return total;
    };
    // Z must carry certified mass before any overlap can.
    if (merged.empty() || measure_of(merged).lower == 0) return std::nullopt;

    const std::size_t alphabet = ifs.size();
    for (int depth = 1; depth <= max_depth; ++depth) {
        Word w;
        w.letters.assign(static_cast<std::size_t>(depth), 0);
        while (true) {
            const SimilarityMap T = compose_word(ifs, w);
            std::vector<Interval> overlap;
            for (const auto& I : merged) {
                for (const auto& J : merged) {
                    Rational a = T.invert(J.lo), b = T.invert(J.hi);
                    if (a > b) std::swap(a, b);
                    const Rational lo = std::max(I.lo, a), hi = std::min(I.hi, b);
                    if (lo < hi) overlap.push_back({lo, hi});
                }
            }
            if (!overlap.empty()) {
                const auto m = measure_of(overlap);
                if (m.lower > 0) return RecurrenceWord{w, overlap, m};
            }
            int pos = depth - 1;
            while (pos >= 0 && w.letters[static_cast<std::size_t>(pos)] + 1 == alphabet) {
                w.letters[static_cast<std::size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
            ++w.letters[static_cast<std::size_t>(pos)];
        }
    }
    return std::nullopt;
}

}  // namespace slowft
