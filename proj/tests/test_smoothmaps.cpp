#include "doctest.h"

#include "slowft/errors.hpp"
#include "slowft/smoothmaps.hpp"

#include <cmath>
#include <memory>

using namespace slowft;
namespace bmp = boost::multiprecision;

namespace {

long double to_ld(const ExtReal& x) { return x.convert_to<long double>(); }

LogDomainReal L(long double v) { return LogDomainReal(v); }

const std::shared_ptr<const BumpSchedule>& lemma_schedule() {
    static const auto s =
        std::make_shared<const BumpSchedule>(build_schedule(DecayRate::exponential(), ScheduleVariant::LemmaFix, 20));
    return s;
}

// d/dx log|v(x)| by central differences; v is evaluated in log form.
ExtReal log_slope(const SmoothMapSpec& f, int order, const ExtReal& x, const ExtReal& eps) {
    return (f.eval(x + eps, order).logmag() - f.eval(x - eps, order).logmag()) / (2 * eps);
}

ExtReal ratio(const LogDomainReal& num, const LogDomainReal& den) {
    if (num.is_zero()) return 0;
    return num.sign() * den.sign() * bmp::exp(num.logmag() - den.logmag());
}

struct FdStats {
    int checked = 0;
    long double worst1 = 0, worst2 = 0;
};

// d1 against (log f)' = f'/f and d2 against (log f')' = f''/f' at 100
// log-spaced points; errors are relative to |exact| + 1/x.
FdStats fd_check(const SmoothMapSpec& f, long double lo, long double hi, long double rel_step) {
    FdStats st;
    for (int i = 0; i < 100; ++i) {
        const ExtReal x = ExtReal(lo) * bmp::pow(ExtReal(hi / lo), ExtReal(i) / 99);
        const ExtReal eps = x * ExtReal(rel_step);
        const auto v0 = f.eval(x, 0), v1 = f.eval(x, 1), v2 = f.eval(x, 2);
        const ExtReal scale = 1 / x;
        if (!v0.is_zero()) {
            const ExtReal exact = ratio(v1, v0);
            const ExtReal err = bmp::abs(log_slope(f, 0, x, eps) - exact) / (bmp::abs(exact) + scale);
            st.worst1 = std::max(st.worst1, to_ld(err));
        }
        if (!v1.is_zero()) {
            const ExtReal exact = ratio(v2, v1);
            const ExtReal err = bmp::abs(log_slope(f, 1, x, eps) - exact) / (bmp::abs(exact) + scale);
            st.worst2 = std::max(st.worst2, to_ld(err));
        }
        ++st.checked;
    }
    return st;
}

}  // namespace

TEST_CASE("log-domain arithmetic") {
    const LogDomainReal a = L(3), b = L(-5);
    CHECK(std::fabs((a + b).to_long_double() + 2) < 1e-18L);
    CHECK(std::fabs((a * b).to_long_double() + 15) < 1e-17L);
    CHECK(std::fabs((b / a).to_long_double() + 5.0L / 3) < 1e-18L);
    CHECK((a - a).is_zero());
    CHECK((a * LogDomainReal{}).is_zero());
    CHECK(std::fabs(L(4).pow(ExtReal("0.5")).to_long_double() - 2) < 1e-18L);
    CHECK_THROWS_AS(L(-4).pow(ExtReal(2)), ValidationError);
    CHECK_THROWS_AS(a / LogDomainReal{}, ValidationError);

    // Values far below any floating range.
    const auto tiny = LogDomainReal::exp(ExtReal("-1e30"));
    const auto tinier = LogDomainReal::exp(ExtReal("-2e30"));
    CHECK(compare(tinier, tiny) < 0);
    CHECK(tiny.to_long_double() == 0.0L);
    CHECK(log_margin(tinier, tiny) > ExtReal("9.9e29"));
    CHECK((tiny + tinier).logmag() == tiny.logmag());

    // Cancellation inflates the relative error bound.
    const auto near = L(1.0L) - LogDomainReal::from_log(1, ExtReal("-1e-10"));
    CHECK(near.sign() == 1);
    CHECK(near.sign_certain());
    CHECK(near.log_err() > L(1.0L).log_err());
    const auto noisy = LogDomainReal::from_log(1, 0, ExtReal("0.5")) - LogDomainReal::from_log(1, ExtReal("-0.1"));
    CHECK_FALSE(noisy.sign_certain());
    CHECK_FALSE((noisy * a).sign_certain());
    CHECK((a * b).sign_certain());
    // Magnitude error alone does not cast doubt on a product's sign.
    CHECK((LogDomainReal::from_log(-1, ExtReal("-1e60"), ExtReal(1e20)) * a).sign_certain());
    CHECK(L(-2).to_string(3) == "-exp(0.693)");
}

TEST_CASE("bump and bump integrals") {
    CHECK(bump(ExtReal(0), 0).is_zero());
    CHECK(bump(ExtReal(-1), 2).is_zero());
    CHECK(std::fabs(bump(ExtReal(1), 0).to_long_double() - std::exp(-1.0L)) < 1e-18L);
    CHECK(std::fabs(bump(ExtReal("0.5"), 1).to_long_double() - 16 * std::exp(-4.0L)) < 1e-17L);
    // W'' = 2 s^-6 (2 - 3 s^2) W changes sign at s^2 = 2/3.
    CHECK(bump(ExtReal("0.8"), 2).sign() == 1);
    CHECK(bump(ExtReal("0.9"), 2).sign() == -1);

    // Direct composite Simpson on W as the oracle.
    for (long double d : {0.3L, 0.5L, 1.0L, 2.0L}) {
        const int n = 200000;
        long double k1 = 0, k2 = 0;
        for (int i = 0; i <= n; ++i) {
            const long double s = d * i / n;
            const long double w = s > 0 ? std::exp(-1 / (s * s)) : 0;
            const long double wt = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
            k1 += wt * w;
            k2 += wt * (d - s) * w;
        }
        k1 *= d / n / 3;
        k2 *= d / n / 3;
        const auto q1 = bump_integral(ExtReal(d), 1), q2 = bump_integral(ExtReal(d), 2);
        CHECK(std::fabs(q1.to_long_double() / k1 - 1) < 1e-10L);
        CHECK(std::fabs(q2.to_long_double() / k2 - 1) < 1e-10L);
        CHECK(q1.log_err() < ExtReal("1e-12"));
    }
    // Tiny d: K1 ~ W(d) d^3 / 2 and K2 ~ W(d) d^6 / 4.
    const ExtReal d("1e-6");
    const auto k1 = bump_integral(d, 1);
    CHECK(bmp::abs(k1.logmag() - (bump(d, 0).logmag() + bmp::log(d * d * d / 2))) < ExtReal("1e-11"));
    CHECK(bump_integral(ExtReal(0), 2).is_zero());
}

TEST_CASE("decay rates and radius") {
    const auto psi = DecayRate::exponential();
    // r(100) = exp(-100 / ln 100) ~ 3.7e-10.
    const ExtReal r = radius_at(psi, ExtReal(100));
    CHECK(std::fabs(to_ld(bmp::log(r)) + 21.7147240951625L) < 1e-12L);
    CHECK(std::fabs(to_ld(r) - 3.7104e-10L) < 0.0001e-10L);
    CHECK_THROWS_AS(radius_at(psi, ExtReal(2)), ValidationError);
    CHECK(radius_at(psi, ExtReal(5)) > radius_at(psi, ExtReal(6)));
    CHECK(DecayRate::parse("exp").name == "exp");
    CHECK_THROWS_AS(DecayRate::parse("nope"), ValidationError);
    CHECK(parse_schedule_variant(to_string(ScheduleVariant::PropPushforward)) == ScheduleVariant::PropPushforward);
}

TEST_CASE("schedule construction and audit") {
    const auto psi = DecayRate::exponential();
    const auto& s = *lemma_schedule();
    REQUIRE(s.terms() == 20);
    CHECK(s.xi.size() == 22);
    CHECK(s.r.size() == 22);
    CHECK(s.y.size() == 21);
    CHECK(bmp::abs(psi.neg_log(s.xi_at(1)) - 3) < ExtReal("1e-60"));
    for (std::size_t n = 1; n < s.xi.size(); ++n) {
        CHECK(s.xi_at(n + 1) > s.xi_at(n));
        CHECK(s.r_at(n + 1) < s.r_at(n));
    }
    // y_1 = 0.01 min(1, 1 / xi_2).
    const ExtReal y1 = ExtReal("0.01") / s.xi_at(2);
    CHECK(bmp::abs(s.y_at(1).logmag() - bmp::log(y1)) < ExtReal("1e-60"));

    const auto audit = audit_schedule(s, psi);
    int caps = 0;
    for (const auto& c : audit) {
        CHECK_MESSAGE(c.pass, c.name << " n=" << c.n << " j=" << c.j << " margin=" << format_ext(c.margin, 8));
        if (c.required > 0) {
            ++caps;
            CHECK(c.margin > ExtReal("0.6931"));
        }
    }
    CHECK(caps > 100);

    const auto prop = build_schedule(psi, ScheduleVariant::PropPushforward, 8);
    for (const auto& c : audit_schedule(prop, psi)) CHECK(c.pass);
    CHECK_THROWS_AS(build_schedule(psi, ScheduleVariant::LemmaFix, 0), ValidationError);
    BuildScheduleOptions tight;
    tight.max_halvings = 2;
    CHECK_THROWS_AS(build_schedule(psi, ScheduleVariant::LemmaFix, 4, tight), Infeasible);
}

TEST_CASE("schedule verification and negative control") {
    const auto& s = *lemma_schedule();
    const auto v = verify_schedule(s, 1);
    CHECK(v.checks.size() == 80);
    CHECK(v.all_pass());
    CHECK(verify_schedule(s, 4).checks.size() == 80);

    BumpSchedule bad = s;
    bad.c.at(4) = bad.c.at(4) * LogDomainReal::exp(1000 * bmp::log(ExtReal(10)));
    const auto vb = verify_schedule(bad, 1);
    CHECK_FALSE(vb.all_pass());
    const auto idx = vb.failing_indices("conclusion-1");
    CHECK(std::find(idx.begin(), idx.end(), std::size_t{5}) != idx.end());

    const auto prop = build_schedule(DecayRate::exponential(), ScheduleVariant::PropPushforward, 10);
    const auto vp = verify_schedule(prop);
    CHECK(vp.checks.size() == 20);
    CHECK(vp.all_pass());
    CHECK(vp.failing_indices("conclusion-A").empty());
}

TEST_CASE("schedule json round trip") {
    const auto& s = *lemma_schedule();
    const auto back = schedule_from_json(nlohmann::json::parse(schedule_to_json(s).dump()));
    CHECK(back.terms() == s.terms());
    CHECK(back.variant == s.variant);
    CHECK(bmp::abs(back.r_at(7) - s.r_at(7)) < ExtReal("1e-75"));
    CHECK(bmp::abs(back.c_at(7).logmag() - s.c_at(7).logmag()) / bmp::abs(s.c_at(7).logmag()) < ExtReal("1e-75"));
    CHECK(verify_schedule(back, 1).all_pass());
    CHECK_THROWS_AS(schedule_from_json(nlohmann::json::parse(R"({"variant":"lemma-fix"})")), ValidationError);
}

TEST_CASE("explicit maps") {
    const auto h = SmoothMapSpec::explicit_h();
    for (int order = 0; order <= 2; ++order) CHECK(h.eval(ExtReal(0), order).is_zero());
    // h(1) = exp(-e).
    CHECK(bmp::abs(h.eval(ExtReal(1), 0).logmag() + bmp::exp(ExtReal(1))) < ExtReal("1e-70"));
    // h'(0.1) = 2000 e^100 exp(-e^100).
    const ExtReal e100 = bmp::exp(ExtReal(100));
    const ExtReal expect = bmp::log(ExtReal(2000)) + 100 - e100;
    CHECK(bmp::abs(h.eval(ExtReal("0.1"), 1).logmag() - expect) < ExtReal("1e-30"));
    CHECK(h.eval(ExtReal("0.5"), 2).sign() == 1);
    CHECK_THROWS_AS(h.eval(ExtReal(-1), 0), ValidationError);
    CHECK_THROWS_AS(h.eval(ExtReal("1e-5"), 0), BudgetExceeded);

    const auto xh = SmoothMapSpec::x_plus_h();
    CHECK(xh.eval(ExtReal(0), 0).is_zero());
    CHECK(xh.d1(0) == 1.0L);
    CHECK(xh.eval(ExtReal(0), 2).is_zero());
    for (long double x : {0.01L, 0.1L, 0.3L, 0.7L, 1.0L}) {
        CHECK(xh.d1(x) >= 1.0L);
        CHECK(xh.d1(x) <= 2.0L);
    }
    const auto p = SmoothMapSpec::poly_flat(8);
    CHECK(std::fabs(p.value(0.5L) - (0.5L + std::pow(0.5L, 8))) < 1e-18L);
    CHECK(std::fabs(p.d2(0.5L) - 56 * std::pow(0.5L, 6)) < 1e-17L);
    CHECK(p.eval(ExtReal(0), 2).is_zero());
    CHECK(std::fabs(SmoothMapSpec::affine(2, 1).value(3) - 7) < 1e-17L);
    CHECK(SmoothMapSpec::identity().eval(ExtReal(4), 2).is_zero());

    CHECK(SmoothMapSpec::parse("polyflat:8").degree() == 8);
    CHECK(SmoothMapSpec::parse("affine:1/2,1/4").slope() == Rational(1, 2));
    CHECK(SmoothMapSpec::parse("x+h").name() == "x+h");
    CHECK_THROWS_AS(SmoothMapSpec::parse("polyflat:2"), ValidationError);
    CHECK_THROWS_AS(SmoothMapSpec::parse("affine:0,1"), ValidationError);
    CHECK_THROWS_AS(SmoothMapSpec::parse("cosh"), ValidationError);
}

TEST_CASE("finite-difference derivative checks") {
    const auto sched = lemma_schedule();
    struct Case {
        SmoothMapSpec f;
        long double lo, hi, step;
    };
    const std::vector<Case> cases = {
        // Below ~0.12 the log-magnitude of h exceeds 1e35 and ExtReal no
        // longer resolves f'/f from the stored logs.
        {SmoothMapSpec::explicit_h(), 0.12L, 1.0L, 1e-12L},
        {SmoothMapSpec::x_plus_h(), 0.12L, 2.0L, 1e-12L},
        {SmoothMapSpec::poly_flat(8), 1e-3L, 1.0L, 1e-12L},
        {SmoothMapSpec::affine(3, 1), 1e-3L, 1.0L, 1e-12L},
        {SmoothMapSpec::bump_sum(sched), 0.07L, 1.0L, 1e-12L},
        {SmoothMapSpec::integrated(sched, false), 0.07L, 1.0L, 1e-6L},
        {SmoothMapSpec::integrated(sched, true), 0.07L, 1.0L, 1e-6L},
    };
    for (const auto& c : cases) {
        const auto st = fd_check(c.f, c.lo, c.hi, c.step);
        INFO(c.f.name());
        CHECK(st.checked == 100);
        CHECK(st.worst1 < 1e-5L);
        CHECK(st.worst2 < 1e-4L);
    }
}

TEST_CASE("schedule maps") {
    const auto sched = lemma_schedule();
    const auto g = SmoothMapSpec::bump_sum(sched);
    const auto f = SmoothMapSpec::integrated(sched, true);
    // Odd extension.
    CHECK(std::fabs(g.value(-0.5L) + g.value(0.5L)) < 1e-18L);
    CHECK(g.d1(-0.5L) == g.d1(0.5L));
    CHECK(f.eval(ExtReal(0), 0).is_zero());
    // f'' = g, and f - x <= g r^2 on the support.
    CHECK(std::fabs(f.d2(0.3L) / g.value(0.3L) - 1) < 1e-18L);
    const auto bare = SmoothMapSpec::integrated(sched, false);
    for (const char* xs : {"0.07", "0.1", "0.5"}) {
        const ExtReal x(xs);
        const auto excess = bare.eval(x, 0);
        CHECK(excess.sign() == 1);
        CHECK(log_margin(excess, g.eval(x, 0) * LogDomainReal(x * x)) > 0);
        CHECK(f.d1(static_cast<long double>(x)) >= 1.0L);
    }
    // Below every r_n the built sum vanishes.
    CHECK(g.eval(sched->r_at(22) / 2, 0).is_zero());
}

TEST_CASE("conjugation") {
    const AffineContraction third{ExtReal(1) / 3, 0};
    const auto id = conjugate_derivatives(SmoothMapSpec::identity(), third, ExtReal("0.4"));
    CHECK(id.d2.is_zero());
    CHECK(std::fabs(id.d1.to_long_double() - 1.0L / 3) < 1e-18L);
    CHECK(std::fabs(id.value.to_long_double() - 0.4L / 3) < 1e-18L);

    // x + x^8 under x -> x/3: S'' < 0 near 0.
    const auto p = conjugate_derivatives(SmoothMapSpec::poly_flat(8), third, ExtReal("0.2"));
    CHECK(p.d2.sign() == -1);
    CHECK(p.d2.sign_certain());

    // x + h under x -> x/3 + d: S'' -> c^2 f''(d) as x -> 0+.
    const ExtReal d("1.5");
    const AffineContraction shifted{ExtReal(1) / 3, d};
    const auto xh = SmoothMapSpec::x_plus_h();
    const auto near = conjugate_derivatives(xh, shifted, ExtReal("1e-4"));
    const long double limit = xh.d2(1.5L) / 9;
    CHECK(std::fabs(near.d2.to_long_double() / limit - 1) < 1e-3L);

    // Closed form against an FD of S = f o T o f^-1 through S'(y) = c f'(Tx)/f'(x).
    const auto pf = SmoothMapSpec::poly_flat(5);
    const AffineContraction T{ExtReal("0.25"), ExtReal("0.5")};
    const ExtReal x("0.3"), eps("1e-25");
    const auto at = conjugate_derivatives(pf, T, x);
    const auto up = conjugate_derivatives(pf, T, x + eps), dn = conjugate_derivatives(pf, T, x - eps);
    const ExtReal fd = (up.d1.to_ext() - dn.d1.to_ext()) / (up.y - dn.y);
    CHECK(bmp::abs(fd / at.d2.to_ext() - 1) < ExtReal("1e-20"));

    const auto flat = SmoothMapSpec::explicit_h();
    CHECK_THROWS_AS(conjugate_derivatives(flat, third, ExtReal(0)), ValidationError);
    CHECK(AffineContraction::from(SimilarityMap(Rational(1, 3), Rational(2, 3)))(ExtReal(1)) == 1);
}

TEST_CASE("zero scan") {
    const AffineContraction third{ExtReal(1) / 3, 0};
    // Identity: S'' = 0 everywhere, nothing to bracket.
    const auto id = zero_scan(SmoothMapSpec::identity(), third, ExtReal(0), ExtReal(1), 64);
    CHECK(id.brackets.empty());
    CHECK(id.zero == 64);

    // x + x^8 under x/3: S'' < 0 on (0, 1], no sign change.
    const auto p = zero_scan(SmoothMapSpec::poly_flat(8), third, ExtReal(0), ExtReal(1), 64, {}, 2);
    CHECK(p.brackets.empty());
    CHECK(p.negative == 64);
    CHECK(p.stable);
    for (const auto& [x, sign] : p.near_zero) CHECK(sign == -1);

    // Odd map x + x^3 under x -> x/3 + 1/3 on [-1, 1]: S'' changes sign
    // once, where c f''(Tx) = q f''(x).
    const AffineContraction shifted{ExtReal(1) / 3, ExtReal(1) / 3};
    const auto c = zero_scan(SmoothMapSpec::poly_flat(3), shifted, ExtReal(-1), ExtReal(1), 200);
    REQUIRE(c.brackets.size() == 1);
    CHECK(c.stable);
    const auto& b = c.brackets.front();
    CHECK(b.x_hi - b.x_lo <= ExtReal("1.01e-12"));
    const auto mid = conjugate_derivatives(SmoothMapSpec::poly_flat(3), shifted, (b.x_lo + b.x_hi) / 2);
    CHECK(std::fabs(mid.d2.to_long_double()) < 1e-9L);
    CHECK_THROWS_AS(zero_scan(SmoothMapSpec::identity(), third, ExtReal(1), ExtReal(0), 8), ValidationError);
}

TEST_CASE("sign threshold") {
    const AffineContraction zero{ExtReal(1) / 3, 0};
    const std::vector<AffineContraction> others{{ExtReal(1) / 3, ExtReal(2) / 3}};
    const auto t = find_sign_threshold(SmoothMapSpec::x_plus_h(), zero, others, 10);
    // x / 3 leaves the representable range of h past k = 11.
    CHECK_THROWS_AS(find_sign_threshold(SmoothMapSpec::x_plus_h(), zero, others, 12), BudgetExceeded);
    CHECK(t.found);
    CHECK(t.index >= 1);
    CHECK(t.x0 == bmp::ldexp(ExtReal(1), -t.index));
    CHECK(t.y0 > t.x0);
    // x + x^8: g(x/3)/g(x) = 3^-6 and g(5/6)/g(1/2) = (5/3)^6 > 15 already at k = 1.
    const auto p = find_sign_threshold(SmoothMapSpec::poly_flat(8), zero, others, 12);
    CHECK(p.found);
    CHECK(p.index == 1);
    // The identity has g = 0 and never qualifies.
    CHECK_FALSE(find_sign_threshold(SmoothMapSpec::identity(), zero, others, 6).found);
}

TEST_CASE("recurrence word") {
    const auto ifs = cantor_ifs();
    const auto w = recurrence_zero_word({{Rational(2, 9), Rational(1, 3)}}, ifs, 6);
    REQUIRE(w.has_value());
    CHECK(w->word.letters == std::vector<std::uint32_t>{0, 1});
    CHECK(w->measure.lower > 0);
    CHECK_FALSE(w->overlap.empty());

    CHECK_FALSE(recurrence_zero_word({}, ifs, 4).has_value());
    CHECK_FALSE(recurrence_zero_word({{Rational(1, 2), Rational(1, 4)}}, ifs, 4).has_value());
    CHECK_FALSE(recurrence_zero_word({{Rational(1, 3), Rational(2, 3)}}, ifs, 4).has_value());
    // The whole attractor returns to itself under the first letter.
    const auto all = recurrence_zero_word({{Rational(0), Rational(1)}}, ifs, 2);
    REQUIRE(all.has_value());
    CHECK(all->word.letters == std::vector<std::uint32_t>{0});
}
