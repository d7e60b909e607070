#include "doctest.h"

#include "slowft/pushforward.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace slowft;

namespace {

Complex ref_ft(const SelfSimilarIFS& ifs, long double xi) { return ft_homogeneous(ifs, xi, 1e-14L).value(); }

// Midpoint rule on all depth-d Cantor cylinders. The measure is symmetric on
// each cylinder, so the first-order error cancels.
Complex cantor_midpoint(const SmoothMapSpec& f, long double xi, int depth) {
    const long double width = std::pow(3.0L, -depth);
    const std::uint64_t count = std::uint64_t{1} << depth;
    std::vector<long double> place(static_cast<std::size_t>(depth));
    for (int i = 0; i < depth; ++i) place[static_cast<std::size_t>(i)] = 2 * std::pow(3.0L, -(i + 1));
    long double re = 0, im = 0;
    for (std::uint64_t w = 0; w < count; ++w) {
        long double x = width / 2;
        for (int i = 0; i < depth; ++i)
            if ((w >> i) & 1) x += place[static_cast<std::size_t>(i)];
        // h is below 1e-4000 there; its evaluator refuses x < 1e-4.
        const long double fx = (f.variant() == SmoothMapSpec::Variant::ExplicitXPlusH && x < 1e-4L) ? x : f.value(x);
        const long double turns = xi * fx;
        const long double ph = kTwoPi * (turns - std::nearbyint(turns));
        re += std::cos(ph);
        im += std::sin(ph);
    }
    return {re / count, im / count};
}

}  // namespace

TEST_CASE("identity pushforward matches the product formula") {
    const auto ifs = cantor_ifs();
    const auto id = SmoothMapSpec::identity();
    const auto r = pushforward_ft(ifs, id, 729, 1e-8L);
    CHECK(std::abs(r.value() - ref_ft(ifs, 729)) <= r.err + 1e-12L);
    CHECK(r.err <= 1e-8L);
    CHECK(std::fabs(r.modulus() - 0.3714) < 1e-4L);

    PushforwardOptions plain;
    plain.linearize = false;
    const auto p = pushforward_ft(ifs, id, 729, 1e-4L, plain);
    CHECK(p.linear_leaf_count == 0);
    CHECK(p.leaf_count > 1000);
    CHECK(std::abs(p.value() - ref_ft(ifs, 729)) <= p.err + 1e-12L);
    CHECK(p.err <= 1e-4L);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<long double> u(0, 1e5L);
    for (int i = 0; i < 50; ++i) {
        const long double xi = u(rng);
        const auto v = pushforward_ft(ifs, id, xi, 1e-9L);
        CHECK(std::abs(v.value() - ref_ft(ifs, xi)) <= 1e-8L);
    }
}

TEST_CASE("affine covariance") {
    const auto ifs = missing_digit_ifs(5, {0, 2, 4});
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> num(-40, 40);
    std::uniform_real_distribution<long double> u(0, 1e4L);
    for (int i = 0; i < 100; ++i) {
        Rational a(num(rng), 16);
        a.canonicalize();
        if (a == 0) a = 1;
        Rational b(num(rng), 32);
        b.canonicalize();
        const long double xi = u(rng);
        const auto f = SmoothMapSpec::affine(a, b);
        const auto v = pushforward_ft(ifs, f, xi, 1e-9L);
        const long double turns = xi * to_long_double(b);
        const Complex expect =
            std::polar(1.0L, kTwoPi * (turns - std::nearbyint(turns))) * ref_ft(ifs, xi * to_long_double(a));
        CHECK(std::abs(v.value() - expect) <= v.err + 1e-12L);
    }
    // Without tangent leaves the same identity holds through plain leaves.
    PushforwardOptions plain;
    plain.linearize = false;
    const auto f = SmoothMapSpec::affine(Rational(-3, 2), Rational(1, 4));
    const auto v = pushforward_ft(ifs, f, 37.5L, 1e-4L, plain);
    const Complex expect = std::polar(1.0L, kTwoPi * 37.5L * 0.25L) * ref_ft(ifs, -1.5L * 37.5L);
    CHECK(std::abs(v.value() - expect) <= v.err);
}

TEST_CASE("flat polynomial against a deep midpoint oracle") {
    const auto ifs = cantor_ifs();
    const auto f = SmoothMapSpec::poly_flat(8);
    const long double xi = std::pow(3.0L, 10);
    const auto r = pushforward_ft(ifs, f, xi, 1e-6L);
    CHECK(r.err <= 1e-6L);
    CHECK(r.leaf_count > 0);
    CHECK(r.linear_leaf_count == r.leaf_count);
    // Depth 20: second-order midpoint error below 1e-7 at this frequency.
    const Complex oracle = cantor_midpoint(f, xi, 20);
    CHECK(std::abs(r.value() - oracle) <= r.err + 2e-7L);

    // x + h against the same oracle at a moderate frequency.
    const auto xh = SmoothMapSpec::x_plus_h();
    const auto q = pushforward_ft(ifs, xh, 500, 1e-6L);
    CHECK(std::abs(q.value() - cantor_midpoint(xh, 500, 14)) <= q.err + 1e-6L);
}

TEST_CASE("enclosures nest under halving the leaf threshold") {
    const auto ifs = cantor_ifs();
    const std::vector<SmoothMapSpec> maps = {SmoothMapSpec::poly_flat(6), SmoothMapSpec::poly_flat(8),
                                             SmoothMapSpec::x_plus_h(), SmoothMapSpec::identity()};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<long double> xi_u(1, 3000), tol_e(4, 6), plain_xi(1, 100), plain_e(3, 4);
    for (int i = 0; i < 50; ++i) {
        const auto& f = maps[static_cast<std::size_t>(i) % maps.size()];
        PushforwardOptions opt;
        opt.linearize = i % 2 == 0;
        // Plain leaves shrink like 1/xi, so they get smaller frequencies.
        const long double xi = opt.linearize ? xi_u(rng) : plain_xi(rng);
        const long double tol = std::pow(10.0L, -(opt.linearize ? tol_e(rng) : plain_e(rng)));
        const auto coarse = pushforward_ft(ifs, f, xi, tol, opt);
        opt.leaf_eps = tol / 8;
        const auto fine = pushforward_ft(ifs, f, xi, tol, opt);
        CHECK(std::abs(fine.value() - coarse.value()) <= coarse.err);
        CHECK(fine.err <= coarse.err * 1.01L);
    }
}

TEST_CASE("deterministic across worker counts") {
    const auto ifs = cantor_ifs();
    PushforwardOptions one, four;
    one.jobs = 1;
    four.jobs = 4;
    const auto a = pushforward_ft(ifs, SmoothMapSpec::poly_flat(8), 20000, 1e-6L, one);
    const auto b = pushforward_ft(ifs, SmoothMapSpec::poly_flat(8), 20000, 1e-6L, four);
    CHECK(a.re == b.re);
    CHECK(a.im == b.im);
    CHECK(a.err == b.err);
    CHECK(a.leaf_count == b.leaf_count);
}

TEST_CASE("regions and restriction additivity") {
    const auto ifs = cantor_ifs();
    const auto f = SmoothMapSpec::poly_flat(8);
    const auto rep = region_report(ifs, f, 1000, Rational(1, 9), Rational(1, 3), 1e-7L);
    CHECK(rep.bracket_holds);
    CHECK(rep.near.boundary_mass == 0);
    CHECK(rep.far.boundary_mass == 0);
    // (1/9, 1/3) holds the cylinder [2/9, 1/3] of mass 1/4.
    CHECK(rep.middle_mass.lower == Rational(1, 4));
    CHECK(rep.middle_mass.upper == Rational(1, 4));
    CHECK(rep.min_second_deriv_far.sign() == 1);
    CHECK(std::fabs(rep.min_second_deriv_far.to_long_double() - 56 * std::pow(1.0L / 3, 6)) < 1e-15L);

    // Cuts through cylinders are charged as boundary mass and still bracket.
    // 1/10 and 7/10 lie in the attractor, inside level-2 cylinders.
    const auto cut = region_report(ifs, f, 1000, Rational(1, 10), Rational(7, 10), 1e-5L);
    CHECK(cut.bracket_holds);
    CHECK(cut.near.boundary_mass > 0);
    CHECK(cut.near.boundary_mass <= cut.near.err);

    // Restriction to [2/9, 1/3] of the identity: (1/4) mu^(3^{k-2}).
    PushforwardOptions piece;
    piece.region = Interval{Rational(2, 9), Rational(1, 3)};
    const auto v = pushforward_ft(ifs, SmoothMapSpec::identity(), 243, 1e-9L, piece);
    CHECK(std::abs(v.value() - 0.25L * ref_ft(ifs, 27)) <= v.err + 1e-12L);
    CHECK_THROWS_AS(region_report(ifs, f, 10, Rational(1, 2), Rational(1, 3), 1e-3L), ValidationError);
}

TEST_CASE("budgets and preconditions") {
    const auto ifs = cantor_ifs();
    PushforwardOptions tiny;
    tiny.leaf_budget = 10;
    tiny.linearize = false;
    try {
        pushforward_ft(ifs, SmoothMapSpec::poly_flat(8), 5000, 1e-6L, tiny);
        FAIL("expected budget error");
    } catch (const PushforwardBudgetExceeded& e) {
        CHECK(e.partial().leaf_count >= 1);
    }
    const auto sched = std::make_shared<const BumpSchedule>(
        build_schedule(DecayRate::exponential(), ScheduleVariant::LemmaFix, 3));
    CHECK_THROWS_AS(pushforward_ft(ifs, SmoothMapSpec::bump_sum(sched), 10, 1e-3L), ValidationError);
    CHECK_THROWS_AS(pushforward_ft(ifs, SmoothMapSpec::identity(), 10, 0), ValidationError);
    CHECK_THROWS_AS(pushforward_ft(ifs, SmoothMapSpec::identity(), 1e30L, 1e-3L), ValidationError);
    // The integrated schedule map has monotone derivative bounds.
    const auto integrated = SmoothMapSpec::integrated(sched, true);
    const auto v = pushforward_ft(ifs, integrated, 50, 1e-5L);
    CHECK(std::abs(v.value() - cantor_midpoint(integrated, 50, 10)) <= v.err + 1e-6L);
}

TEST_CASE("derivative bounds") {
    const auto h = SmoothMapSpec::explicit_h();
    const auto b1 = derivative_bound(h, 0.5L, 0.9L, 2);
    REQUIRE(b1.has_value());
    for (int i = 0; i <= 400; ++i) {
        const long double x = 0.5L + 0.4L * i / 400;
        CHECK(h.d2(x) <= *b1);
    }
    CHECK(*b1 - 1.7343377888L < 1e-6L);
    CHECK(*derivative_bound(h, 0.2L, 0.3L, 2) == doctest::Approx(static_cast<double>(h.d2(0.3L))).epsilon(1e-12));
    CHECK(*derivative_bound(h, 0.9L, 1.0L, 2) == doctest::Approx(static_cast<double>(h.d2(0.9L))).epsilon(1e-12));
    CHECK_FALSE(derivative_bound(h, 0.5L, 1.5L, 1).has_value());
    const auto p = SmoothMapSpec::poly_flat(8);
    CHECK(*derivative_bound(p, -0.5L, 0.25L, 1) >= 1 + 8 * std::pow(0.5L, 7));
    CHECK(*derivative_bound(SmoothMapSpec::affine(-3, 1), 0, 1, 1) == 3);
}

TEST_CASE("frequency index selection") {
    const auto ifs = cantor_ifs();
    const Complex c = ft_homogeneous(ifs, ExactFrequency(1), 1e-15L).value();
    CHECK(std::fabs(std::abs(c) - 0.3714L) < 1e-4L);
    const auto p = SmoothMapSpec::poly_flat(8);
    const auto k3 = select_kn(ifs, p, 3, 1, c);
    CHECK(k3.kind == FrequencyIndex::Kind::Finite);
    CHECK(k3.k == 18);
    // Direct scan: largest k with 3^(k - 24) <= 0.01 |c|.
    long scan = 0;
    for (long k = 0; k < 60; ++k)
        if (std::pow(3.0L, k - 24) <= 0.01L * std::abs(c)) scan = k;
    CHECK(scan == 18);

    long prev = -1;
    for (int n = 1; n <= 6; ++n) {
        const auto k = select_kn(ifs, p, n, 1, c);
        CHECK(k.k > prev);
        prev = k.k;
    }
    CHECK(select_kn(ifs, SmoothMapSpec::identity(), 3, 1, c).kind == FrequencyIndex::Kind::Unbounded);
    const auto xh = select_kn(ifs, SmoothMapSpec::x_plus_h(), 3, 1, c);
    CHECK(xh.kind == FrequencyIndex::Kind::Symbolic);
    // ln k ~ 729 - ln ln 3.
    CHECK(std::fabs(static_cast<long double>(xh.log_bound) - (729 - std::log(std::log(3.0L)))) < 1e-6L);
    CHECK(xh.excess.logmag() < -1e300);
    CHECK_THROWS_AS(select_kn(ifs, p, 3, 1, Complex(0, 0)), ValidationError);
    CHECK_THROWS_AS(select_kn(ifs, SmoothMapSpec::explicit_h(), 3, 1, c), ValidationError);
    CHECK_THROWS_AS(select_kn(mu_t_ifs(Rational(1, 3)), p, 3, 0, c), ValidationError);
}

TEST_CASE("near-zero mechanism") {
    const auto ifs = cantor_ifs();
    for (int m : {6, 8, 10}) {
        for (int n : {2, 3, 4}) {
            const auto r = near_zero_check(ifs, SmoothMapSpec::poly_flat(m), n, 1, 1e-8L);
            INFO("m=" << m << " n=" << n);
            CHECK_FALSE(r.skipped);
            CHECK(r.pass);
            CHECK(r.margin >= 0);
            CHECK(r.threshold == doctest::Approx(static_cast<double>(0.9L * std::pow(0.5L, n) * std::abs(r.c_mu))));
        }
    }
    const auto id = near_zero_check(ifs, SmoothMapSpec::identity(), 3, 1, 1e-9L);
    CHECK(id.k.kind == FrequencyIndex::Kind::Unbounded);
    CHECK(std::abs(id.integral.value() - 0.125L * id.c_mu) <= id.integral.err + 1e-12L);
    const auto xh = near_zero_check(ifs, SmoothMapSpec::x_plus_h(), 3, 1, 1e-6L);
    CHECK(xh.skipped);
    CHECK(xh.note.find("symbolic") != std::string::npos);
}

TEST_CASE("decay profiles") {
    const auto ifs = cantor_ifs();
    std::vector<long double> grid;
    for (int k = 1; k <= 8; ++k) grid.push_back(std::pow(3.0L, k));
    const auto id = decay_profile(ifs, SmoothMapSpec::identity(), grid, 1e-9L);
    CHECK(id.rows.size() == 8);
    CHECK(id.max_modulus - id.min_modulus < 1e-6L);
    CHECK(std::fabs(id.slope) < 1e-6L);

    PushforwardOptions piece;
    piece.region = Interval{Rational(2, 9), Rational(1, 3)};
    std::vector<long double> tail(grid.begin() + 1, grid.end());
    const auto restricted = decay_profile(ifs, SmoothMapSpec::identity(), tail, 1e-9L, piece);
    CHECK(restricted.max_modulus - restricted.min_modulus < 1e-6L);
    CHECK(std::fabs(restricted.min_modulus - 0.25L * id.min_modulus) < 1e-8L);

    PushforwardOptions far;
    far.region = Interval{Rational(1, 3), Rational(1)};
    std::vector<long double> wide;
    for (int k = 1; k <= 12; ++k) wide.push_back(100 * std::pow(2.0L, k));
    const auto decay = decay_profile(ifs, SmoothMapSpec::poly_flat(8), wide, 1e-7L, far);
    CHECK(decay.fitted == 12);
    CHECK(decay.slope < -0.1L);

    std::ostringstream out;
    write_decay_profile_csv(out, id);
    const std::string csv = out.str();
    CHECK(csv.rfind("xi,re,im,err,modulus,leaf_count\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
    CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(fit_slope({1}, {1}), ValidationError);
}
