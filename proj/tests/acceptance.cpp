// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only=1,2,...] [--expect-fail=1,6]
//
// Exit status is 0 when the failing set equals the expected-fail set.

#include "slowft/equidistribution.hpp"
#include "slowft/errors.hpp"
#include "slowft/fourier.hpp"
#include "slowft/measures.hpp"
#include "slowft/pushforward.hpp"
#include "slowft/slowdecay.hpp"
#include "slowft/smoothmaps.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace slowft;
namespace bmp = boost::multiprecision;

namespace {

// Pinned tolerances.
constexpr long double kCLo = 0.554186L, kCHi = 0.554188L;
constexpr long double kCOracleTol = 1e-12L;
constexpr double kCSeconds = 1.0;
constexpr long double kDecaySlack = 1e-9L;
constexpr long double kDecayTol = 1e-12L;
constexpr double kDecaySeconds = 60.0;
constexpr long double kLipschitzTol = 1e-12L;
constexpr double kEndToEndSeconds = 300.0;
constexpr long kEndToEndMaxL = 2000;
constexpr double kEquidistSeconds = 600.0;
constexpr long double kIdentityTol = 1e-8L;
constexpr long double kAffineTol = 1e-8L;
constexpr long double kPushforwardTol = 1e-9L;
constexpr long double kNearZeroTol = 1e-8L;
constexpr long double kProfileSpread = 1e-6L;
constexpr long double kFdRel1 = 1e-5L, kFdRel2 = 1e-4L;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(long double v, int digits = 6) { return format_real(v, digits); }

// ------------------------------------------------------------------ 1

Outcome constant_c_check() {
    const auto t0 = Clock::now();
    const auto& c = constant_c();
    // Direct product to j = 64.
    const ExtReal pi = boost::math::constants::pi<ExtReal>();
    ExtReal oracle = 1, scale = 1;
    for (int j = 1; j <= 64; ++j) {
        scale *= 10;
        oracle *= 1 - 4 * pi / (3 * scale);
    }
    const long double gap = bmp::abs(c.ext - oracle).convert_to<long double>();
    const double secs = seconds_since(t0);
    const bool in_range = c.value >= kCLo && c.value <= kCHi;
    std::ostringstream os;
    os << "c = " << format_real(c.value, 15) << " (range [" << num(kCLo, 7) << ", " << num(kCHi, 7) << "] "
       << (in_range ? "ok" : "missed") << "), |c - oracle| = " << num(gap, 3) << ", " << num(secs, 3) << " s";
    return {in_range && gap <= kCOracleTol && secs < kCSeconds, os.str()};
}

// ------------------------------------------------------------------ 2

Outcome decay_lower_bound() {
    const auto t0 = Clock::now();
    const long double c = constant_c().value;
    long checks = 0, failures = 0;
    long double worst = 1e9L;
    for (unsigned n = 1; n <= 4; ++n) {
        const Integer ten_n = pow_int(10, n);
        for (const Integer& p : {Integer(0), Integer(1), Integer(3), Integer(7), ten_n}) {
            Rational t(p, ten_n);
            t.canonicalize();
            const long double bound = c * std::pow(3.0L, -static_cast<long double>(n));
            std::vector<unsigned long> Ls;
            for (unsigned long L = n + 1; L <= n + 10; ++L) Ls.push_back(L);
            Ls.push_back(500);
            for (unsigned long L : Ls) {
                const auto v = ft_mu_t(t, ExactFrequency::power(10, L), kDecayTol);
                const long double margin = v.modulus() - v.err - (bound - kDecaySlack);
                worst = std::min(worst, margin);
                ++checks;
                if (margin < 0) ++failures;
            }
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << checks << " checks (L = n+1..n+10 and 500), " << failures << " below c 3^-n - 1e-9, worst margin "
       << num(worst) << ", " << num(secs, 3) << " s";
    return {failures == 0 && secs < kDecaySeconds, os.str()};
}

// ------------------------------------------------------------------ 3

Outcome lipschitz() {
    std::mt19937_64 rng(20240303);
    std::uniform_int_distribution<long> t_num(0, 1'000'000), xi_num(1, 10'000'000);
    std::uniform_real_distribution<double> log_delta(-9, -1);
    long failures = 0;
    long double worst = 1e9L;
    for (int i = 0; i < 1000; ++i) {
        Rational t(t_num(rng), 1'000'000);
        t.canonicalize();
        const long step = std::max(1L, static_cast<long>(std::pow(10.0, log_delta(rng) + 6)));
        Rational t2 = t + Rational((i % 2 ? 1 : -1) * step, 1'000'000);
        t2.canonicalize();
        if (t2 < 0) t2 = 0;
        if (t2 > 1) t2 = 1;
        Rational xi(xi_num(rng), 1000);
        xi.canonicalize();
        const auto a = ft_mu_t(t, ExactFrequency(xi), kLipschitzTol);
        const auto b = ft_mu_t(t2, ExactFrequency(xi), kLipschitzTol);
        const long double diff = std::abs(a.value() - b.value());
        const Rational dt = t > t2 ? Rational(t - t2) : Rational(t2 - t);
        const long double bound = kTwoPi * to_long_double(xi) * to_long_double(dt) + 2 * kLipschitzTol;
        worst = std::min(worst, bound - diff);
        if (diff > bound) ++failures;
    }
    std::ostringstream os;
    os << "1000 triples, " << failures << " violations of 2 pi |xi| |t - t'| + 2 tol, min slack " << num(worst);
    return {failures == 0, os.str()};
}

// ------------------------------------------------------------------ 4

Outcome first_factors() {
    std::mt19937_64 rng(7);
    long combos = 0, factors = 0, bad = 0;
    for (int i = 0; i < 200; ++i) {
        const unsigned n = 1 + static_cast<unsigned>(i % 4);
        const Integer ten_n = pow_int(10, n);
        std::uniform_int_distribution<long> p_dist(0, ten_n.get_si());
        std::uniform_int_distribution<unsigned long> L_dist(n + 1, n + 60);
        Rational t(p_dist(rng), ten_n);
        t.canonicalize();
        const unsigned long L = L_dist(rng);
        const auto xi = ExactFrequency::power(10, L);
        for (unsigned long j = 1; j <= L - n; ++j) {
            const auto f = mu_t_factor(t, xi, j);
            const bool exact = f.value == Complex(1, 0) &&
                               std::all_of(f.phases.begin(), f.phases.end(), [](const Rational& q) { return q == 0; });
            if (!exact) ++bad;
            ++factors;
        }
        ++combos;
    }
    std::ostringstream os;
    os << combos << " (n, p, L) combinations, " << factors << " factors, " << bad << " not exactly 1";
    return {bad == 0 && combos == 200, os.str()};
}

// ------------------------------------------------------------------ 5

Outcome end_to_end() {
    const auto t0 = Clock::now();
    const auto phi = DecayFunction::parse("log");
    const auto schedule = build_liouville_t(phi, 3);
    const bool certified = schedule.fully_certified() && recheck_schedule(schedule, phi);
    VerifyOptions options;
    options.max_L_eval = kEndToEndMaxL;
    const auto results = verify_schedule(schedule, phi, options);
    long evaluated = 0, failed = 0;
    std::ostringstream idx;
    for (const auto& r : results) {
        if (!r.evaluated) continue;
        ++evaluated;
        if (!r.report.pass) ++failed;
        idx << " m=" << r.index << " (L=" << r.report.L << ", |mu_hat| - err - tail = "
            << num(r.report.modulus - r.report.err - r.report.tail_penalty) << " vs phi = " << num(*r.report.phi_bound)
            << ")";
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "depth 3, certificates " << (certified ? "ok" : "FAILED") << ", " << evaluated << " indices with L <= "
       << kEndToEndMaxL << ":" << idx.str() << ", " << num(secs, 3) << " s";
    return {certified && evaluated > 0 && failed == 0 && secs < kEndToEndSeconds, os.str()};
}

// ------------------------------------------------------------------ 6

struct EquidistRun {
    long points = 0, violations = 0;
    Rational psi_sum;
    double secs = 0;
};

EquidistRun equidistribution_run(const PsiOptions& psi_options) {
    const auto t0 = Clock::now();
    const ScaledTowerSchedule schedule{{100, 10'000}};
    const auto psi = build_psi(schedule, psi_options);
    const Rational t = scaled_t(schedule);
    std::vector<Rational> xs;
    for (const auto& c : all_codings(10)) xs.push_back(point_from_coding(t, c));
    const auto gamma = build_gamma(schedule, psi, xs, 300);
    const auto counts = r_count_batch(xs, 300, gamma.value(), psi);
    EquidistRun run;
    run.points = static_cast<long>(xs.size());
    for (const auto& c : counts) run.violations += c.count != 0;
    run.psi_sum = psi.prefix_sum(300);
    run.secs = seconds_since(t0);
    return run;
}

Outcome equidistribution() {
    const auto run = equidistribution_run({});
    const bool escapes = run.psi_sum > 1;
    std::ostringstream os;
    os << run.points << " points, N = 300, " << run.violations << " with R > 0; Psi(300) = "
       << num(to_long_double(run.psi_sum), 4) << (escapes ? " > 1" : " <= 1 (no escape from triviality)") << ", "
       << num(run.secs, 3) << " s";
    return {run.points == 59049 && run.violations == 0 && escapes && run.secs < kEquidistSeconds, os.str()};
}

void equidistribution_head_variant() {
    PsiOptions options;
    options.head_value = Rational(1, 5);
    const auto run = equidistribution_run(options);
    std::cout << "INFO AC6 with psi head block 1/5: " << run.points << " points, " << run.violations
              << " with R > 0, Psi(300) = " << num(to_long_double(run.psi_sum), 4) << ", " << num(run.secs, 3)
              << " s\n";
}

// ------------------------------------------------------------------ 7

Outcome pushforward_covariance() {
    std::mt19937_64 rng(11);
    const auto cantor = cantor_ifs();
    long double worst_id = 0;
    std::uniform_int_distribution<long> xi_num(1, 100'000'000);
    for (int i = 0; i < 50; ++i) {
        Rational xi(xi_num(rng), 1000);
        xi.canonicalize();
        const auto pf = pushforward_ft(cantor, SmoothMapSpec::identity(), to_long_double(xi), kPushforwardTol);
        const auto exact = ft_homogeneous(cantor, ExactFrequency(xi), 1e-13L);
        worst_id = std::max(worst_id, std::abs(pf.value() - exact.value()));
    }
    const auto fives = missing_digit_ifs(5, {0, 2, 4});
    std::uniform_int_distribution<long> num_dist(-40, 40), den_dist(1, 20), xi_small(1, 1'000'000);
    long double worst_aff = 0;
    for (int i = 0; i < 100; ++i) {
        const SelfSimilarIFS& ifs = i % 2 ? fives : cantor;
        long an = num_dist(rng);
        if (an == 0) an = 1;
        Rational a(an, den_dist(rng)), b(num_dist(rng), den_dist(rng));
        a.canonicalize();
        b.canonicalize();
        Rational xi(xi_small(rng), 1000);
        xi.canonicalize();
        const auto pf = pushforward_ft(ifs, SmoothMapSpec::affine(a, b), to_long_double(xi), kPushforwardTol);
        Rational axi = a * xi, bxi = b * xi;
        axi.canonicalize();
        bxi.canonicalize();
        const long double phase = kTwoPi * to_long_double(frac(bxi));
        const Complex expect =
            Complex(std::cos(phase), std::sin(phase)) * ft_homogeneous(ifs, ExactFrequency(axi), 1e-13L).value();
        worst_aff = std::max(worst_aff, std::abs(pf.value() - expect));
    }
    std::ostringstream os;
    os << "identity: max |diff| " << num(worst_id, 3) << " over 50 xi <= 1e5; affine: max |diff| " << num(worst_aff, 3)
       << " over 100 cases";
    return {worst_id <= kIdentityTol && worst_aff <= kAffineTol, os.str()};
}

// ------------------------------------------------------------------ 8

Outcome near_zero() {
    const auto cantor = cantor_ifs();
    const auto f = SmoothMapSpec::poly_flat(8);
    std::ostringstream os;
    bool pass = true;
    for (int n : {2, 3, 4}) {
        const auto r = near_zero_check(cantor, f, n, 1, kNearZeroTol);
        pass = pass && !r.skipped && r.pass;
        os << "n=" << n << " k=" << r.k.k << " margin " << num(r.margin, 4) << (r.pass ? "" : " FAIL") << "; ";
    }
    // Direct scan for k_3: largest k with 3^k (3^-3)^8 <= 0.01 |mu_hat(1)|.
    const long double c_mu = std::abs(ft_homogeneous(cantor, ExactFrequency(1), 1e-15L).value());
    long k3 = -1;
    for (long k = 0; k <= 60; ++k) {
        const Rational lhs = Rational(pow_int(3, static_cast<unsigned long>(k))) / Rational(pow_int(3, 24));
        if (to_long_double(lhs) <= 0.01L * c_mu) k3 = k;
    }
    const auto sel = select_kn(cantor, f, 3, 1, Complex(c_mu, 0));
    os << "direct scan k_3 = " << k3 << ", selected k_3 = " << sel.k;
    return {pass && k3 == 18 && sel.k == 18, os.str()};
}

// ------------------------------------------------------------------ 9

Outcome schedule_audit() {
    const auto psi = DecayRate::exponential();
    const auto schedule = build_schedule(psi, ScheduleVariant::LemmaFix, 20);
    const auto audit = audit_schedule(schedule, psi);
    const auto ver = verify_schedule(schedule);
    const long audit_failed = std::count_if(audit.begin(), audit.end(), [](const auto& c) { return !c.pass; });
    std::set<std::string> names;
    for (const auto& c : ver.checks) names.insert(c.name);
    auto corrupted = schedule;
    corrupted.c[4] *= LogDomainReal::exp(1000 * bmp::log(ExtReal(10)));
    const auto bad = verify_schedule(corrupted);
    const auto idx = bad.failing_indices("conclusion-1");
    const bool caught = !bad.all_pass() && std::find(idx.begin(), idx.end(), 5) != idx.end();
    std::ostringstream os;
    os << ver.checks.size() << " conclusion checks over " << names.size() << " conclusions, "
       << (ver.all_pass() ? "all hold" : "FAILURES") << "; audit " << audit.size() << " checks, " << audit_failed
       << " failed; c_5 x 10^1000 fails conclusion-1 at";
    for (auto i : idx) os << ' ' << i;
    return {ver.all_pass() && names.size() == 4 && ver.checks.size() == 80 && audit_failed == 0 && caught, os.str()};
}

// ------------------------------------------------------------------ 10

Outcome conjugate_signs() {
    const auto cantor = cantor_ifs();
    const auto T0 = AffineContraction::from(cantor.map(0));
    const auto T1 = AffineContraction::from(cantor.map(1));
    struct Case {
        SmoothMapSpec f;
        const char* lo;
    };
    // h-type maps are evaluated from 0.12 up; the near-zero profile reaches 2^-12 below the top.
    const std::vector<Case> cases = {{SmoothMapSpec::x_plus_h(), "0.12"}, {SmoothMapSpec::poly_flat(8), "0.001"}};
    std::ostringstream os;
    bool pass = true;
    for (const auto& c : cases) {
        const auto th = find_sign_threshold(c.f, T0, {T1}, 10);
        if (!th.found) {
            pass = false;
            os << c.f.name() << ": no threshold; ";
            continue;
        }
        const ExtReal lo(c.lo);
        const auto zero_branch = zero_scan(c.f, T0, lo, th.x0, 400);
        const auto shifted = zero_scan(c.f, T1, lo, ExtReal(1), 400);
        const bool negative = zero_branch.positive == 0 && zero_branch.zero == 0 && zero_branch.uncertain == 0 &&
                              zero_branch.brackets.empty() &&
                              std::all_of(zero_branch.near_zero.begin(), zero_branch.near_zero.end(),
                                          [](const auto& p) { return p.second == -1; });
        const bool positive = !shifted.near_zero.empty() &&
                              std::all_of(shifted.near_zero.begin(), shifted.near_zero.end(),
                                          [](const auto& p) { return p.second == 1; });
        const bool stable = zero_branch.stable && shifted.stable;
        pass = pass && negative && positive && stable;
        os << c.f.name() << ": y_0 = " << format_ext(th.y0, 6) << ", S'' < 0 on branch 0 " << (negative ? "yes" : "NO")
           << ", S'' > 0 near 0 on branch 1 " << (positive ? "yes" : "NO") << ", brackets " << zero_branch.brackets.size()
           << "/" << shifted.brackets.size() << " stable " << (stable ? "yes" : "NO") << "; ";
    }
    return {pass, os.str()};
}

// ------------------------------------------------------------------ 11

Outcome example_reproduction() {
    const auto cantor = cantor_ifs();
    const auto word = recurrence_zero_word({Interval{Rational(2, 9), Rational(1, 3)}}, cantor, 6);
    const bool word_ok = word && word->word.letters == std::vector<std::uint32_t>{0, 1} && word->measure.lower > 0;

    std::vector<long double> grid;
    for (int k = 2; k <= 13; ++k) grid.push_back(std::pow(3.0L, k));
    PushforwardOptions piece;
    piece.region = Interval{Rational(2, 9), Rational(1, 3)};
    const auto flat = decay_profile(cantor, SmoothMapSpec::identity(), grid, kPushforwardTol, piece);
    const long double spread = flat.max_modulus - flat.min_modulus;
    const bool flat_ok = spread <= kProfileSpread && flat.min_modulus > 0.01L;

    // Irrational parameters, carried to 600 exact digits; |mu_hat_t(10^L)| for L = 10..60.
    auto digits_of = [](const ExtReal& x) {
        const Integer scaled(static_cast<std::string>(format_ext(bmp::floor(x * bmp::pow(ExtReal(10), 75)), 80)), 10);
        Rational q(scaled, pow_int(10, 75));
        q.canonicalize();
        return q;
    };
    const std::vector<std::pair<std::string, Rational>> params = {
        {"sqrt2-1", digits_of(bmp::sqrt(ExtReal(2)) - 1)},
        {"pi-3", digits_of(boost::math::constants::pi<ExtReal>() - 3)},
    };
    bool decays = true;
    std::ostringstream prof;
    for (const auto& [name, t] : params) {
        std::vector<long double> x, y;
        for (unsigned long L = 10; L <= 60; L += 5) {
            const auto v = ft_mu_t(t, ExactFrequency::power(10, L), 1e-14L);
            x.push_back(static_cast<long double>(L));
            y.push_back(std::log(v.modulus()));
        }
        const long double slope = fit_slope(x, y);
        const bool down = slope < 0 && y.back() < y.front();
        decays = decays && down;
        prof << name << " slope " << num(slope, 3) << " per decade; ";
    }
    std::ostringstream os;
    os << "word " << (word ? to_string(word->word) : std::string("none")) << " (0-based letters) "
       << (word_ok ? "ok" : "WRONG") << "; restricted profile spread " << num(spread, 3) << "; " << prof.str();
    return {word_ok && flat_ok && decays, os.str()};
}

// ------------------------------------------------------------------ 12

Outcome derivative_oracles() {
    const auto schedule = std::make_shared<const BumpSchedule>(
        build_schedule(DecayRate::exponential(), ScheduleVariant::LemmaFix, 20));
    struct Case {
        SmoothMapSpec f;
        long double lo, hi, step;
    };
    const std::vector<Case> cases = {
        {SmoothMapSpec::identity(), 1e-3L, 1.0L, 1e-12L},
        {SmoothMapSpec::affine(Rational(3), Rational(1)), 1e-3L, 1.0L, 1e-12L},
        {SmoothMapSpec::explicit_h(), 0.12L, 1.0L, 1e-12L},
        {SmoothMapSpec::x_plus_h(), 0.12L, 2.0L, 1e-12L},
        {SmoothMapSpec::poly_flat(8), 1e-3L, 1.0L, 1e-12L},
        {SmoothMapSpec::bump_sum(schedule), 0.07L, 1.0L, 1e-12L},
        {SmoothMapSpec::integrated(schedule, false), 0.07L, 1.0L, 1e-6L},
        {SmoothMapSpec::integrated(schedule, true), 0.07L, 1.0L, 1e-6L},
    };
    // d/dx log|v| by central differences against v'/v, relative to max(|v'/v|, 1/x).
    auto rel_err = [](const SmoothMapSpec& f, int order, const ExtReal& x, const ExtReal& eps) -> long double {
        const auto v = f.eval(x, order), dv = f.eval(x, order + 1);
        if (v.is_zero()) return 0;
        const ExtReal fd = (f.eval(x + eps, order).logmag() - f.eval(x - eps, order).logmag()) / (2 * eps);
        const ExtReal exact = dv.is_zero() ? ExtReal(0) : ExtReal(dv.sign() * v.sign()) * bmp::exp(dv.logmag() - v.logmag());
        return (bmp::abs(fd - exact) / std::max(bmp::abs(exact), ExtReal(1) / x)).convert_to<long double>();
    };
    std::ostringstream os;
    bool pass = true;
    for (const auto& c : cases) {
        long double w1 = 0, w2 = 0;
        for (int i = 0; i < 100; ++i) {
            const ExtReal x = ExtReal(c.lo) * bmp::pow(ExtReal(c.hi / c.lo), ExtReal(i) / 99);
            const ExtReal eps = x * ExtReal(c.step);
            w1 = std::max(w1, rel_err(c.f, 0, x, eps));
            w2 = std::max(w2, rel_err(c.f, 1, x, eps));
        }
        const bool ok = w1 <= kFdRel1 && w2 <= kFdRel2;
        pass = pass && ok;
        os << c.f.name().substr(0, 14) << " " << num(w1, 2) << "/" << num(w2, 2) << (ok ? "" : " FAIL") << "; ";
    }
    return {pass, os.str()};
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
};

std::set<int> parse_ids(const std::string& text) {
    std::set<int> out;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');)
        if (!part.empty()) out.insert(std::stoi(part));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only, expect_fail;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg.starts_with("--only=")) only = parse_ids(arg.substr(7));
        else if (arg.starts_with("--expect-fail=")) expect_fail = parse_ids(arg.substr(14));
        else {
            std::cerr << "usage: acceptance [--only=ids] [--expect-fail=ids]\n";
            return 2;
        }
    }
    const std::vector<Criterion> criteria = {
        {1, "constant c", constant_c_check},
        {2, "decay lower bound", decay_lower_bound},
        {3, "Lipschitz approximation", lipschitz},
        {4, "first-factor exactness", first_factors},
        {5, "end-to-end slow decay", end_to_end},
        {6, "equidistribution, scaled", equidistribution},
        {7, "pushforward identity and affine covariance", pushforward_covariance},
        {8, "near-zero mechanism", near_zero},
        {9, "schedule conclusions audit", schedule_audit},
        {10, "conjugate sign structure", conjugate_signs},
        {11, "example reproduction", example_reproduction},
        {12, "derivative oracles", derivative_oracles},
    };
    std::set<int> failed;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.contains(c.id)) continue;
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (!out.pass) failed.insert(c.id);
        std::printf("AC%-2d %s  %s: %s [%.2f s]%s\n", c.id, out.pass ? "PASS" : "FAIL", c.title, out.detail.c_str(),
                    seconds_since(t0), !out.pass && expect_fail.contains(c.id) ? " (expected)" : "");
        std::fflush(stdout);
        if (c.id == 6) equidistribution_head_variant();
    }
    std::set<int> expected;
    for (int id : expect_fail)
        if (only.empty() || only.contains(id)) expected.insert(id);
    std::printf("%zu criteria failed", failed.size());
    if (failed != expected) {
        std::printf("; expected failures were {");
        for (int id : expected) std::printf(" %d", id);
        std::printf(" }\n");
        return 1;
    }
    std::printf(", all expected\n");
    return 0;
}
