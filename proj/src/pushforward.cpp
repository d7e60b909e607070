#include "slowft/pushforward.hpp"

#include "slowft/parallel.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>

namespace slowft {
namespace {

namespace bmp = boost::multiprecision;

constexpr long double kUlp = std::numeric_limits<long double>::epsilon();

bool h_family(const SmoothMapSpec& f) {
    return f.variant() == SmoothMapSpec::Variant::ExplicitH || f.variant() == SmoothMapSpec::Variant::ExplicitXPlusH;
}

long double eval_ld(const SmoothMapSpec& f, long double x, int order) {
    using V = SmoothMapSpec::Variant;
    switch (f.variant()) {
        case V::Identity:
            return order == 0 ? x : (order == 1 ? 1.0L : 0.0L);
        case V::Affine: {
            const long double a = to_long_double(f.slope());
            return order == 0 ? a * x + to_long_double(f.offset()) : (order == 1 ? a : 0.0L);
        }
        case V::PolyFlat: {
            const int m = f.degree();
            if (order == 0) return x + std::pow(x, m);
            if (order == 1) return 1 + m * std::pow(x, m - 1);
            return static_cast<long double>(m) * (m - 1) * std::pow(x, m - 2);
        }
        default:
            break;
    }
    if (h_family(f)) {
        if (x < 0) throw ValidationError("h is only defined for x >= 0");
        const bool plus = f.variant() == V::ExplicitXPlusH;
        const long double base = order == 0 ? (plus ? x : 0.0L) : (order == 1 && plus ? 1.0L : 0.0L);
        if (x == 0) return base;
        const long double q = 1 / (x * x);
        // exp(-exp(q)) underflows long double once exp(q) passes ~11400.
        if (q > 9.5L) return base;
        const long double e = std::exp(q), lx = std::log(x);
        if (order == 0) return base + std::exp(-e);
        if (order == 1) return base + std::exp(std::log(2.0L) - 3 * lx + q - e);
        const long double k = 4 * e - 6 * x * x - 4;
        if (k == 0) return 0;
        return std::copysign(std::exp(q - 6 * lx + std::log(std::fabs(k)) - e), k);
    }
    return f.eval(ExtReal(x), order).to_long_double();
}

// Relative accuracy of eval_ld: exp(-e) carries e ulps for the h family.
long double eval_rel_err(const SmoothMapSpec& f) { return h_family(f) ? 1e-14L : 16 * kUlp; }

// h'' is unimodal on (0, 1]; its peak by golden-section search.
struct HPeak {
    long double x = 0, value = 0;
};
const HPeak& h_second_peak() {
    static const HPeak peak = [] {
        const auto h2 = [](long double x) { return eval_ld(SmoothMapSpec::explicit_h(), x, 2); };
        const long double g = (std::sqrt(5.0L) - 1) / 2;
        long double lo = 0.5L, hi = 1.0L;
        while (hi - lo > 1e-12L) {
            const long double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
            (h2(m1) < h2(m2) ? lo : hi) = h2(m1) < h2(m2) ? m1 : m2;
        }
        return HPeak{(lo + hi) / 2, h2((lo + hi) / 2)};
    }();
    return peak;
}

struct Neumaier {
    long double sum = 0, comp = 0;
    void add(long double x) {
        const long double t = sum + x;
        comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    long double value() const { return sum + comp; }
};

struct Accumulator {
    Neumaier re, im, err, boundary;
    std::size_t leaves = 0, linear = 0, depth = 0;

    void merge(const Accumulator& o) {
        re.add(o.re.value());
        im.add(o.im.value());
        err.add(o.err.value());
        boundary.add(o.boundary.value());
        leaves += o.leaves;
        linear += o.linear;
        depth = std::max(depth, o.depth);
    }
    OscIntegralResult result() const {
        OscIntegralResult r;
        r.re = re.value();
        r.im = im.value();
        // Final rounding of the compensated sums.
        r.err = err.value() * (1 + 4 * kUlp) + 4 * kUlp * (std::fabs(r.re) + std::fabs(r.im));
        r.leaf_count = leaves;
        r.linear_leaf_count = linear;
        r.depth_max = depth;
        r.boundary_mass = boundary.value();
        return r;
    }
};

struct Node {
    long double ratio = 1, shift = 0, weight = 1;
    std::vector<std::uint32_t> letters;
};

enum class Place { Outside, Inside, Straddle };

class Engine {
public:
    Engine(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, long double xi, long double eps,
           const PushforwardOptions& opt)
        : ifs_(ifs), f_(f), xi_(xi), eps_(eps), opt_(opt) {
        for (std::size_t a = 0; a < ifs.size(); ++a) {
            ratio_.push_back(to_long_double(ifs.map(a).ratio()));
            shift_.push_back(to_long_double(ifs.map(a).translation()));
            prob_.push_back(to_long_double(ifs.probs()[a]));
        }
        h0_ = to_long_double(ifs.hull().lo);
        h1_ = to_long_double(ifs.hull().hi);
        homogeneous_ = ifs.homogeneous_base().has_value();
        rel_ = eval_rel_err(f);
        if (opt.region) {
            lo_ = to_long_double(opt.region->lo);
            hi_ = to_long_double(opt.region->hi);
        }
        if (!derivative_bound(f, std::min(h0_, 0.0L), std::max(h1_, 0.0L), 1)) {
            throw ValidationError("no first-derivative bound for map " + f.name() + " on the attractor hull");
        }
    }

    // Handles a terminal node or fills its children.
    bool step(const Node& node, Accumulator& acc, std::vector<Node>& kids) {
        acc.depth = std::max(acc.depth, node.letters.size());
        long double a = node.ratio * h0_ + node.shift, b = node.ratio * h1_ + node.shift;
        if (a > b) std::swap(a, b);
        const Place place = opt_.region ? locate(node, a, b) : Place::Inside;
        if (place == Place::Outside) return true;
        const long double diam = b - a;
        const long double two_pi_xi = kTwoPi * std::fabs(xi_);
        if (place == Place::Straddle) {
            if (node.weight <= eps_) {
                acc.boundary.add(node.weight);
                acc.err.add(node.weight);
                count_leaf(acc);
                return true;
            }
        } else {
            const long double mid = (a + b) / 2;
            const long double m1 = *derivative_bound(f_, a, b, 1);
            if (two_pi_xi * m1 * diam / 2 <= eps_) {
                plain_leaf(node, mid, two_pi_xi * m1 * diam / 2, acc);
                return true;
            }
            if (opt_.linearize) {
                const auto m2 = derivative_bound(f_, a, b, 2);
                if (m2 && two_pi_xi * *m2 * diam * diam / 8 <= eps_) {
                    linear_leaf(node, mid, two_pi_xi * *m2 * diam * diam / 8, acc);
                    return true;
                }
            }
        }
        if (node.letters.size() >= 400 || diam == 0) {
            throw PushforwardBudgetExceeded("pushforward subdivision exhausted long double resolution", acc.result());
        }
        for (std::size_t k = 0; k < ratio_.size(); ++k) {
            Node child;
            child.ratio = node.ratio * ratio_[k];
            child.shift = node.ratio * shift_[k] + node.shift;
            child.weight = node.weight * prob_[k];
            child.letters = node.letters;
            child.letters.push_back(static_cast<std::uint32_t>(k));
            kids.push_back(std::move(child));
        }
        return false;
    }

    void run(const Node& node, Accumulator& acc) {
        std::vector<Node> kids;
        if (step(node, acc, kids)) return;
        for (const auto& kid : kids) run(kid, acc);
    }

private:
    Place locate(const Node& node, long double a, long double b) const {
        const long double slack = 1e-15L * (1 + std::fabs(lo_) + std::fabs(hi_));
        const bool ambiguous = std::fabs(a - lo_) <= slack || std::fabs(b - lo_) <= slack ||
                               std::fabs(a - hi_) <= slack || std::fabs(b - hi_) <= slack;
        if (!ambiguous) {
            if (b <= lo_ || a >= hi_) return Place::Outside;
            if (a >= lo_ && b <= hi_) return Place::Inside;
            return Place::Straddle;
        }
        const Interval h = node.letters.empty() ? ifs_.hull() : ifs_.cylinder_hull(compose_word(ifs_, Word{node.letters}));
        const Interval& r = *opt_.region;
        // Touching in one point carries no mass.
        if (h.hi <= r.lo || h.lo >= r.hi) return Place::Outside;
        if (h.lo >= r.lo && h.hi <= r.hi) return Place::Inside;
        return Place::Straddle;
    }

    void count_leaf(Accumulator& acc) {
        ++acc.leaves;
        if (++leaves_ > opt_.leaf_budget) {
            throw PushforwardBudgetExceeded("pushforward leaf budget exceeded", acc.result());
        }
    }

    static long double reduce(long double turns) { return turns - std::nearbyint(turns); }

    void plain_leaf(const Node& node, long double mid, long double approx_err, Accumulator& acc) {
        const long double fm = eval_ld(f_, mid, 0);
        const long double turns = xi_ * fm;
        const long double phase = kTwoPi * reduce(turns);
        acc.re.add(node.weight * std::cos(phase));
        acc.im.add(node.weight * std::sin(phase));
        const long double rounding = kTwoPi * (8 * kUlp * (std::fabs(turns) + 1) + rel_ * std::fabs(turns));
        acc.err.add(node.weight * (approx_err + rounding));
        count_leaf(acc);
    }

    void linear_leaf(const Node& node, long double mid, long double approx_err, Accumulator& acc) {
        const long double fm = eval_ld(f_, mid, 0), slope = eval_ld(f_, mid, 1);
        // f(m) + f'(m)(x - m) on x = ratio * y + shift.
        const long double turns = xi_ * (fm + slope * (node.shift - mid));
        const long double freq = xi_ * slope * node.ratio;
        const long double ft_tol = eps_ / 4;
        const FourierValue inner = homogeneous_ ? ft_homogeneous(ifs_, freq, ft_tol) : ft_general(ifs_, freq, ft_tol);
        const Complex rot = std::polar(1.0L, kTwoPi * reduce(turns));
        const Complex v = node.weight * rot * inner.value();
        acc.re.add(v.real());
        acc.im.add(v.imag());
        const long double reach = std::max(std::fabs(h0_), std::fabs(h1_));
        const long double rounding = kTwoPi * (8 * kUlp + rel_) *
                                     (std::fabs(xi_) * (std::fabs(fm) + std::fabs(slope) * (std::fabs(node.shift) + std::fabs(mid))) +
                                      std::fabs(freq) * reach + 1);
        acc.err.add(node.weight * (approx_err + inner.err + rounding));
        ++acc.linear;
        count_leaf(acc);
    }

    const SelfSimilarIFS& ifs_;
    const SmoothMapSpec& f_;
    long double xi_, eps_;
    const PushforwardOptions& opt_;
    std::vector<long double> ratio_, shift_, prob_;
    long double h0_ = 0, h1_ = 1, lo_ = 0, hi_ = 1;
    bool homogeneous_ = false;
    long double rel_ = 0;
    std::atomic<std::size_t> leaves_{0};
};

// Frontier size for parallel work; fixed so results do not depend on --jobs.
constexpr std::size_t kFrontier = 256;

}  // namespace

long double OscIntegralResult::modulus() const { return std::hypot(re, im); }

std::optional<long double> derivative_bound(const SmoothMapSpec& f, long double a, long double b, int order) {
    using V = SmoothMapSpec::Variant;
    if (order != 1 && order != 2) throw ValidationError("derivative_bound order must be 1 or 2");
    if (a > b) std::swap(a, b);
    const long double u = std::max(std::fabs(a), std::fabs(b));
    constexpr long double widen = 1 + 64 * kUlp;
    switch (f.variant()) {
        case V::Identity:
        case V::Affine:
            return std::fabs(eval_ld(f, 0, order));
        case V::PolyFlat:
            return std::fabs(eval_ld(f, u, order)) * widen;
        case V::IntegratedF:
            // f' = [1] + sum c K1 and f'' = sum c W, both nondecreasing in |x|.
            return std::fabs(eval_ld(f, u, order)) * widen;
        case V::ExplicitH:
        case V::ExplicitXPlusH:
            // h'' > 0 on (0, 1], so h' is increasing there; h'' rises to one peak and falls.
            if (a < 0 || b > 1) return std::nullopt;
            if (order == 1) return std::fabs(eval_ld(f, b, 1)) * widen;
            {
                const HPeak& peak = h_second_peak();
                if (b <= peak.x) return eval_ld(f, b, 2) * widen;
                if (a >= peak.x) return eval_ld(f, a, 2) * widen;
                return peak.value * (1 + 1e-12L);
            }
        case V::BumpSumG:
            return std::nullopt;
    }
    return std::nullopt;
}

OscIntegralResult pushforward_ft(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, long double xi, long double tol,
                                 const PushforwardOptions& options) {
    if (!(tol > 0)) throw ValidationError("tolerance must be positive");
    if (!std::isfinite(xi) || std::fabs(xi) > 1e17L) throw ValidationError("frequency outside the long double range");
    if (options.region && options.region->lo > options.region->hi) {
        throw ValidationError("region endpoints out of order");
    }
    const long double eps = options.leaf_eps > 0 ? options.leaf_eps : tol / 4;
    Engine engine(ifs, f, xi, eps, options);

    // Breadth-first split into a fixed frontier, then independent subtrees.
    Accumulator head;
    std::deque<Node> queue;
    queue.push_back(Node{});
    std::vector<Node> kids;
    while (!queue.empty() && queue.size() < kFrontier) {
        Node node = std::move(queue.front());
        queue.pop_front();
        kids.clear();
        if (!engine.step(node, head, kids)) {
            for (auto& k : kids) queue.push_back(std::move(k));
        }
    }
    std::vector<Node> tasks(std::make_move_iterator(queue.begin()), std::make_move_iterator(queue.end()));
    std::vector<Accumulator> parts(tasks.size());
    parallel_for(tasks.size(), options.jobs, [&](std::size_t i) { engine.run(tasks[i], parts[i]); });
    for (const auto& p : parts) head.merge(p);
    return head.result();
}

RegionReport region_report(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, long double xi, const Rational& x1,
                           const Rational& x2, long double tol, const PushforwardOptions& options) {
    if (!(0 <= x1 && x1 <= x2 && x2 <= 1)) throw ValidationError("region cuts must satisfy 0 <= x1 <= x2 <= 1");
    RegionReport rep;
    PushforwardOptions opt = options;
    opt.region = Interval{0, x1};
    rep.near = pushforward_ft(ifs, f, xi, tol, opt);
    opt.region = Interval{x2, 1};
    rep.far = pushforward_ft(ifs, f, xi, tol, opt);
    opt.region.reset();
    rep.full = pushforward_ft(ifs, f, xi, tol, opt);
    rep.middle_mass = measure_interval(ifs, {x1, x2}, Rational(1, 1000000));
    const LogDomainReal at_x2 = f.eval(to_ext(x2), 2).abs(), at_one = f.eval(ExtReal(1), 2).abs();
    rep.min_second_deriv_far = min(at_x2, at_one);
    const Complex gap = rep.full.value() - rep.near.value() - rep.far.value();
    rep.bracket_gap = std::abs(gap);
    rep.bracket_holds = rep.bracket_gap <= to_long_double(rep.middle_mass.upper) + rep.full.err + rep.near.err +
                                               rep.far.err + 16 * kUlp;
    return rep;
}

std::string to_string(FrequencyIndex::Kind kind) {
    switch (kind) {
        case FrequencyIndex::Kind::Finite: return "finite";
        case FrequencyIndex::Kind::Symbolic: return "symbolic";
        case FrequencyIndex::Kind::Unbounded: return "unbounded";
    }
    return "?";
}

namespace {

long base_of(const SelfSimilarIFS& ifs) {
    const auto b = ifs.homogeneous_base();
    if (!b) throw ValidationError("IFS must be homogeneous with ratio 1/b");
    return *b;
}

// f(x) - x without cancelling the flat part where its form is known.
LogDomainReal flat_excess(const SmoothMapSpec& f, const ExtReal& x) {
    using V = SmoothMapSpec::Variant;
    switch (f.variant()) {
        case V::Identity:
            return {};
        case V::Affine:
            return LogDomainReal((to_ext(f.slope()) - 1) * x + to_ext(f.offset()));
        case V::PolyFlat:
            return LogDomainReal(bmp::pow(x, f.degree()));
        case V::ExplicitXPlusH:
            return SmoothMapSpec::explicit_h().eval(x, 0);
        case V::IntegratedF:
            if (f.with_linear_term()) return SmoothMapSpec::integrated(f.schedule(), false).eval(x, 0);
            break;
        default:
            break;
    }
    return f.eval(x, 0) - LogDomainReal(x);
}

}  // namespace

FrequencyIndex select_kn(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, int n, long j, const Complex& c_mu) {
    if (n < 1) throw ValidationError("n must be positive");
    if (j < 1) throw ValidationError("j must be positive");
    const long b = base_of(ifs);
    if (std::abs(c_mu) == 0) throw ValidationError("degenerate-frequency: c_mu = 0, choose a different j");
    FrequencyIndex out;
    const ExtReal x = bmp::pow(ExtReal(b), -n);
    out.excess = flat_excess(f, x);
    if (out.excess.is_zero()) {
        out.kind = FrequencyIndex::Kind::Unbounded;
        return out;
    }
    if (out.excess.sign() < 0) throw ValidationError("f(b^-n) - b^-n must be positive");
    const ExtReal target = bmp::log(ExtReal("0.01") * ExtReal(std::abs(c_mu)) / j);
    out.bound = (target - out.excess.logmag()) / bmp::log(ExtReal(b));
    if (out.bound > 0) out.log_bound = bmp::log(out.bound);
    if (out.bound > ExtReal("1e18")) {
        out.kind = FrequencyIndex::Kind::Symbolic;
        return out;
    }
    out.k = bmp::floor(out.bound).convert_to<long>();
    return out;
}

NearZeroReport near_zero_check(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, int n, long j, long double tol,
                               const PushforwardOptions& options) {
    const long b = base_of(ifs);
    if (ifs.map(0).translation() != 0) throw ValidationError("the first map must fix 0");
    NearZeroReport rep;
    rep.n = n;
    rep.j = j;
    rep.c_mu = ft_homogeneous(ifs, ExactFrequency(j), tol / 100).value();
    rep.k = select_kn(ifs, f, n, j, rep.c_mu);
    long k = rep.k.k;
    switch (rep.k.kind) {
        case FrequencyIndex::Kind::Symbolic:
            rep.skipped = true;
            rep.note = "k_n symbolic with ln k = " + format_ext(rep.k.log_bound, 12) + "; frequency beyond float range";
            return rep;
        case FrequencyIndex::Kind::Unbounded:
            k = n;
            rep.note = "f(b^-n) = b^-n, every k qualifies; using k = n";
            break;
        case FrequencyIndex::Kind::Finite:
            break;
    }
    const long double xi = static_cast<long double>(j) * std::pow(static_cast<long double>(b), k);
    if (k < 0 || xi > 1e17L) {
        rep.skipped = true;
        rep.note = "k_n = " + std::to_string(k) + " gives a frequency outside the float-feasible range";
        return rep;
    }
    rep.xi = xi;
    PushforwardOptions opt = options;
    opt.region = Interval{0, Rational(1) / Rational(pow_int(b, static_cast<unsigned long>(n)))};
    rep.integral = pushforward_ft(ifs, f, xi, tol, opt);
    Word zeros;
    zeros.letters.assign(static_cast<std::size_t>(n), 0);
    const long double mass = to_long_double(word_weight(ifs, zeros));
    rep.modulus = rep.integral.modulus();
    rep.threshold = 0.9L * mass * std::abs(rep.c_mu);
    rep.margin = rep.modulus + rep.integral.err - rep.threshold;
    rep.pass = rep.margin >= 0;
    return rep;
}

long double fit_slope(const std::vector<long double>& x, const std::vector<long double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs at least two points");
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0) throw ValidationError("slope fit needs distinct abscissae");
    return sxy / sxx;
}

DecayProfile decay_profile(const SelfSimilarIFS& ifs, const SmoothMapSpec& f, const std::vector<long double>& xi_grid,
                           long double tol, const PushforwardOptions& options) {
    DecayProfile prof;
    std::vector<long double> lx, ly;
    for (const long double xi : xi_grid) {
        DecayProfileRow row{format_real(xi, 21), xi, pushforward_ft(ifs, f, xi, tol, options)};
        const long double m = row.value.modulus();
        if (prof.rows.empty()) prof.min_modulus = prof.max_modulus = m;
        prof.min_modulus = std::min(prof.min_modulus, m);
        prof.max_modulus = std::max(prof.max_modulus, m);
        if (xi > 0 && m > row.value.err) {
            lx.push_back(std::log(xi));
            ly.push_back(std::log(m));
        }
        prof.rows.push_back(std::move(row));
    }
    prof.fitted = lx.size();
    if (lx.size() >= 2) prof.slope = fit_slope(lx, ly);
    return prof;
}

void write_decay_profile_csv(std::ostream& out, const DecayProfile& profile) {
    out << "xi,re,im,err,modulus,leaf_count\n";
    for (const auto& r : profile.rows) {
        out << r.xi_text << ',' << format_real(r.value.re) << ',' << format_real(r.value.im) << ','
            << format_real(r.value.err, 6) << ',' << format_real(r.value.modulus()) << ',' << r.value.leaf_count
            << '\n';
    }
}

}  // namespace slowft
