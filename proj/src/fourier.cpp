#include "slowft/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

namespace slowft {
namespace {

constexpr long double kLdEps = 0x1p-64L;
// Per-factor rounding allowance in units of the working epsilon: sin/cos,
// weighting, summation of up to a handful of atoms and one complex product.
constexpr long double kFactorUlps = 16.0L;

template <class T>
T from_integer(const Integer& z) {
    if constexpr (std::is_same_v<T, long double>) {
        return to_long_double(z);
    } else {
        T out;
        mpfr_set_z(out.backend().data(), z.get_mpz_t(), MPFR_RNDN);
        return out;
    }
}

template <class T>
int mantissa_of() {
    if constexpr (std::is_same_v<T, long double>) return 64;
    else return static_cast<int>(std::numeric_limits<T>::digits);
}

// r/m in [0,1) rounded to the precision of T.
template <class T>
T fraction_value(const Integer& r, const Integer& m) {
    const int bits = mantissa_of<T>() + 2;
    Integer s = r;
    mpz_mul_2exp(s.get_mpz_t(), s.get_mpz_t(), static_cast<unsigned long>(bits));
    mpz_tdiv_q(s.get_mpz_t(), s.get_mpz_t(), m.get_mpz_t());
    T v = from_integer<T>(s);
    if constexpr (std::is_same_v<T, long double>) return std::ldexp(v, -bits);
    else return ldexp(v, -bits);
}

template <class T>
T two_pi() {
    if constexpr (std::is_same_v<T, long double>) return kTwoPi;
    else return 2 * boost::math::constants::pi<T>();
}

struct ExactAtom {
    Integer num;  // xi * d_a = num / den
    Integer den;
};

// Reduced phase of atom a at level j: frac(num / (den b^j)) = r / m.
void reduced_phase(const ExactAtom& atom, const Integer& bj, Integer& r, Integer& m) {
    m = atom.den * bj;
    mpz_fdiv_r(r.get_mpz_t(), atom.num.get_mpz_t(), m.get_mpz_t());
}

template <class T>
class ZeroPhaseWeights {
public:
    explicit ZeroPhaseWeights(const std::vector<Rational>& probs) : probs_(probs) {}
    void reset() {
        sum_ = 0;
        any_ = false;
    }
    void add(std::size_t a) {
        sum_ += probs_[a];
        any_ = true;
    }
    T value() const {
        if (!any_) return T(0);
        return from_integer<T>(sum_.get_num()) / from_integer<T>(sum_.get_den());
    }

private:
    const std::vector<Rational>& probs_;
    Rational sum_ = 0;
    bool any_ = false;
};

template <class T>
FourierValue exact_product(long base, const std::vector<ExactAtom>& atoms, const std::vector<Rational>& probs,
                           unsigned long J) {
    std::vector<T> w;
    for (const auto& p : probs) w.push_back(from_integer<T>(p.get_num()) / from_integer<T>(p.get_den()));
    // Atoms with integral phase contribute their exact rational weight, so a
    // factor whose phases all vanish is exactly 1.
    ZeroPhaseWeights<T> zero_weight(probs);
    T re = 1, im = 0;
    Integer bj = 1, r, m;
    const T tp = two_pi<T>();
    for (unsigned long j = 1; j <= J; ++j) {
        bj *= base;
        T fre = 0, fim = 0;
        zero_weight.reset();
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            reduced_phase(atoms[a], bj, r, m);
            if (r == 0) {
                zero_weight.add(a);
                continue;
            }
            T theta = fraction_value<T>(r, m);
            if (theta > T(0.5)) theta -= 1;
            const T ang = tp * theta;
            using std::cos;
            using std::sin;
            fre += w[a] * cos(ang);
            fim += w[a] * sin(ang);
        }
        fre += zero_weight.value();
        const T nre = re * fre - im * fim;
        const T nim = re * fim + im * fre;
        re = nre;
        im = nim;
    }
    FourierValue out;
    if constexpr (std::is_same_v<T, long double>) {
        out.re = re;
        out.im = im;
    } else {
        out.re = re.template convert_to<long double>();
        out.im = im.template convert_to<long double>();
    }
    const long double eps = std::ldexp(1.0L, -mantissa_of<T>());
    out.err = static_cast<long double>(J) * kFactorUlps * eps + 4.0L * kLdEps;
    return out;
}

long double digit_mass(const std::vector<long double>& digits, const std::vector<long double>& probs) {
    long double m = 0;
    for (std::size_t a = 0; a < digits.size(); ++a) m += probs[a] * std::fabs(digits[a]);
    return m;
}

long double truncation_error(long base, long double mass, long double log_abs_xi, unsigned long J) {
    if (mass == 0) return 0;
    const long double logE = std::log(kTwoPi * mass / static_cast<long double>(base - 1)) + log_abs_xi -
                             static_cast<long double>(J) * std::log(static_cast<long double>(base));
    if (logE > 700) return std::numeric_limits<long double>::infinity();
    return std::expm1(std::exp(logE));
}

void check_inputs(long base, std::size_t ndigits, std::size_t nprobs, long double tol) {
    if (!(tol > 0)) throw std::domain_error("tolerance must be positive");
    if (base < 2) throw ValidationError("base must be >= 2");
    if (ndigits == 0 || ndigits != nprobs) throw ValidationError("digits and probs must be non-empty and equal length");
}

}  // namespace

long double ExactFrequency::log_abs() const {
    return slowft::log_abs(value_.get_num()) - slowft::log_abs(value_.get_den());
}

long double FourierValue::modulus() const { return std::hypot(re, im); }

unsigned long truncation_index(long base, long double mass, long double log_abs_xi, long double tol) {
    if (mass == 0) return 0;
    const long double target = std::log(std::log1p(tol / 2));
    const long double lb = std::log(static_cast<long double>(base));
    const long double need =
        (std::log(kTwoPi * mass / static_cast<long double>(base - 1)) + log_abs_xi - target) / lb;
    unsigned long J = need <= 0 ? 0ul : static_cast<unsigned long>(std::ceil(need));
    while (truncation_error(base, mass, log_abs_xi, J) > tol / 2) ++J;
    return J;
}

FourierValue ft_homogeneous(long base, const std::vector<Rational>& digits, const std::vector<Rational>& probs,
                            const ExactFrequency& xi, long double tol, const FtOptions& options) {
    check_inputs(base, digits.size(), probs.size(), tol);
    for (const auto& d : digits)
        if (d < 0 || d > base - 1) throw ValidationError("digit outside [0, base-1]");
    if (xi.is_zero()) return {};

    std::vector<long double> dl, pl;
    std::vector<ExactAtom> atoms;
    for (std::size_t a = 0; a < digits.size(); ++a) {
        dl.push_back(to_long_double(digits[a]));
        pl.push_back(to_long_double(probs[a]));
        Rational prod = xi.value() * digits[a];
        prod.canonicalize();
        atoms.push_back({prod.get_num(), prod.get_den()});
    }
    const long double mass = digit_mass(dl, pl);
    const long double lx = xi.log_abs();
    const unsigned long J = truncation_index(base, mass, lx, tol);

    FourierValue out;
    switch (options.mantissa_bits) {
        case 64: out = exact_product<long double>(base, atoms, probs, J); break;
        case 128: out = exact_product<Real128>(base, atoms, probs, J); break;
        case 256: out = exact_product<ExtReal>(base, atoms, probs, J); break;
        default: throw ValidationError("mantissa_bits must be 64, 128 or 256");
    }
    out.err += truncation_error(base, mass, lx, J);
    return out;
}

FourierValue ft_homogeneous(long base, const std::vector<long double>& digits, const std::vector<long double>& probs,
                            long double xi, long double tol) {
    check_inputs(base, digits.size(), probs.size(), tol);
    if (xi == 0) return {};
    const long double mass = digit_mass(digits, probs);
    const long double lx = std::log(std::fabs(xi));
    const unsigned long J = truncation_index(base, mass, lx, tol);
    const long double b = static_cast<long double>(base);

    long double re = 1, im = 0, phase_err = 0;
    long double scale = 1;
    for (unsigned long j = 1; j <= J; ++j) {
        scale /= b;
        long double fre = 0, fim = 0;
        for (std::size_t a = 0; a < digits.size(); ++a) {
            const long double x = xi * digits[a] * scale;
            long double theta = x - std::nearbyint(x);
            fre += probs[a] * std::cos(kTwoPi * theta);
            fim += probs[a] * std::sin(kTwoPi * theta);
            phase_err += probs[a] * kTwoPi * std::fabs(x) * static_cast<long double>(j + 3) * kLdEps;
        }
        const long double nre = re * fre - im * fim;
        im = re * fim + im * fre;
        re = nre;
    }
    FourierValue out{re, im, 0};
    out.err = static_cast<long double>(J) * kFactorUlps * kLdEps + phase_err + truncation_error(base, mass, lx, J);
    return out;
}

FourierValue ft_homogeneous(const SelfSimilarIFS& ifs, const ExactFrequency& xi, long double tol,
                            const FtOptions& options) {
    const auto b = ifs.homogeneous_base();
    if (!b) throw ValidationError("IFS is not homogeneous with ratio 1/b");
    std::vector<Rational> digits;
    for (const auto& m : ifs.maps()) digits.push_back(m.translation() * *b);
    return ft_homogeneous(*b, digits, ifs.probs(), xi, tol, options);
}

FourierValue ft_homogeneous(const SelfSimilarIFS& ifs, long double xi, long double tol) {
    const auto b = ifs.homogeneous_base();
    if (!b) throw ValidationError("IFS is not homogeneous with ratio 1/b");
    std::vector<long double> digits, probs;
    for (std::size_t a = 0; a < ifs.size(); ++a) {
        digits.push_back(to_long_double(Rational(ifs.map(a).translation() * *b)));
        probs.push_back(to_long_double(ifs.probs()[a]));
    }
    return ft_homogeneous(*b, digits, probs, xi, tol);
}

FourierValue ft_mu_t(const Rational& t, const ExactFrequency& xi, long double tol, const FtOptions& options) {
    if (t < 0 || t > 1) throw ValidationError("t must lie in [0,1]");
    const Rational third(1, 3);
    return ft_homogeneous(10, {Rational(0), Rational(1), t}, {third, third, third}, xi, tol, options);
}

FourierValue ft_mu_t(long double t, long double xi, long double tol) {
    if (t < 0 || t > 1) throw ValidationError("t must lie in [0,1]");
    const long double third = 1.0L / 3.0L;
    return ft_homogeneous(10, {0.0L, 1.0L, t}, {third, third, third}, xi, tol);
}

ProductFactor homogeneous_factor(long base, const std::vector<Rational>& digits, const std::vector<Rational>& probs,
                                 const ExactFrequency& xi, unsigned long j) {
    check_inputs(base, digits.size(), probs.size(), 1);
    const Integer bj = pow_int(base, j);
    ProductFactor f;
    long double re = 0, im = 0;
    ZeroPhaseWeights<long double> zero_weight(probs);
    for (std::size_t a = 0; a < digits.size(); ++a) {
        Rational prod = xi.value() * digits[a];
        prod.canonicalize();
        Integer r, m;
        reduced_phase({prod.get_num(), prod.get_den()}, bj, r, m);
        Rational ph(r, m);
        ph.canonicalize();
        f.phases.push_back(ph);
        const long double w = to_long_double(probs[a]);
        if (r == 0) {
            zero_weight.add(a);
            continue;
        }
        long double theta = fraction_value<long double>(r, m);
        if (theta > 0.5L) theta -= 1;
        re += w * std::cos(kTwoPi * theta);
        im += w * std::sin(kTwoPi * theta);
    }
    f.value = {re + zero_weight.value(), im};
    return f;
}

ProductFactor mu_t_factor(const Rational& t, const ExactFrequency& xi, unsigned long j) {
    const Rational third(1, 3);
    return homogeneous_factor(10, {Rational(0), Rational(1), t}, {third, third, third}, xi, j);
}

namespace {

class GeneralEvaluator {
public:
    GeneralEvaluator(const SelfSimilarIFS& ifs, long double xi, long double tol, const GeneralFtOptions& opt)
        : ifs_(ifs), xi_(xi), tol_(tol), opt_(opt) {
        mean_ = to_long_double(ifs.mean());
        spread_ = std::max(mean_ - to_long_double(ifs.hull().lo), to_long_double(ifs.hull().hi) - mean_);
        for (std::size_t a = 0; a < ifs.size(); ++a) {
            p_.push_back(to_long_double(ifs.probs()[a]));
            d_.push_back(to_long_double(ifs.map(a).translation()));
        }
    }

    FourierValue eval(const Rational& ratio) {
        if (auto it = memo_.find(ratio); it != memo_.end()) return it->second;
        const long double x = xi_ * to_long_double(ratio);
        FourierValue v;
        if (exhausted_) {
            v = {0, 0, 1};
        } else {
            const long double q = kTwoPi * std::fabs(x) * spread_;
            const long double base_err = std::min(q, q * q / 2);
            if (std::fabs(x) <= opt_.xi_base && base_err <= tol_ / 2) {
                const long double th = x * mean_;
                v = {std::cos(kTwoPi * (th - std::nearbyint(th))), std::sin(kTwoPi * (th - std::nearbyint(th))),
                     base_err + kTwoPi * std::fabs(th) * 4 * kLdEps + 4 * kLdEps};
            } else {
                long double re = 0, im = 0, err = 0;
                for (std::size_t a = 0; a < ifs_.size(); ++a) {
                    const FourierValue child = eval(ratio * ifs_.map(a).ratio());
                    const long double ph = x * d_[a];
                    const long double th = ph - std::nearbyint(ph);
                    const long double c = std::cos(kTwoPi * th), s = std::sin(kTwoPi * th);
                    re += p_[a] * (c * child.re - s * child.im);
                    im += p_[a] * (s * child.re + c * child.im);
                    err += p_[a] * (child.err + kTwoPi * std::fabs(ph) * 4 * kLdEps);
                }
                v = {re, im, err + 8 * kLdEps};
            }
        }
        memo_.emplace(ratio, v);
        if (memo_.size() > opt_.node_budget) exhausted_ = true;
        return v;
    }

    bool exhausted() const { return exhausted_; }

private:
    const SelfSimilarIFS& ifs_;
    long double xi_, tol_;
    GeneralFtOptions opt_;
    long double mean_ = 0, spread_ = 0;
    std::vector<long double> p_, d_;
    std::map<Rational, FourierValue> memo_;
    bool exhausted_ = false;
};

}  // namespace

FourierValue ft_general(const SelfSimilarIFS& ifs, long double xi, long double tol, const GeneralFtOptions& options) {
    if (!(tol > 0)) throw std::domain_error("tolerance must be positive");
    if (!std::isfinite(xi)) throw ValidationError("frequency must be finite");
    if (xi == 0) return {};
    GeneralEvaluator ev(ifs, xi, tol, options);
    const FourierValue v = ev.eval(Rational(1));
    if (ev.exhausted()) throw FourierBudgetExceeded("ft_general exceeded its node budget", v);
    return v;
}

FourierValue ft_product(const std::vector<FourierValue>& values) {
    if (values.empty()) throw ValidationError("ft_product needs at least one value");
    Complex acc = values.front().value();
    long double bound = values.front().modulus() + values.front().err;
    long double exact = values.front().modulus();
    for (std::size_t i = 1; i < values.size(); ++i) {
        acc *= values[i].value();
        bound *= values[i].modulus() + values[i].err;
        exact *= values[i].modulus();
    }
    FourierValue out{acc.real(), acc.imag(), 0};
    out.err = (bound - exact) + static_cast<long double>(values.size()) * 8 * kLdEps;
    return out;
}

void write_decay_csv(std::ostream& out, const std::vector<DecayScanRow>& rows) {
    out << "xi,re,im,modulus,err,wall_ns\n";
    for (const auto& r : rows) {
        out << r.xi << ',' << format_real(r.value.re, 19) << ',' << format_real(r.value.im, 19) << ','
            << format_real(r.value.modulus(), 19) << ',' << format_real(r.value.err, 6) << ',' << r.wall_ns << '\n';
    }
}

}  // namespace slowft
