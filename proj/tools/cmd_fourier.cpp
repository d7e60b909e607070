#include "cli_support.hpp"

#include "slowft/errors.hpp"
#include "slowft/fourier.hpp"
#include "slowft/slowdecay.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <iostream>
#include <sstream>

namespace slowft::cli {
namespace {

// Smallest n with t 10^n an integer, when one exists.
std::optional<unsigned> decimal_places(const Rational& t) {
    Integer den = t.get_den();
    unsigned n = 0;
    while (den != 1) {
        if (!mpz_divisible_ui_p(den.get_mpz_t(), 10)) {
            if (mpz_divisible_ui_p(den.get_mpz_t(), 2)) den *= 5;
            else if (mpz_divisible_ui_p(den.get_mpz_t(), 5)) den *= 2;
            else return std::nullopt;
        }
        den /= 10;
        ++n;
    }
    return n;
}

// L when xi = 10^L exactly.
std::optional<unsigned long> power_of_ten(const Rational& xi) {
    if (xi.get_den() != 1 || xi <= 0) return std::nullopt;
    const std::string s = xi.get_num().get_str(10);
    if (s[0] != '1' || s.find_first_not_of('0', 1) != std::string::npos) return std::nullopt;
    return s.size() - 1;
}

class FtSelfsim : public Command {
public:
    FtSelfsim() : Command("ft-selfsim", "Fourier transform of a self-similar measure at exact frequencies") {}

    void add_options(CLI::App& app) override {
        app.add_option("--t", t_, "parameter of mu_t (p/q); overrides --preset/--ifs");
        app.add_option("--preset", preset_, "measure preset: cantor, t:p/q, digits:b:d,...");
        app.add_option("--ifs", ifs_, "IFS JSON file")->check(CLI::ExistingFile);
        app.add_option("--xi", xi_, "frequency: 123, 10^L or p/q (repeatable)");
        app.add_option("--xi-grid", grid_, "base:lo:hi, frequencies base^k");
        add_tolerance(app, tol_, 1e-12L);
        app.add_option("--mantissa-bits", bits_, "phase precision for exact frequencies (64, 128, 256)");
    }

    int run(RunContext& ctx) override {
        const auto freqs = collect_frequencies(xi_, grid_);
        std::optional<Rational> t;
        if (!t_.empty()) t = parse_rational(t_);
        const SelfSimilarIFS ifs = t ? mu_t_ifs(*t) : load_measure(preset_, ifs_);
        const bool homogeneous = ifs.homogeneous_base().has_value();
        const auto places = t ? decimal_places(*t) : std::nullopt;
        const long n = places ? static_cast<long>(*places) : -1;
        FtOptions options;
        options.mantissa_bits = bits_;

        std::vector<DecayScanRow> rows;
        nlohmann::json checks = nlohmann::json::array();
        bool all_pass = true;
        for (const auto& q : freqs) {
            const auto start = std::chrono::steady_clock::now();
            const ExactFrequency xi(q);
            FourierValue v;
            if (t) v = ft_mu_t(*t, xi, tol_, options);
            else if (homogeneous) v = ft_homogeneous(ifs, xi, tol_, options);
            else v = ft_general(ifs, to_float_frequency(q), tol_);
            DecayScanRow row{xi.to_decimal(), v, 0};
            if (ctx.timing()) row.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                                           std::chrono::steady_clock::now() - start).count();
            rows.push_back(row);
            // Lower bound c 3^-n at xi = 10^L, L > n, for t = p/10^n.
            const auto L = power_of_ten(q);
            if (n >= 0 && L && static_cast<long>(*L) > n) {
                const long double bound =
                    constant_c().ext.convert_to<long double>() * std::pow(3.0L, -static_cast<long double>(n));
                const bool pass = v.modulus() - v.err >= bound - tol_;
                all_pass = all_pass && pass;
                checks.push_back({{"xi", row.xi}, {"modulus", fmt(v.modulus())}, {"err", fmt(v.err, 6)},
                                  {"bound", fmt(bound)}, {"pass", pass}});
            }
        }
        ctx.phase("evaluate");
        std::ostringstream csv;
        write_decay_csv(csv, rows);
        ctx.write("ft_selfsim.csv", csv.str());
        ctx.write_json("ft_selfsim.json", {{"measure", ifs_to_json(ifs)},
                                           {"rows", rows.size()},
                                           {"lower_bound_checks", checks},
                                           {"pass", all_pass}});
        std::cout << csv.str();
        return all_pass ? kExitOk : kExitFailed;
    }

private:
    std::string t_, preset_ = "cantor", ifs_, grid_;
    std::vector<std::string> xi_;
    long double tol_ = 1e-12L;
    int bits_ = 64;
};

class ConstructT : public Command {
public:
    ConstructT() : Command("construct-t", "Build a Liouville parameter schedule for a target decay") {}

    void add_options(CLI::App& app) override {
        app.add_option("--phi", phi_, "decay preset: log, loglog, ilog:k, power:a, const:k, table:<csv>");
        app.add_option("--depth", depth_, "number of schedule terms")->check(CLI::PositiveNumber);
        app.add_option("--first-k", first_k_, "first digit position")->check(CLI::PositiveNumber);
        app.add_option("--prefix-digit-budget", prefix_budget_, "largest k materialized in t_prefix");
        app.add_option("--max-tower-height", max_height_, "tower height budget for L");
    }

    int run(RunContext& ctx) override {
        const auto phi = DecayFunction::parse(phi_);
        ScheduleOptions options;
        options.first_k = first_k_;
        options.prefix_digit_budget = prefix_budget_;
        options.max_tower_height = max_height_;
        const auto schedule = build_liouville_t(phi, depth_, options);
        ctx.phase("construct");
        ctx.write_json("schedule.json", liouville_to_json(schedule));
        std::cout << "m,k,L,method,doubling,membership\n";
        for (std::size_t m = 1; m <= schedule.depth(); ++m) {
            const auto& e = schedule.entries[m - 1];
            std::cout << m << ',' << e.k.to_string() << ',' << e.L.to_string() << ',' << e.method << ','
                      << e.doubling_certified << ',' << e.membership_certified << '\n';
        }
        return schedule.fully_certified() ? kExitOk : kExitFailed;
    }

private:
    std::string phi_ = "loglog";
    std::size_t depth_ = 3;
    long first_k_ = 1;
    long prefix_budget_ = 100'000;
    int max_height_ = 64;
};

class VerifyLowerBound : public Command {
public:
    VerifyLowerBound() : Command("verify-lower-bound", "Check |mu_hat_t(10^L)| against c 3^-n and phi(10^L)") {}

    void add_options(CLI::App& app) override {
        app.add_option("--schedule", schedule_, "schedule JSON from construct-t")->check(CLI::ExistingFile);
        app.add_option("--phi", phi_, "decay preset (defaults to the schedule's)");
        app.add_option("--t", t_, "parameter p/10^n for a direct check");
        app.add_option("--L", L_, "exponents L (repeatable) for a direct check");
        add_tolerance(app, tol_, 1e-12L);
        app.add_option("--slack", slack_, "allowed shortfall in direct checks");
        app.add_option("--max-L-eval", max_L_, "largest L evaluated");
    }

    int run(RunContext& ctx) override {
        VerifyOptions options;
        options.tol = tol_;
        options.slack = slack_;
        options.max_L_eval = max_L_;
        std::ostringstream csv;
        csv << "index,t,L,modulus,err,lemma_bound,phi_bound,tail_penalty,evaluated,pass\n";
        auto opt = [](const std::optional<long double>& v) { return v ? fmt(*v) : std::string(); };
        auto emit = [&](const std::string& index, const LowerBoundReport& r, bool evaluated) {
            csv << index << ',' << r.t << ',' << r.L << ',' << fmt(r.modulus) << ',' << fmt(r.err, 6) << ','
                << opt(r.lemma_bound) << ',' << opt(r.phi_bound) << ',' << fmt(r.tail_penalty, 6) << ','
                << evaluated << ',' << r.pass << '\n';
        };
        nlohmann::json report;
        bool pass = true;
        if (!schedule_.empty()) {
            const auto schedule = liouville_from_json(read_json(schedule_));
            const std::string phi_name = phi_.empty() ? schedule.phi_name : phi_;
            const auto phi = DecayFunction::parse(phi_name);
            const bool certificates = recheck_schedule(schedule, phi);
            const auto results = verify_schedule(schedule, phi, options, ctx.jobs());
            std::size_t evaluated = 0, failed = 0;
            for (const auto& iv : results) {
                LowerBoundReport r = iv.report;
                if (!iv.evaluated) {
                    r.L = schedule.entries[iv.index - 1].L.to_string();
                    r.t = "";
                } else {
                    ++evaluated;
                    if (!r.pass) ++failed;
                }
                emit(std::to_string(iv.index), r, iv.evaluated);
            }
            pass = certificates && failed == 0;
            report = {{"mode", "schedule"}, {"phi", phi_name}, {"certificates", certificates},
                      {"indices", results.size()}, {"evaluated", evaluated}, {"failed", failed}};
        } else {
            if (t_.empty() || L_.empty()) throw ValidationError("give --schedule, or --t with --L");
            const Rational t = parse_rational(t_);
            const auto n = decimal_places(t);
            if (!n) throw ValidationError("--t must be p/10^n");
            std::optional<DecayFunction> phi;
            if (!phi_.empty()) phi = DecayFunction::parse(phi_);
            std::size_t failed = 0;
            for (std::size_t i = 0; i < L_.size(); ++i) {
                const auto r = verify_lower_bound(t, *n, parse_integer(L_[i]), phi ? &*phi : nullptr, options);
                if (!r.pass) ++failed;
                emit(std::to_string(i + 1), r, true);
            }
            pass = failed == 0;
            report = {{"mode", "direct"}, {"t", to_decimal_string(t)}, {"n", *n}, {"checks", L_.size()},
                      {"failed", failed}};
        }
        ctx.phase("verify");
        report["pass"] = pass;
        ctx.write("verify_lower_bound.csv", csv.str());
        ctx.write_json("verify_lower_bound.json", report);
        std::cout << csv.str();
        return pass ? kExitOk : kExitFailed;
    }

private:
    std::string schedule_, phi_, t_;
    std::vector<std::string> L_;
    long double tol_ = 1e-12L, slack_ = 1e-9L;
    long max_L_ = 10'000;
};

class RajchmanStatusCmd : public Command {
public:
    RajchmanStatusCmd() : Command("rajchman-status", "Classify mu_t as Rajchman, non-Rajchman or unknown") {}

    void add_options(CLI::App& app) override {
        app.add_option("--t", t_, "rational parameter p/q");
        app.add_option("--schedule", schedule_, "Liouville schedule JSON")->check(CLI::ExistingFile);
        app.add_option("--loglog-tower", tower_, "check the loglog rule at k = 10^^n");
    }

    int run(RunContext& ctx) override {
        nlohmann::json report = nlohmann::json::object();
        if (!t_.empty()) {
            const Rational t = parse_rational(t_);
            report["t"] = to_string(t);
            report["status"] = to_string(rajchman_status_mu_t(t));
        }
        if (!schedule_.empty()) {
            const auto schedule = liouville_from_json(read_json(schedule_));
            const bool certificates = recheck_schedule(schedule, DecayFunction::parse(schedule.phi_name));
            report["schedule_status"] = certificates ? to_string(rajchman_status_mu_t(schedule)) : "unknown";
            report["schedule_certificates"] = certificates;
        }
        if (!tower_.empty()) {
            const int n = parse_tower_height(tower_);
            const Certainty c = loglog_tower_rule(n);
            report["tower_rule"] = {{"n", n},
                                    {"holds", c == Certainty::Greater},
                                    {"certainty", c == Certainty::Greater ? "certified" : "undecided"}};
        }
        if (report.empty()) throw ValidationError("give --t, --schedule or --loglog-tower");
        ctx.write_json("rajchman_status.json", report);
        std::cout << report.dump(2) << "\n";
        return kExitOk;
    }

private:
    std::string t_, schedule_, tower_;
};

}  // namespace

void add_fourier_commands(CommandList& list) {
    list.push_back(std::make_unique<FtSelfsim>());
    list.push_back(std::make_unique<ConstructT>());
    list.push_back(std::make_unique<VerifyLowerBound>());
    list.push_back(std::make_unique<RajchmanStatusCmd>());
}

}  // namespace slowft::cli
