#include "cli_support.hpp"

#include "slowft/equidistribution.hpp"
#include "slowft/errors.hpp"

#include <iostream>
#include <sstream>

namespace slowft::cli {
namespace {

// Schedule file: {"M": [...]} plus optional "head_value", "psi" and "gamma"
// (build-psi-gamma output carries all of them).
struct ScaledInputs {
    ScaledTowerSchedule schedule;
    PsiSchedule psi;
    std::optional<GammaDigits> gamma;
};

ScaledInputs load_scaled(const std::string& path, const std::string& M, const std::string& head) {
    ScaledInputs in;
    nlohmann::json j = nlohmann::json::object();
    if (!path.empty()) {
        j = read_json(path);
        in.schedule = scaled_schedule_from_json(j);
    } else if (!M.empty()) {
        in.schedule.M = parse_long_list(M);
        validate_schedule(in.schedule);
    } else {
        in.schedule = ScaledTowerSchedule::defaults();
    }
    PsiOptions options;
    if (!head.empty()) options.head_value = parse_rational(head);
    else if (j.contains("head_value")) options.head_value = parse_rational(j.at("head_value").get<std::string>());
    in.psi = j.contains("psi") ? psi_from_json(j.at("psi")) : build_psi(in.schedule, options);
    if (j.contains("gamma")) in.gamma = gamma_from_string(j.at("gamma").get<std::string>());
    return in;
}

std::vector<Rational> sample_points(const ScaledTowerSchedule& schedule, int depth, std::vector<Coding>* codings) {
    if (depth < 0 || depth > 14) throw ValidationError("sample depth must lie in [0, 14]");
    const Rational t = scaled_t(schedule);
    auto all = all_codings(depth);
    std::vector<Rational> xs;
    xs.reserve(all.size());
    for (const auto& c : all) xs.push_back(point_from_coding(t, c));
    if (codings) *codings = std::move(all);
    return xs;
}

nlohmann::json psi_summary(const PsiSchedule& psi, long N) {
    const Rational total = psi.prefix_sum(std::min(N, psi.horizon()));
    return {{"N", N}, {"Psi_N", to_string(total)}, {"Psi_N_float", fmt(to_long_double(total))},
            {"escapes_triviality", total > 1}};
}

class BuildPsiGamma : public Command {
public:
    BuildPsiGamma() : Command("build-psi-gamma", "Build psi and a gamma avoiding every sampled orbit") {}

    void add_options(CLI::App& app) override {
        app.add_option("--schedule", schedule_, "scaled schedule JSON {\"M\": [...]}")->check(CLI::ExistingFile);
        app.add_option("--M", M_, "digit positions, comma separated (instead of --schedule)");
        app.add_option("--head-value", head_, "first psi block value in (0, 1/5]");
        app.add_option("--depth", depth_, "sample all codings of this length");
        app.add_option("--N", N_, "largest n checked")->check(CLI::PositiveNumber);
        app.add_option("--first-digit", first_digit_, "digit filling gamma's first block");
    }

    int run(RunContext& ctx) override {
        const auto in = load_scaled(schedule_, M_, head_);
        const auto xs = sample_points(in.schedule, depth_, nullptr);
        ctx.phase("samples");
        GammaOptions options;
        options.first_digit = first_digit_;
        options.jobs = ctx.jobs();
        const auto gamma = build_gamma(in.schedule, in.psi, xs, N_, options);
        ctx.phase("gamma");
        const auto validation = validate_schedule(in.schedule);
        nlohmann::json growth = nlohmann::json::array();
        for (const auto& g : growth_diagnostics(in.schedule, in.psi))
            growth.push_back({{"j", g.j}, {"N", g.N}, {"log_ratio", fmt(g.log_ratio)}, {"floor", fmt(g.floor)},
                              {"lower_bound_ok", g.lower_bound_ok}, {"below_identity", g.below_identity}});
        nlohmann::json out = scaled_schedule_to_json(in.schedule);
        if (!head_.empty()) out["head_value"] = to_string(parse_rational(head_));
        out["psi"] = psi_to_json(in.psi);
        out["gamma"] = gamma.to_string();
        out["sample_depth"] = depth_;
        out["samples"] = xs.size();
        out["n_max"] = N_;
        out["schedule_checks"] = {{"gaps_ok", validation.gaps_ok}, {"counting_bound", validation.counting_bound}};
        out["psi_sum"] = psi_summary(in.psi, N_);
        out["growth"] = growth;
        ctx.write_json("psi_gamma.json", out);
        std::cout << "gamma digits: " << gamma.digits.size() << ", samples: " << xs.size() << ", Psi(" << N_
                  << ") = " << out["psi_sum"]["Psi_N_float"].get<std::string>() << "\n";
        return kExitOk;
    }

private:
    std::string schedule_, M_, head_;
    int depth_ = 6;
    long N_ = 300;
    int first_digit_ = 5;
};

class RCountCmd : public Command {
public:
    RCountCmd() : Command("r-count", "Count n <= N with the orbit of x within psi(n) of gamma") {}

    void add_options(CLI::App& app) override {
        app.add_option("--schedule", schedule_, "scaled schedule or build-psi-gamma JSON")->check(CLI::ExistingFile);
        app.add_option("--M", M_, "digit positions, comma separated (instead of --schedule)");
        app.add_option("--head-value", head_, "first psi block value in (0, 1/5]");
        app.add_option("--gamma", gamma_, "gamma digits (overrides the schedule file)");
        app.add_option("--depth", depth_, "all codings of this length");
        app.add_option("--N", N_, "orbit length")->check(CLI::PositiveNumber);
        app.add_option("--first-digit", first_digit_, "digit filling gamma's first block when gamma is built here");
    }

    int run(RunContext& ctx) override {
        auto in = load_scaled(schedule_, M_, head_);
        std::vector<Coding> codings;
        const auto xs = sample_points(in.schedule, depth_, &codings);
        if (!gamma_.empty()) in.gamma = gamma_from_string(gamma_);
        if (!in.gamma) {
            GammaOptions options;
            options.first_digit = first_digit_;
            options.jobs = ctx.jobs();
            in.gamma = build_gamma(in.schedule, in.psi, xs, N_, options);
        }
        ctx.phase("setup");
        const auto counts = r_count_batch(xs, N_, in.gamma->value(), in.psi, 10, ctx.jobs());
        ctx.phase("count");
        std::ostringstream csv;
        csv << "x_coding,N,R,first_violation_n\n";
        long violations = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            csv << to_string(codings[i]) << ',' << N_ << ',' << counts[i].count << ',' << counts[i].first_violation
                << '\n';
            if (counts[i].count != 0) ++violations;
        }
        ctx.write("r_count.csv", csv.str());
        nlohmann::json report = {{"points", counts.size()},     {"N", N_},
                                 {"gamma", in.gamma->to_string()}, {"violations", violations},
                                 {"psi_sum", psi_summary(in.psi, N_)}, {"pass", violations == 0}};
        ctx.write_json("r_count.json", report);
        std::cout << "points: " << counts.size() << ", violations: " << violations << ", Psi(" << N_
                  << ") = " << report["psi_sum"]["Psi_N_float"].get<std::string>() << "\n";
        return violations == 0 ? kExitOk : kExitFailed;
    }

private:
    std::string schedule_, M_, head_, gamma_;
    int depth_ = 10;
    long N_ = 300;
    int first_digit_ = 5;
};

}  // namespace

void add_equidistribution_commands(CommandList& list) {
    list.push_back(std::make_unique<BuildPsiGamma>());
    list.push_back(std::make_unique<RCountCmd>());
}

}  // namespace slowft::cli
