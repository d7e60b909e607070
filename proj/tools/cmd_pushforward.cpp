#include "cli_support.hpp"

#include "slowft/errors.hpp"
#include "slowft/pushforward.hpp"

#include <iostream>
#include <sstream>

namespace slowft::cli {
namespace {

// Measure, map and integration controls shared by the pushforward commands.
struct PushforwardInputs {
    std::string preset = "cantor", ifs, map = "identity", bump_schedule, region;
    long double tol = 1e-8L, leaf_eps = 0;
    std::size_t leaf_budget = 100'000'000;
    bool plain_leaves = false;

    void add(CLI::App& app, const std::string& default_map, long double default_tol) {
        map = default_map;
        app.add_option("--preset", preset, "measure preset: cantor, t:p/q, digits:b:d,...");
        app.add_option("--ifs", ifs, "IFS JSON file")->check(CLI::ExistingFile);
        app.add_option("--map", map, "smooth map: identity, affine:a,b, h, x+h, polyflat:m, integrated, integrated+x");
        app.add_option("--bump-schedule", bump_schedule, "bump schedule JSON for schedule maps");
        add_tolerance(app, tol, default_tol);
        app.add_option("--leaf-eps", leaf_eps, "per-leaf error threshold (0: tol / 4)");
        app.add_option("--leaf-budget", leaf_budget, "maximum leaves per integral");
        app.add_flag("--plain-leaves", plain_leaves, "disable tangent-line leaves");
        app.add_option("--region", region, "restrict mu to lo:hi");
    }

    PushforwardOptions options(unsigned jobs) const {
        PushforwardOptions o;
        o.leaf_eps = leaf_eps;
        o.linearize = !plain_leaves;
        o.leaf_budget = leaf_budget;
        o.jobs = jobs;
        if (!region.empty()) o.region = parse_interval(region);
        return o;
    }
};

std::vector<long double> float_frequencies(const std::vector<std::string>& list, const std::string& grid,
                                           std::vector<std::string>* text) {
    std::vector<long double> out;
    for (const auto& q : collect_frequencies(list, grid)) {
        out.push_back(to_float_frequency(q));
        if (text) text->push_back(to_decimal_string(q));
    }
    return out;
}

class FtPushforward : public Command {
public:
    FtPushforward() : Command("ft-pushforward", "Fourier transform of the pushforward of mu under a smooth map") {}

    void add_options(CLI::App& app) override {
        in_.add(app, "identity", 1e-8L);
        app.add_option("--xi", xi_, "frequency: 123, 10^L or p/q (repeatable)");
        app.add_option("--xi-grid", grid_, "base:lo:hi, frequencies base^k");
        app.add_option("--cuts", cuts_, "x1:x2, report near/middle/far regions at the first frequency");
    }

    int run(RunContext& ctx) override {
        const auto ifs = load_measure(in_.preset, in_.ifs);
        const auto f = load_map(in_.map, in_.bump_schedule);
        std::vector<std::string> text;
        const auto freqs = float_frequencies(xi_, grid_, &text);
        const auto options = in_.options(ctx.jobs());
        std::ostringstream csv;
        csv << "xi,re,im,err,modulus,leaf_count,linear_leaf_count,boundary_mass\n";
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            const auto r = pushforward_ft(ifs, f, freqs[i], in_.tol, options);
            csv << text[i] << ',' << fmt(r.re) << ',' << fmt(r.im) << ',' << fmt(r.err, 6) << ',' << fmt(r.modulus())
                << ',' << r.leaf_count << ',' << r.linear_leaf_count << ',' << fmt(r.boundary_mass, 6) << '\n';
        }
        ctx.phase("integrate");
        ctx.write("ft_pushforward.csv", csv.str());
        std::cout << csv.str();
        if (cuts_.empty()) return kExitOk;

        const auto cut = parse_interval(cuts_);
        const auto rep = region_report(ifs, f, freqs.front(), cut.lo, cut.hi, in_.tol, options);
        ctx.phase("regions");
        auto part = [](const OscIntegralResult& r) {
            return nlohmann::json{{"re", fmt(r.re)}, {"im", fmt(r.im)}, {"err", fmt(r.err, 6)},
                                  {"modulus", fmt(r.modulus())}, {"boundary_mass", fmt(r.boundary_mass, 6)}};
        };
        ctx.write_json("region_report.json",
                       {{"xi", text.front()},
                        {"x1", to_string(cut.lo)},
                        {"x2", to_string(cut.hi)},
                        {"near", part(rep.near)},
                        {"middle_mass_lower", to_string(rep.middle_mass.lower)},
                        {"middle_mass_upper", to_string(rep.middle_mass.upper)},
                        {"far", part(rep.far)},
                        {"full", part(rep.full)},
                        {"min_second_derivative_far", rep.min_second_deriv_far.to_string()},
                        {"bracket_gap", fmt(rep.bracket_gap, 6)},
                        {"bracket_holds", rep.bracket_holds}});
        return rep.bracket_holds ? kExitOk : kExitFailed;
    }

private:
    PushforwardInputs in_;
    std::vector<std::string> xi_;
    std::string grid_, cuts_;
};

class DecayProfileCmd : public Command {
public:
    DecayProfileCmd() : Command("decay-profile", "Pushforward Fourier modulus along a frequency grid") {}

    void add_options(CLI::App& app) override {
        in_.add(app, "identity", 1e-8L);
        app.add_option("--xi", xi_, "frequency (repeatable)");
        app.add_option("--xi-grid", grid_, "base:lo:hi, frequencies base^k");
    }

    int run(RunContext& ctx) override {
        const auto ifs = load_measure(in_.preset, in_.ifs);
        const auto f = load_map(in_.map, in_.bump_schedule);
        const auto freqs = float_frequencies(xi_, grid_, nullptr);
        const auto profile = decay_profile(ifs, f, freqs, in_.tol, in_.options(ctx.jobs()));
        ctx.phase("profile");
        std::ostringstream csv;
        write_decay_profile_csv(csv, profile);
        ctx.write("decay_profile.csv", csv.str());
        const nlohmann::json report = {{"map", f.name()},
                                       {"rows", profile.rows.size()},
                                       {"slope", fmt(profile.slope)},
                                       {"fitted", profile.fitted},
                                       {"min_modulus", fmt(profile.min_modulus)},
                                       {"max_modulus", fmt(profile.max_modulus)},
                                       {"modulus_spread", fmt(profile.max_modulus - profile.min_modulus, 6)}};
        ctx.write_json("decay_profile.json", report);
        std::cout << csv.str() << "slope: " << report["slope"].get<std::string>() << "\n";
        return kExitOk;
    }

private:
    PushforwardInputs in_;
    std::vector<std::string> xi_;
    std::string grid_;
};

class NearZeroCheckCmd : public Command {
public:
    NearZeroCheckCmd() : Command("near-zero-check", "Integral over the level-n zero cylinder at xi = j b^k_n") {}

    void add_options(CLI::App& app) override {
        in_.add(app, "polyflat:8", 1e-8L);
        app.add_option("--n", levels_, "levels, comma separated");
        app.add_option("--j", j_, "frequency multiplier")->check(CLI::PositiveNumber);
    }

    int run(RunContext& ctx) override {
        const auto ifs = load_measure(in_.preset, in_.ifs);
        const auto f = load_map(in_.map, in_.bump_schedule);
        auto options = in_.options(ctx.jobs());
        if (options.region) throw ValidationError("near-zero-check fixes its own region");
        std::ostringstream csv;
        csv << "n,j,k_kind,k,log_k_bound,xi,modulus,err,threshold,margin,skipped,pass,note\n";
        bool pass = true;
        std::size_t evaluated = 0;
        for (long n : parse_long_list(levels_)) {
            if (n < 1 || n > 60) throw ValidationError("--n levels must lie in [1, 60]");
            const auto r = near_zero_check(ifs, f, static_cast<int>(n), j_, in_.tol, options);
            if (!r.skipped) {
                ++evaluated;
                pass = pass && r.pass;
            }
            csv << r.n << ',' << r.j << ',' << to_string(r.k.kind) << ',' << r.k.k << ','
                << format_ext(r.k.log_bound, 20) << ',' << fmt(r.xi, 21) << ',' << fmt(r.modulus) << ','
                << fmt(r.integral.err, 6) << ',' << fmt(r.threshold) << ',' << fmt(r.margin) << ',' << r.skipped << ','
                << r.pass << ",\"" << r.note << "\"\n";
        }
        ctx.phase("check");
        ctx.write("near_zero.csv", csv.str());
        ctx.write_json("near_zero.json", {{"map", f.name()}, {"evaluated", evaluated}, {"pass", pass}});
        std::cout << csv.str();
        return pass ? kExitOk : kExitFailed;
    }

private:
    PushforwardInputs in_;
    std::string levels_ = "2,3,4";
    long j_ = 1;
};

}  // namespace

void add_pushforward_commands(CommandList& list) {
    list.push_back(std::make_unique<FtPushforward>());
    list.push_back(std::make_unique<DecayProfileCmd>());
    list.push_back(std::make_unique<NearZeroCheckCmd>());
}

}  // namespace slowft::cli
