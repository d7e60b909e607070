#include "cli_support.hpp"

#include "slowft/errors.hpp"
#include "slowft/smoothmaps.hpp"

#include <boost/multiprecision/mpfr.hpp>

#include <iostream>
#include <map>
#include <sstream>

namespace slowft::cli {
namespace {

void write_checks(std::ostream& out, const std::vector<InequalityCheck>& checks) {
    out << "name,n,j,margin,required,pass\n";
    for (const auto& c : checks)
        out << c.name << ',' << c.n << ',' << c.j << ',' << format_ext(c.margin, 25) << ','
            << format_ext(c.required, 25) << ',' << c.pass << '\n';
}

// Failing indices grouped by check name.
nlohmann::json failures(const std::vector<InequalityCheck>& checks) {
    std::map<std::string, std::vector<std::size_t>> by_name;
    for (const auto& c : checks)
        if (!c.pass) by_name[c.name].push_back(c.n);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, idx] : by_name) out[name] = idx;
    return out;
}

std::size_t count_failed(const std::vector<InequalityCheck>& checks) {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.pass; }));
}

class BuildScheduleCmd : public Command {
public:
    BuildScheduleCmd() : Command("build-schedule", "Build and audit a bump schedule for a decay rate psi") {}

    void add_options(CLI::App& app) override {
        app.add_option("--psi", psi_, "decay rate: exp or envelope:<phi preset>");
        app.add_option("--variant", variant_, "lemma-fix or prop-pushforward");
        app.add_option("--terms", terms_, "number of bump terms")->check(CLI::PositiveNumber);
        app.add_option("--first-neg-log", first_neg_log_, "xi_1 is the first xi with -ln psi at least this");
    }

    int run(RunContext& ctx) override {
        const auto psi = DecayRate::parse(psi_);
        BuildScheduleOptions options;
        options.first_neg_log = ExtReal(first_neg_log_);
        const auto schedule = build_schedule(psi, parse_schedule_variant(variant_), terms_, options);
        ctx.phase("build");
        const auto audit = audit_schedule(schedule, psi);
        ctx.phase("audit");
        ctx.write_json("bump_schedule.json", schedule_to_json(schedule));
        std::ostringstream csv;
        write_checks(csv, audit);
        ctx.write("audit.csv", csv.str());
        const std::size_t failed = count_failed(audit);
        ctx.write_json("build_schedule.json", {{"psi", psi.name}, {"variant", variant_}, {"terms", terms_},
                                               {"audit_checks", audit.size()}, {"audit_failed", failed},
                                               {"failing", failures(audit)}, {"pass", failed == 0}});
        std::cout << "terms: " << terms_ << ", audit checks: " << audit.size() << ", failed: " << failed << "\n";
        return failed == 0 ? kExitOk : kExitFailed;
    }

private:
    std::string psi_ = "exp", variant_ = "lemma-fix", first_neg_log_ = "3";
    std::size_t terms_ = 20;
};

class VerifyScheduleCmd : public Command {
public:
    VerifyScheduleCmd() : Command("verify-schedule", "Check the schedule conclusions in log-domain arithmetic") {}

    void add_options(CLI::App& app) override {
        app.add_option("--schedule", schedule_, "bump schedule JSON")->required()->check(CLI::ExistingFile);
        app.add_option("--corrupt-c", corrupt_, "n:k multiplies c_n by 10^k (negative control)");
    }

    int run(RunContext& ctx) override {
        BumpSchedule schedule = schedule_from_json(read_json(schedule_));
        if (!corrupt_.empty()) {
            const auto colon = corrupt_.find(':');
            if (colon == std::string::npos) throw ValidationError("--corrupt-c takes n:k");
            const Integer n = parse_integer(corrupt_.substr(0, colon));
            if (n < 1 || n > static_cast<long>(schedule.terms())) throw ValidationError("--corrupt-c index out of range");
            const ExtReal log_factor = to_ext(parse_rational(corrupt_.substr(colon + 1))) * boost::multiprecision::log(ExtReal(10));
            schedule.c[n.get_ui() - 1] *= LogDomainReal::exp(log_factor);
        }
        const auto psi = DecayRate::parse(schedule.psi_name);
        const auto audit = audit_schedule(schedule, psi);
        ctx.phase("audit");
        const auto verification = verify_schedule(schedule, ctx.jobs());
        ctx.phase("verify");
        std::ostringstream csv;
        write_checks(csv, verification.checks);
        ctx.write("verification.csv", csv.str());
        std::ostringstream audit_csv;
        write_checks(audit_csv, audit);
        ctx.write("audit.csv", audit_csv.str());
        const std::size_t failed = count_failed(verification.checks), audit_failed = count_failed(audit);
        const bool pass = failed == 0 && audit_failed == 0;
        ctx.write_json("verify_schedule.json",
                       {{"terms", schedule.terms()}, {"variant", to_string(schedule.variant)},
                        {"checks", verification.checks.size()}, {"failed", failed}, {"failing", failures(verification.checks)},
                        {"audit_checks", audit.size()}, {"audit_failed", audit_failed},
                        {"audit_failing", failures(audit)}, {"corrupted", corrupt_}, {"pass", pass}});
        std::cout << "checks: " << verification.checks.size() << ", failed: " << failed
                  << ", audit failed: " << audit_failed << "\n";
        return pass ? kExitOk : kExitFailed;
    }

private:
    std::string schedule_, corrupt_;
};

class ZeroScanCmd : public Command {
public:
    ZeroScanCmd() : Command("zero-scan", "Sign changes of the conjugated second derivative S''") {}

    void add_options(CLI::App& app) override {
        app.add_option("--map", map_, "smooth map: identity, affine:a,b, h, x+h, polyflat:m, bump-sum, integrated");
        app.add_option("--bump-schedule", bump_schedule_, "bump schedule JSON for schedule maps");
        app.add_option("--preset", preset_, "measure preset providing the branches");
        app.add_option("--ifs", ifs_, "IFS JSON file")->check(CLI::ExistingFile);
        app.add_option("--branch", branch_, "index of the branch T scanned");
        app.add_option("--lo", lo_, "scan start in x");
        app.add_option("--hi", hi_, "scan end in x");
        app.add_option("--grid", grid_, "grid points")->check(CLI::PositiveNumber);
        app.add_option("--bracket-width", width_, "bisection width for brackets");
        app.add_option("--near-zero-points", near_points_, "profile points x = 2^-k");
        app.add_option("--threshold-max-index", threshold_max_, "sign threshold search depth (0 skips)");
    }

    int run(RunContext& ctx) override {
        const auto f = load_map(map_, bump_schedule_);
        const auto ifs = load_measure(preset_, ifs_);
        if (branch_ >= ifs.size()) throw ValidationError("--branch out of range");
        const auto T = AffineContraction::from(ifs.map(branch_));
        ZeroScanOptions options;
        options.bracket_width = width_;
        options.near_zero_points = near_points_;
        const auto scan = zero_scan(f, T, ExtReal(lo_), ExtReal(hi_), grid_, options, ctx.jobs());
        ctx.phase("scan");
        std::ostringstream csv;
        csv << "x_lo,x_hi,y_lo,y_hi\n";
        for (const auto& b : scan.brackets)
            csv << format_ext(b.x_lo, 25) << ',' << format_ext(b.x_hi, 25) << ',' << format_ext(b.y_lo, 25) << ','
                << format_ext(b.y_hi, 25) << '\n';
        ctx.write("zero_scan.csv", csv.str());
        std::ostringstream near;
        near << "x,sign\n";
        for (const auto& [x, sign] : scan.near_zero) near << fmt(x) << ',' << sign << '\n';
        ctx.write("near_zero_profile.csv", near.str());

        nlohmann::json report = {{"map", f.name()},
                                 {"branch", branch_},
                                 {"brackets", scan.brackets.size()},
                                 {"refined_count", scan.refined_count},
                                 {"stable", scan.stable},
                                 {"negative", scan.negative},
                                 {"positive", scan.positive},
                                 {"zero", scan.zero},
                                 {"uncertain", scan.uncertain}};
        if (threshold_max_ > 0) {
            std::optional<AffineContraction> zero_branch;
            std::vector<AffineContraction> others;
            for (const auto& m : ifs.maps()) {
                if (m.translation() == 0 && !zero_branch) zero_branch = AffineContraction::from(m);
                else others.push_back(AffineContraction::from(m));
            }
            if (!zero_branch) throw ValidationError("sign threshold needs a branch with zero translation");
            const auto th = find_sign_threshold(f, *zero_branch, others, threshold_max_);
            report["threshold"] = {{"found", th.found}, {"index", th.index}, {"x0", format_ext(th.x0, 25)},
                                   {"y0", format_ext(th.y0, 25)}};
            ctx.phase("threshold");
        }
        ctx.write_json("zero_scan.json", report);
        std::cout << report.dump(2) << "\n";
        return scan.stable ? kExitOk : kExitFailed;
    }

private:
    std::string map_ = "x+h", bump_schedule_, preset_ = "cantor", ifs_;
    std::string lo_ = "0.001", hi_ = "1";
    std::size_t branch_ = 0;
    int grid_ = 2000;
    long double width_ = 1e-12L;
    int near_points_ = 12;
    int threshold_max_ = 0;
};

class RecurrenceWordCmd : public Command {
public:
    RecurrenceWordCmd() : Command("recurrence-word", "Shortest word mapping part of Z back into Z") {}

    void add_options(CLI::App& app) override {
        app.add_option("--preset", preset_, "measure preset");
        app.add_option("--ifs", ifs_, "IFS JSON file")->check(CLI::ExistingFile);
        app.add_option("--zone", zones_, "interval lo:hi of Z (repeatable)")->required();
        app.add_option("--max-depth", max_depth_, "longest word tried")->check(CLI::PositiveNumber);
        app.add_option("--measure-tol", tol_, "measure enclosure tolerance (rational)");
    }

    int run(RunContext& ctx) override {
        const auto ifs = load_measure(preset_, ifs_);
        std::vector<Interval> Z;
        for (const auto& z : zones_) Z.push_back(parse_interval(z));
        const auto found = recurrence_zero_word(Z, ifs, max_depth_, parse_rational(tol_));
        ctx.phase("search");
        nlohmann::json report = {{"found", found.has_value()}, {"max_depth", max_depth_}};
        if (found) {
            // Letters are reported 1-based.
            nlohmann::json letters = nlohmann::json::array();
            for (auto a : found->word.letters) letters.push_back(a + 1);
            nlohmann::json overlap = nlohmann::json::array();
            for (const auto& iv : found->overlap) overlap.push_back({to_string(iv.lo), to_string(iv.hi)});
            report["word"] = letters;
            report["overlap"] = overlap;
            report["measure_lower"] = to_string(found->measure.lower);
            report["measure_upper"] = to_string(found->measure.upper);
        }
        ctx.write_json("recurrence_word.json", report);
        std::cout << report.dump(2) << "\n";
        return found ? kExitOk : kExitFailed;
    }

private:
    std::string preset_ = "cantor", ifs_, tol_ = "1/1000000";
    std::vector<std::string> zones_;
    int max_depth_ = 6;
};

}  // namespace

void add_smoothmap_commands(CommandList& list) {
    list.push_back(std::make_unique<BuildScheduleCmd>());
    list.push_back(std::make_unique<VerifyScheduleCmd>());
    list.push_back(std::make_unique<ZeroScanCmd>());
    list.push_back(std::make_unique<RecurrenceWordCmd>());
}

}  // namespace slowft::cli
