#include "cli_support.hpp"

#include "slowft/errors.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace slowft::cli {

RunContext::RunContext(const CommonOptions& common)
    : out_dir_(common.out), jobs_(common.jobs), timing_(common.timing), mark_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec || !std::filesystem::is_directory(out_dir_))
        throw ValidationError("cannot create output directory '" + common.out + "'");
}

void RunContext::write(std::string_view file, std::string_view content) const {
    const auto p = path(file);
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

void RunContext::write_json(std::string_view file, const nlohmann::json& j) const { write(file, j.dump(2) + "\n"); }

void RunContext::phase(std::string_view label) {
    const auto now = std::chrono::steady_clock::now();
    if (timing_) {
        const auto ms = std::chrono::duration<double, std::milli>(now - mark_).count();
        std::cerr << "[timing] " << label << ": " << fmt(ms, 6) << " ms\n";
    }
    mark_ = now;
}

namespace {

bool is_flag(const CLI::Option* opt) { return opt->get_expected_max() == 0; }
bool is_list(const CLI::Option* opt) { return opt->get_expected_max() > 1; }

std::string json_scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return v.dump();
    throw ValidationError("config values must be strings, numbers or booleans");
}

}  // namespace

nlohmann::json resolved_config(const CLI::App& sub) {
    nlohmann::json options = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string& name = opt->get_lnames().front();
        if (name == "help") continue;
        if (is_flag(opt)) {
            options[name] = opt->count() > 0;
        } else if (opt->count() > 0) {
            const auto& results = opt->results();
            if (is_list(opt)) options[name] = results;
            else options[name] = results.back();
        } else if (!is_list(opt) && !opt->get_default_str().empty()) {
            options[name] = opt->get_default_str();
        }
    }
    return {{"command", sub.get_name()}, {"options", options}};
}

std::vector<std::string> config_tokens(const nlohmann::json& config, const std::vector<std::string>& overrides) {
    if (!config.is_object() || !config.contains("command") || !config.at("command").is_string())
        throw ValidationError("config needs a 'command' string");
    std::set<std::string> overridden;
    for (const auto& tok : overrides) {
        if (!tok.starts_with("--")) continue;
        overridden.insert(tok.substr(2, tok.find('=') == std::string::npos ? std::string::npos : tok.find('=') - 2));
    }
    std::vector<std::string> tokens{config.at("command").get<std::string>()};
    if (!config.contains("options")) return tokens;
    const auto& options = config.at("options");
    if (!options.is_object()) throw ValidationError("config 'options' must be an object");
    for (const auto& [name, value] : options.items()) {
        if (overridden.contains(name)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back("--" + name);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                tokens.push_back("--" + name);
                tokens.push_back(json_scalar_text(v));
            }
        } else {
            tokens.push_back("--" + name);
            tokens.push_back(json_scalar_text(value));
        }
    }
    return tokens;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("'" + path + "': " + e.what());
    }
}

Rational parse_frequency(std::string_view text) {
    if (text.find("^^") != std::string_view::npos)
        throw ValidationError("tower notation '" + std::string(text) + "' is only accepted by rajchman-status");
    return parse_rational(text);
}

std::vector<Rational> frequency_grid(std::string_view text) {
    std::vector<std::string> parts;
    std::stringstream ss{std::string(text)};
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw ValidationError("frequency grid must be base:lo:hi");
    const Integer base = parse_integer(parts[0]);
    const Integer lo = parse_integer(parts[1]), hi = parse_integer(parts[2]);
    if (base < 2 || lo < 0 || hi < lo || hi > 1'000'000) throw ValidationError("bad frequency grid '" + std::string(text) + "'");
    std::vector<Rational> out;
    for (long k = lo.get_si(); k <= hi.get_si(); ++k) out.emplace_back(pow_int(base.get_si(), static_cast<unsigned long>(k)));
    return out;
}

std::vector<Rational> collect_frequencies(const std::vector<std::string>& list, const std::string& grid) {
    std::vector<Rational> out;
    for (const auto& s : list) out.push_back(parse_frequency(s));
    if (!grid.empty())
        for (auto& q : frequency_grid(grid)) out.push_back(std::move(q));
    if (out.empty()) throw ValidationError("no frequencies given (--xi or --xi-grid)");
    return out;
}

long double to_float_frequency(const Rational& xi) {
    const long double v = to_long_double(xi);
    if (!std::isfinite(v) || std::fabs(v) > 1e4000L) throw ValidationError("frequency too large for float evaluation");
    return v;
}

int parse_tower_height(std::string_view text) {
    if (!text.starts_with("10^^")) throw ValidationError("expected 10^^n, got '" + std::string(text) + "'");
    const Integer n = parse_integer(text.substr(4));
    if (n < 1 || n > 1000) throw ValidationError("tower height out of range");
    return static_cast<int>(n.get_si());
}

Interval parse_interval(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ValidationError("interval must be lo:hi");
    Interval iv{parse_rational(text.substr(0, colon)), parse_rational(text.substr(colon + 1))};
    if (!(iv.lo < iv.hi)) throw ValidationError("interval needs lo < hi");
    return iv;
}

std::vector<long> parse_long_list(std::string_view text) {
    std::vector<long> out;
    std::stringstream ss{std::string(text)};
    for (std::string part; std::getline(ss, part, ',');) {
        const Integer v = parse_integer(part);
        if (!v.fits_slong_p()) throw ValidationError("integer out of range: " + part);
        out.push_back(v.get_si());
    }
    if (out.empty()) throw ValidationError("empty list");
    return out;
}

SelfSimilarIFS load_measure(const std::string& preset, const std::string& ifs_path) {
    if (!ifs_path.empty()) return ifs_from_json(read_json(ifs_path));
    if (preset == "cantor") return cantor_ifs();
    if (preset.starts_with("t:")) return mu_t_ifs(parse_rational(preset.substr(2)));
    if (preset.starts_with("digits:")) {
        const auto rest = preset.substr(7);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw ValidationError("digits preset is digits:base:d,d,...");
        const Integer base = parse_integer(rest.substr(0, colon));
        if (!base.fits_slong_p()) throw ValidationError("base out of range");
        return missing_digit_ifs(base.get_si(), parse_long_list(rest.substr(colon + 1)));
    }
    throw ValidationError("unknown measure preset '" + preset + "' (cantor, t:p/q, digits:b:d,...)");
}

SmoothMapSpec load_map(const std::string& text, const std::string& schedule_path) {
    if (text == "bump-sum" || text == "integrated" || text == "integrated+x") {
        if (schedule_path.empty()) throw ValidationError("map '" + text + "' needs --bump-schedule");
        auto schedule = std::make_shared<const BumpSchedule>(schedule_from_json(read_json(schedule_path)));
        if (text == "bump-sum") return SmoothMapSpec::bump_sum(schedule);
        return SmoothMapSpec::integrated(schedule, text == "integrated+x");
    }
    return SmoothMapSpec::parse(text);
}

std::string fmt(long double v, int digits) { return format_real(v, digits); }

void add_tolerance(CLI::App& app, long double& tol, long double fallback) {
    tol = fallback;
    app.add_option("--tol", tol, "absolute error target")->check(CLI::PositiveNumber);
}

}  // namespace slowft::cli
