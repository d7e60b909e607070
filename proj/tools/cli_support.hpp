#pragma once

#include "slowft/measures.hpp"
#include "slowft/numeric.hpp"
#include "slowft/smoothmaps.hpp"

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace slowft::cli {

enum ExitStatus : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitValidation = 2,
    kExitBudget = 3,
    kExitFailed = 4,
};

struct CommonOptions {
    std::string out = ".";
    unsigned jobs = 0;
    bool timing = false;
};

class RunContext {
public:
    explicit RunContext(const CommonOptions& common);

    unsigned jobs() const { return jobs_; }
    bool timing() const { return timing_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }
    std::filesystem::path path(std::string_view file) const { return out_dir_ / file; }
    void write(std::string_view file, std::string_view content) const;
    void write_json(std::string_view file, const nlohmann::json& j) const;

    // Wall time per phase, printed to stderr under --timing only.
    void phase(std::string_view label);

private:
    std::filesystem::path out_dir_;
    unsigned jobs_ = 0;
    bool timing_ = false;
    std::chrono::steady_clock::time_point mark_;
};

class Command {
public:
    Command(std::string name, std::string summary) : name_(std::move(name)), summary_(std::move(summary)) {}
    virtual ~Command() = default;
    const std::string& name() const { return name_; }
    const std::string& summary() const { return summary_; }
    virtual void add_options(CLI::App& app) = 0;
    // Exit status; artifacts go to ctx.
    virtual int run(RunContext& ctx) = 0;

private:
    std::string name_, summary_;
};

using CommandList = std::vector<std::unique_ptr<Command>>;
void add_fourier_commands(CommandList& list);
void add_equidistribution_commands(CommandList& list);
void add_smoothmap_commands(CommandList& list);
void add_pushforward_commands(CommandList& list);

// {"command": name, "options": {...}} from the parsed subcommand.
nlohmann::json resolved_config(const CLI::App& sub);
// Tokens for a stored config; options named in overrides are left out.
std::vector<std::string> config_tokens(const nlohmann::json& config, const std::vector<std::string>& overrides);

nlohmann::json read_json(const std::string& path);

// "123", "10^L", "p/q" or decimals; tower notation is rejected.
Rational parse_frequency(std::string_view text);
// base:lo:hi expands to base^lo, ..., base^hi.
std::vector<Rational> frequency_grid(std::string_view text);
std::vector<Rational> collect_frequencies(const std::vector<std::string>& list, const std::string& grid);
long double to_float_frequency(const Rational& xi);
// Positive decimal n from "10^^n".
int parse_tower_height(std::string_view text);

// "lo:hi" with rational endpoints.
Interval parse_interval(std::string_view text);
std::vector<long> parse_long_list(std::string_view text);

// "cantor", "t:p/q" or "digits:base:d,d,..."; a non-empty ifs_path wins.
SelfSimilarIFS load_measure(const std::string& preset, const std::string& ifs_path);
// SmoothMapSpec::parse forms plus "bump-sum", "integrated" and "integrated+x",
// which read a bump schedule from schedule_path.
SmoothMapSpec load_map(const std::string& text, const std::string& schedule_path);

std::string fmt(long double v, int digits = 19);

// Common option groups.
void add_tolerance(CLI::App& app, long double& tol, long double fallback);

}  // namespace slowft::cli
