#include "cli_support.hpp"

#include "slowft/errors.hpp"

#include <iostream>

namespace {

using namespace slowft::cli;

int report(int status, const std::string& kind, const std::string& what) {
    std::cerr << "slowft: " << kind << ": " << what << "\n";
    return status;
}

// Expands "--config FILE [overrides...]" into subcommand tokens.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    if (args.empty() || (args[0] != "--config" && !args[0].starts_with("--config="))) return args;
    std::string path;
    std::size_t rest = 1;
    if (args[0] == "--config") {
        if (args.size() < 2) throw slowft::ValidationError("--config needs a file");
        path = args[1];
        rest = 2;
    } else {
        path = args[0].substr(9);
    }
    const std::vector<std::string> overrides(args.begin() + static_cast<std::ptrdiff_t>(rest), args.end());
    auto tokens = config_tokens(read_json(path), overrides);
    tokens.insert(tokens.end(), overrides.begin(), overrides.end());
    return tokens;
}

int run(int argc, char** argv) {
    CLI::App app{"Fourier decay and equidistribution toolkit for self-similar measures", "slowft"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.footer("Run a stored configuration with: slowft --config resolved_config.json [overrides]");

    CommandList commands;
    add_fourier_commands(commands);
    add_equidistribution_commands(commands);
    add_smoothmap_commands(commands);
    add_pushforward_commands(commands);

    CommonOptions common;
    std::vector<std::pair<CLI::App*, Command*>> subs;
    for (auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd->name(), cmd->summary());
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--jobs", common.jobs, "worker threads (0 = hardware concurrency)");
        sub->add_flag("--timing", common.timing, "print phase wall times to stderr");
        cmd->add_options(*sub);
        subs.emplace_back(sub, cmd.get());
    }

    std::vector<std::string> args;
    try {
        args = expand_config({argv + 1, argv + argc});
    } catch (const slowft::ValidationError& e) {
        return report(kExitValidation, "invalid config", e.what());
    }
    std::vector<char*> cargs{argv[0]};
    for (auto& a : args) cargs.push_back(a.data());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    for (auto& [sub, cmd] : subs) {
        if (!sub->parsed()) continue;
        try {
            RunContext ctx(common);
            ctx.write_json("resolved_config.json", resolved_config(*sub));
            const int status = cmd->run(ctx);
            ctx.phase("total");
            return status;
        } catch (const slowft::ValidationError& e) {
            return report(kExitValidation, "validation error", e.what());
        } catch (const nlohmann::json::exception& e) {
            return report(kExitValidation, "validation error", e.what());
        } catch (const slowft::BudgetExceeded& e) {
            return report(kExitBudget, "budget exceeded", e.what());
        } catch (const slowft::Infeasible& e) {
            return report(kExitFailed, "infeasible", e.what());
        } catch (const std::exception& e) {
            return report(kExitInternal, "error", e.what());
        }
    }
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
