#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "nstp/cli/config.hpp"
#include "nstp/cli/runner.hpp"

namespace fs = std::filesystem;
using namespace nstp::cli;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

std::optional<ExperimentConfig> load(const fs::path& path, const Overrides& ov) {
    ParseResult res = load_config(path, environment_overrides());
    for (const Diagnostic& d : res.diagnostics) std::cerr << path.string() << ": " << d.text() << "\n";
    if (!res.ok()) return std::nullopt;
    ExperimentConfig cfg = *res.config;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.threads) cfg.threads = *ov.threads;
    return cfg;
}

int cmd_run(const fs::path& config, const std::optional<fs::path>& out, const Overrides& ov) {
    const auto cfg = load(config, ov);
    if (!cfg) return kExitError;
    const fs::path parent = out ? fs::absolute(*out) : cfg->output_dir;
    const fs::path dir = make_run_directory(parent, cfg->experiment, std::chrono::system_clock::now());
    const RunOutcome r = run_experiment(*cfg, dir);
    std::cout << dir.string() << "\n";
    std::cout << to_string(cfg->experiment) << ": " << r.status;
    if (!r.message.empty()) std::cout << " (" << r.message << ")";
    std::cout << "\n";
    return r.exit_code;
}

int cmd_validate(const fs::path& config, const Overrides& ov) {
    ParseResult res = load_config(config, environment_overrides());
    std::vector<Diagnostic> diags = res.diagnostics;
    if (res.ok()) {
        ExperimentConfig cfg = *res.config;
        if (ov.seed) cfg.seed = *ov.seed;
        if (ov.threads) cfg.threads = *ov.threads;
        for (auto& d : precheck(cfg)) diags.push_back(std::move(d));
    }
    bool errors = false;
    for (const Diagnostic& d : diags) {
        std::cout << d.text() << "\n";
        errors = errors || d.severity == Diagnostic::Severity::error;
    }
    if (diags.empty()) std::cout << "ok\n";
    return errors ? kExitError : kExitOk;
}

int cmd_plot_data(const fs::path& run, const std::optional<fs::path>& out) {
    const fs::path target = out ? *out : run / "plot";
    for (const fs::path& p : plot_data(run, target)) std::cout << p.string() << "\n";
    return kExitOk;
}

void print_keys() {
    for (const KeyInfo& k : config_schema())
        std::printf("%-18s %-14s %s\n", k.name.c_str(), k.default_text.c_str(), k.doc.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Navier-Stokes tracking control experiments"};
    app.require_subcommand(1);

    fs::path config, run_dir;
    std::optional<fs::path> out;
    Overrides ov;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "key = value experiment file")->required();
        sub->add_option("--seed", ov.seed, "override the seed key");
        sub->add_option("--threads", ov.threads, "override the threads key")->check(CLI::PositiveNumber);
    };

    CLI::App* run = app.add_subcommand("run", "run an experiment into a timestamped directory");
    add_common(run);
    run->add_option("--out", out, "parent directory for the run (default: output_dir key)");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running solvers");
    add_common(validate);

    CLI::App* plot = app.add_subcommand("plot-data", "re-emit CSV extracts of a finished run");
    plot->add_option("run", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);
    plot->add_option("--out", out, "destination (default: <run>/plot)");

    app.add_subcommand("keys", "list configuration keys with defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (*run) return cmd_run(config, out, ov);
        if (*validate) return cmd_validate(config, ov);
        if (*plot) return cmd_plot_data(run_dir, out);
        print_keys();
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}
