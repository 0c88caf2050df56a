#include "doctest.h"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nstp/cli/config.hpp"
#include "nstp/cli/runner.hpp"

using namespace nstp::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("nstp_cli_" + tag + "_" +
                                            std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_error_on(const ParseResult& r, const std::string& key) {
    for (const Diagnostic& d : r.diagnostics)
        if (d.severity == Diagnostic::Severity::error && d.key == key) return true;
    return false;
}

ExperimentConfig parse_ok(const std::string& text, const std::map<std::string, std::string>& env = {}) {
    ParseResult r = parse_config(text, fs::current_path(), env);
    for (const Diagnostic& d : r.diagnostics) INFO(d.text());
    REQUIRE(r.ok());
    return *r.config;
}

}  // namespace

TEST_CASE("config parsing applies defaults and reads values") {
    const ExperimentConfig c = parse_ok(
        "# comment line\n"
        "experiment = turnpike   # trailing comment\n"
        "mu = 0.07\n"
        "horizons = 2, 4,8\n"
        "epsilon = auto\n"
        "admissible_radius = 0.5\n");
    CHECK(c.experiment == Experiment::turnpike);
    CHECK(c.flow.mu == 0.07);
    CHECK(c.flow.n == 32);
    REQUIRE(c.horizons.size() == 3);
    CHECK(c.horizons[2] == 8.0);
    CHECK_FALSE(c.epsilon.has_value());
    REQUIRE(c.admissible_radius.has_value());
    CHECK(*c.admissible_radius == 0.5);
    CHECK(c.effective_grad_tol() == 1e-11);
}

TEST_CASE("config errors name the key") {
    CHECK(has_error_on(parse_config("experiment = steady\nbogus = 1\n", "."), "bogus"));
    CHECK(has_error_on(parse_config("experiment = steady\nmu = 0.1\nmu = 0.2\n", "."), "mu"));
    CHECK(has_error_on(parse_config("experiment = steady\nmu = -1\n", "."), "mu"));
    CHECK(has_error_on(parse_config("experiment = steady\nn = 30\n", "."), "n"));
    CHECK(has_error_on(parse_config("experiment = warp\n", "."), "experiment"));
    CHECK(has_error_on(parse_config("experiment = steady\ncontrol = constructed\n", "."), "control"));
    CHECK_FALSE(parse_config("mu = 0.1\n", ".").ok());
    CHECK_FALSE(parse_config("experiment steady\n", ".").ok());
    CHECK_FALSE(load_config("/nonexistent/dir/x.cfg").ok());
}

TEST_CASE("environment overrides file values and is recorded") {
    const ExperimentConfig c = parse_ok("experiment = steady\nmu = 0.1\n", {{"NSTP_MU", "0.3"}, {"NSTP_SEED", "9"}});
    CHECK(c.flow.mu == 0.3);
    CHECK(c.seed == 9);
    CHECK(c.env_overrides.size() == 2);
    CHECK(resolved_text(c).find("NSTP_MU") != std::string::npos);

    ParseResult bad = parse_config("experiment = steady\n", ".", {{"NSTP_MU", "abc"}});
    CHECK(has_error_on(bad, "mu"));
}

TEST_CASE("resolved text reproduces the configuration") {
    const ExperimentConfig c = parse_ok(
        "experiment = gamma_convergence\nmu = 0.07\ndt = 0.02\nhorizons = 2,4,8\n"
        "admissible_radius = 0.0012\nk = 0.3\nalpha = 0.1\nseed = 123456789012\n");
    const std::string text = resolved_text(c);
    const ExperimentConfig again = parse_ok(text);
    CHECK(resolved_text(again) == text);
    CHECK(again.flow.dt == c.flow.dt);
    CHECK(again.k == c.k);
    CHECK(again.seed == c.seed);
    CHECK(*again.admissible_radius == *c.admissible_radius);
    CHECK(again.horizons == c.horizons);
}

TEST_CASE("precheck catches sweep and horizon problems") {
    auto errors_on = [](const ExperimentConfig& c, const std::string& key) {
        for (const Diagnostic& d : precheck(c))
            if (d.severity == Diagnostic::Severity::error && d.key == key) return true;
        return false;
    };
    CHECK(errors_on(parse_ok("experiment = turnpike\n"), "horizons"));
    CHECK(errors_on(parse_ok("experiment = turnpike\ndt = 0.02\nhorizons = 2, 3.01\n"), "horizons"));
    CHECK(errors_on(parse_ok("experiment = lq\n"), "initial"));
    CHECK(errors_on(parse_ok("experiment = steady\ncontrol = file:/nonexistent.fld\n"), "control"));
    CHECK(precheck(parse_ok("experiment = steady\n")).empty());

    bool cfl_warning = false;
    for (const Diagnostic& d : precheck(parse_ok("experiment = evolve\ndt = 0.5\ninitial = random\ninitial_amplitude = 5\n")))
        cfl_warning = cfl_warning || (d.severity == Diagnostic::Severity::warning && d.key == "dt");
    CHECK(cfl_warning);
}

TEST_CASE("run directories are timestamped and never reused") {
    TempDir tmp("dirs");
    const auto now = std::chrono::sys_days{std::chrono::year{2026} / 3 / 4} + std::chrono::hours{5} +
                     std::chrono::minutes{6} + std::chrono::seconds{7};
    const fs::path a = make_run_directory(tmp.path, Experiment::steady, now);
    const fs::path b = make_run_directory(tmp.path, Experiment::steady, now);
    CHECK(a.filename() == "steady-20260304-050607");
    CHECK(b.filename() == "steady-20260304-050607-2");
    CHECK(fs::is_directory(a));
    CHECK(fs::is_directory(b));
}

TEST_CASE("steady run writes artifacts and reruns bitwise") {
    TempDir tmp("steady");
    const ExperimentConfig c = parse_ok("experiment = steady\nn = 16\nmu = 0.1\ncontrol_amplitude = 0.2\nseed = 4\n");
    const RunOutcome r = run_experiment(c, tmp.path / "a");
    CHECK(r.exit_code == kExitOk);
    CHECK(r.status == "ok");
    for (const char* f : {"resolved.cfg", "summary.json", "steady_history.csv", "state.fld", "control.fld"})
        CHECK(fs::exists(tmp.path / "a" / f));

    const nlohmann::json j = nlohmann::json::parse(slurp(tmp.path / "a" / "summary.json"));
    CHECK(j["status"] == "ok");
    CHECK(j["residual"].get<double>() < 1e-10);

    const ParseResult again = load_config(tmp.path / "a" / "resolved.cfg");
    REQUIRE(again.ok());
    CHECK(run_experiment(*again.config, tmp.path / "b").exit_code == kExitOk);
    for (const char* f : {"summary.json", "steady_history.csv", "state.fld", "control.fld"})
        CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));

    const auto files = plot_data(tmp.path / "a", tmp.path / "plot");
    CHECK(files.size() == 3);
    const std::string cells = slurp(tmp.path / "plot" / "state_cells.csv");
    CHECK(cells.rfind("x,y,u,v,speed\n", 0) == 0);
    CHECK(std::count(cells.begin(), cells.end(), '\n') == 1 + 16 * 16);
}

TEST_CASE("gate failure and solver failure map to exit codes") {
    TempDir tmp("codes");
    const ExperimentConfig strict = parse_ok(
        "experiment = stabilize\nn = 16\nmu = 0.1\ndt = 0.05\nt_final = 1\ninitial = random\n"
        "control_amplitude = 0.3\nsmallness_bound = 1e-9\n");
    const RunOutcome g = run_experiment(strict, tmp.path / "gate");
    CHECK(g.exit_code == kExitGateFailed);
    CHECK(g.status == "gate_failed");

    const ExperimentConfig starved = parse_ok("experiment = steady\nn = 16\nmu = 0.1\nsteady_max_iter = 1\nsteady_tol = 1e-30\n");
    const RunOutcome e = run_experiment(starved, tmp.path / "err");
    CHECK(e.exit_code == kExitError);
    CHECK(fs::exists(tmp.path / "err" / "error.json"));
}
