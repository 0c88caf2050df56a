#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nstp/flow/flow_params.hpp"

namespace nstp::cli {

enum class Experiment { steady, evolve, optimize, lq, decay, stabilize, turnpike, gamma_convergence };

const char* to_string(Experiment e);

/// Field source used for controls, initial states, targets and terminal data.
///   zero            the zero field
///   random          seeded random smooth field (scaled by the matching amplitude)
///   constructed     steady state of the random control (targets only)
///   control:PATH    steady state of the control stored in PATH (targets only)
///   file:PATH       field stored in PATH (snapshot format)
struct FieldRecipe {
    enum class Kind { zero, random, constructed, control_file, file };
    Kind kind = Kind::zero;
    std::filesystem::path path;

    std::string text() const;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::steady;
    FlowParams flow;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<double> horizons;

    double k = 1.0;
    double alpha = 1.0;
    std::string variant = "unsteady";
    std::optional<double> admissible_radius;

    FieldRecipe control{FieldRecipe::Kind::random, {}};
    double control_amplitude = 0.5;
    FieldRecipe initial;
    double initial_amplitude = 0.01;
    FieldRecipe target{FieldRecipe::Kind::constructed, {}};
    FieldRecipe terminal;

    std::optional<double> grad_tol;  ///< unset: experiment default
    int max_iter = 300;
    int memory = 8;
    double steady_tol = 1e-10;
    int steady_max_iter = 200;

    double perturbation = 0.04;
    std::optional<double> epsilon;   ///< unset: 0.1 |ybar|
    double tracking_gate = 0.05;
    double decay_horizon = 4.0;
    int decay_samples = 2;
    int hessian_samples = 5;
    double smallness_bound = 1.0;

    std::filesystem::path output_dir = "runs";  ///< default resolves against the working directory

    /// Environment overrides that were applied, as NAME=value.
    std::vector<std::string> env_overrides;

    double effective_grad_tol() const;
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string key;  ///< offending key, empty for file-level problems
    std::string message;

    std::string text() const;
};

struct ParseResult {
    std::optional<ExperimentConfig> config;  ///< set when there are no errors
    std::vector<Diagnostic> diagnostics;

    bool ok() const;
};

/// Documented schema entry.
struct KeyInfo {
    std::string name;
    std::string default_text;
    std::string doc;
};
const std::vector<KeyInfo>& config_schema();

/// Parses "key = value" lines ('#' starts a comment). Unknown and duplicate
/// keys are errors. Relative paths resolve against `base_dir`. `env`
/// entries named NSTP_<KEY> (upper case) override file values.
ParseResult parse_config(const std::string& text, const std::filesystem::path& base_dir,
                         const std::map<std::string, std::string>& env = {});

/// Reads the file and parses it; a missing file is an error diagnostic.
ParseResult load_config(const std::filesystem::path& path,
                        const std::map<std::string, std::string>& env = {});

/// NSTP_* variables of the current process environment.
std::map<std::string, std::string> environment_overrides();

/// Every key with its resolved value; parse_config of this text reproduces cfg.
std::string resolved_text(const ExperimentConfig& cfg);

}  // namespace nstp::cli
