#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "nstp/cli/config.hpp"
#include "nstp/mesh/fields.hpp"

namespace nstp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitGateFailed = 2;

/// Checks that need no solver: required keys per experiment, horizons
/// compatible with dt, readable field files on the right grid, and the
/// advective CFL estimate dt <= cfl h / U from the initial state and a
/// Stokes bound |u|_max / (mu 2 pi^2) on the controlled velocity.
std::vector<Diagnostic> precheck(const ExperimentConfig& cfg);

/// Field sources shared by all experiments. Random fields draw from
/// independent streams derived from cfg.seed.
ForceField build_control(const ExperimentConfig& cfg);
StaggeredVelocity build_initial(const ExperimentConfig& cfg);
StaggeredVelocity build_terminal(const ExperimentConfig& cfg);
/// May run the steady solver (constructed and control:PATH targets).
FaceField build_target(const ExperimentConfig& cfg);

/// Creates <parent>/<experiment>-YYYYMMDD-HHMMSS (UTC), with -2, -3, ...
/// appended when the name is taken.
std::filesystem::path make_run_directory(const std::filesystem::path& parent, Experiment experiment,
                                         std::chrono::system_clock::time_point now);

struct RunOutcome {
    int exit_code = kExitOk;
    std::string status;  ///< ok | gate_failed | not_converged | error
    std::string message;
};

/// Runs the experiment and writes resolved.cfg, summary.json, CSV series and
/// snapshots into `dir` (created if needed). Failures are reported as
/// error.json plus a nonzero exit code; nothing is written outside `dir`.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Re-emits CSV extracts of a finished run into `out`: every snapshot as a
/// cell-centred table (x, y, u, v, speed) and the scalar entries of
/// summary.json as (key, value). Returns the files written.
std::vector<std::filesystem::path> plot_data(const std::filesystem::path& run_dir,
                                             const std::filesystem::path& out);

}  // namespace nstp::cli
