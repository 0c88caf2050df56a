#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nstp/opt/objectives.hpp"

namespace nstp {

enum class Variant { unsteady, steady, time_independent };

const char* to_string(Variant v);

struct MinimizeOptions {
    double grad_tol = 1e-8;   ///< on the projected gradient norm
    int max_iter = 300;
    int memory = 8;           ///< L-BFGS pairs; 0 gives projected gradient descent
    double armijo = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-14;
};

struct OptimizationReport {
    explicit OptimizationReport(ControlSignal u) : control(std::move(u)) {}

    Variant variant = Variant::unsteady;
    ControlSignal control;
    std::optional<Trajectory> trajectory;  ///< unsteady and time-independent variants
    std::optional<SteadyState> steady;     ///< steady variant
    /// unsteady: nodal adjoint q_j; steady: q; time-independent: int_0^T q dt
    std::vector<StaggeredVelocity> adjoint;
    CostBreakdown cost;
    std::vector<double> cost_history;
    std::vector<double> tracking_history;
    std::vector<double> penalty_history;
    std::vector<double> grad_history;
    std::vector<double> step_history;
    double first_order_residual = 0.0;  ///< |u - Proj(u - g)| / max(1, |q|)
    int iterations = 0;
    bool converged = false;
    bool stalled = false;
    std::string message;
};

/// Projected L-BFGS with Armijo backtracking in the control_inner geometry.
/// Steady-kind controls are used for the steady and time-independent
/// variants. When the cost change is below roundoff (1e-14 |J|), a trial
/// that lowers the projected gradient is accepted, so the cost history is
/// monotone up to that level.
OptimizationReport minimize(const ProblemSpec& spec, Variant variant,
                            const MinimizeOptions& opts = {},
                            std::optional<ControlSignal> initial = std::nullopt);

/// Optimal pair of the unsteady problem with its certified residuals.
struct OptimalitySystem {
    Trajectory y;
    Trajectory q;
    OptimizationReport report;
    double forward_residual = 0.0;   ///< max_k |y_{k+1} - step(y_k)| / max(1, |y|)
    double backward_residual = 0.0;  ///< adjoint re-evaluated through the checkpointed path
    double coupling_residual = 0.0;  ///< |k u + q| / max(1, |q|)
};
OptimalitySystem solve_optimality_system(const ProblemSpec& spec, const MinimizeOptions& opts = {},
                                         std::optional<ControlSignal> initial = std::nullopt);

}  // namespace nstp
