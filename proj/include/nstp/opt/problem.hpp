#pragma once

#include <cstddef>
#include <optional>

#include "nstp/flow/control_signal.hpp"
#include "nstp/flow/flow_params.hpp"
#include "nstp/flow/flow_solver.hpp"
#include "nstp/mesh/fields.hpp"

namespace nstp {

enum class CheckpointMode { automatic, always, never };

/// Data of the tracking problems. `k` weights the control in the unsteady
/// cost, `alpha` in the steady cost; the time-independent cost uses T.
struct ProblemSpec {
    explicit ProblemSpec(const Grid& grid) : target(grid), q0(grid), y0(grid) {}

    FaceField target;             ///< x^d (or z for the time-independent problem)
    StaggeredVelocity q0;         ///< terminal weight, pairs with y(T)
    StaggeredVelocity y0;
    double k = 1.0;
    double alpha = 1.0;
    std::optional<double> admissible_radius;  ///< L2 ball for the control
    FlowParams params;
    SteadyOptions steady{1e-12, 0.7, 1e-3, 200, {1e-13, 600, 80}};
    CheckpointMode checkpoint = CheckpointMode::automatic;
    std::size_t memory_budget = std::size_t{1} << 30;  ///< bytes of stored states before checkpointing

    const Grid& grid() const noexcept { return target.grid(); }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct CostBreakdown {
    double tracking = 0.0;
    double penalty = 0.0;
    double terminal = 0.0;
    double total = 0.0;
};

/// Trapezoid weight of node j out of 0..steps.
double trapezoid_weight(int j, int steps, double dt);

/// Pairing of two controls: trapezoid-weighted sum over nodes for
/// time-varying signals, plain inner_l2 for steady ones.
double control_inner(const ControlSignal& a, const ControlSignal& b, double dt);
double control_norm(const ControlSignal& a, double dt);

/// Nodewise projection onto {|u_j| <= radius}.
ControlSignal project_admissible(const ControlSignal& u, std::optional<double> radius);

}  // namespace nstp
