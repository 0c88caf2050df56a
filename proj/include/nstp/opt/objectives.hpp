#pragma once

#include <cstdint>
#include <vector>

#include "nstp/opt/problem.hpp"

namespace nstp {

// Unsteady problem
//
//   J(u) = 1/2 sum_k w_k |y_k - x^d|^2 + k/2 sum_k w_k |u_k|^2 + <q0, y_N>
//
// over nodal controls u_0..u_N, with y from solve_unsteady. Gradients are
// Riesz representers for control_inner, so grad = k u + q with q the nodal
// discrete adjoint.

CostBreakdown cost_unsteady(const ControlSignal& u, const ProblemSpec& spec);

struct UnsteadyAdjoint {
    Trajectory state;
    std::vector<StaggeredVelocity> adjoint;  ///< nodal q_0..q_N
    ControlSignal gradient;                   ///< k u + q
    CostBreakdown cost;
    bool checkpointed = false;
};

/// Forward solve, then the exact transpose of the linearized scheme run
/// backward. Long horizons switch to square-root checkpointing when the
/// stored states would exceed spec.memory_budget (or always/never per
/// spec.checkpoint); the result is bitwise identical either way. When
/// checkpointing, `state` holds only y_0 and y_N.
UnsteadyAdjoint adjoint_unsteady(const ControlSignal& u, const ProblemSpec& spec);
ControlSignal gradient_unsteady(const ControlSignal& u, const ProblemSpec& spec);

/// Second-order adjoint (tangent of the adjoint sweep) in direction v.
ControlSignal hessian_vec_unsteady(const ControlSignal& u, const ControlSignal& v,
                                   const ProblemSpec& spec);

// Steady problem: J(u) = 1/2 |y - x^d|^2 + alpha/2 |u|^2 with y = steady state.

CostBreakdown cost_steady(const ForceField& u, const ProblemSpec& spec);

struct SteadyAdjoint {
    SteadyState state;
    StaggeredVelocity adjoint;  ///< q: P(-mu L q + C'(y)^T q) = P(y - x^d)
    ForceField gradient;        ///< alpha u + q
    CostBreakdown cost;
};
SteadyAdjoint adjoint_steady(const ForceField& u, const ProblemSpec& spec);
ForceField gradient_steady(const ForceField& u, const ProblemSpec& spec);
ForceField hessian_vec_steady(const ForceField& u, const ForceField& v, const ProblemSpec& spec);

// Time-independent control on [0, T]:
//   J(u) = 1/2 sum_k w_k |y_k - z|^2 + T/2 |u|^2, adjoint terminal value 0.

CostBreakdown cost_time_independent(const ForceField& u, const ProblemSpec& spec);

struct TimeIndependentAdjoint {
    Trajectory state;
    ForceField adjoint_integral;  ///< sum_k dt s_{k+1}, the discrete int_0^T q dt
    ForceField gradient;          ///< T u + adjoint_integral
    CostBreakdown cost;
};
TimeIndependentAdjoint adjoint_time_independent(const ForceField& u, const ProblemSpec& spec);

/// Lower bound on M(y) = sup |b(v, v, y)| / |v|_V^2 over solenoidal v by
/// power iteration on the pencil (K, -P L P), K v = (T_v(y) - C(v, y)) / 2,
/// from several random starts.
struct MEstimate {
    double value = 0.0;
    StaggeredVelocity maximizer;
};
MEstimate estimate_M(const StaggeredVelocity& ybar, std::uint64_t seed = 1, int restarts = 3,
                     int iterations = 60);

}  // namespace nstp
