#pragma once

#include <string>
#include <vector>

#include "nstp/flow/control_signal.hpp"
#include "nstp/flow/flow_params.hpp"
#include "nstp/mesh/fields.hpp"
#include "nstp/mesh/krylov.hpp"

namespace nstp {

/// Velocity snapshots at t_k = k dt, k = 0..steps.
struct Trajectory {
    FlowParams params;
    std::vector<StaggeredVelocity> snapshots;
    double max_cfl = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return snapshots.size(); }
    double time(std::size_t k) const noexcept { return static_cast<double>(k) * params.dt; }
    const StaggeredVelocity& at(std::size_t k) const { return snapshots.at(k); }
    std::vector<double> times() const;
    std::vector<double> l2_norms() const;
    std::vector<double> h1_norms() const;
};

/// max |velocity| dt / h.
double cfl_number(const StaggeredVelocity& y, const FlowParams& params);

/**
 * One step of the first-order IMEX projection scheme
 *
 *   y+ = (I - dt mu P L P)^{-1} P (y + dt (force - C(y, y)))
 *
 * with explicit skew-symmetric convection C (omitted when params.convection
 * is false) and the discrete Leray projector P. The implicit Stokes stage is
 * solved by CG on the solenoidal subspace, preconditioned with
 * P (I - dt mu L)^{-1} P. The steady solution is an exact fixed point.
 */
StaggeredVelocity step_ns(const StaggeredVelocity& y, const ForceField& force,
                          const FlowParams& params);

/// Applies (I - dt mu P L P)^{-1} P, inverted on the solenoidal subspace.
StaggeredVelocity implicit_projection(const FaceField& r, const FlowParams& params);

/// Linearization of step_ns at base state `base`:
///   w+ = S (w + dt (f - C(base, w) - C(w, base))), S = implicit_projection.
StaggeredVelocity step_tangent(const StaggeredVelocity& base, const StaggeredVelocity& w,
                               const ForceField& f, const FlowParams& params);

/// Transpose of step_tangent restricted to solenoidal fields.
struct AdjointStep {
    StaggeredVelocity state;  ///< P (I - dt C'(base)^T) s
    StaggeredVelocity force;  ///< s = S q; the force sensitivity is dt * s
};
AdjointStep step_adjoint(const StaggeredVelocity& base, const StaggeredVelocity& q,
                         const FlowParams& params);

/// (C'(base))^T r = -C(base, r) + convection_transpose(base, r).
FaceField convection_jacobian_transpose(const FaceField& base, const FaceField& r);

/// Forced trajectory. Step k uses the nodal average (u_k + u_{k+1})/2 of a
/// time-varying control, so the forcing matches trapezoidal quadrature.
Trajectory solve_unsteady(const StaggeredVelocity& y0, const ControlSignal& control,
                          const FlowParams& params);

/// Force applied during step k -> k+1.
ForceField step_force(const ControlSignal& control, int k);

/// max_k | E_k - E_0 + mu int |grad y|^2 - int <u, y> | with trapezoidal
/// time quadrature, E_k = |y_k|^2 / 2.
double energy_balance_residual(const Trajectory& traj, const ControlSignal& control);

struct SteadyOptions {
    double tol = 1e-10;            ///< momentum residual in the discrete L2 norm
    double damping = 0.7;          ///< Picard relaxation
    double newton_switch = 1e-3;   ///< residual below which Newton takes over
    int max_iter = 200;
    KrylovOptions linear{1e-12, 500, 80};
};

struct SteadyState {
    StaggeredVelocity y;
    CellField p;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> history;
};

/// Momentum residual P(-mu L y + C(y, y) - u) (Stokes when convection is off).
FaceField steady_residual(const StaggeredVelocity& y, const ForceField& control,
                          const FlowParams& params);

/// Solves -mu L y + C(y,y) + grad p = u, div y = 0 by damped Picard on the
/// Oseen linearization followed by Newton. Each linear solve is GMRES
/// preconditioned with P (-mu L)^{-1} P. Throws SolverError with the residual
/// history when the iteration fails.
SteadyState solve_steady(const ForceField& control, const FlowParams& params,
                         const SteadyOptions& opts = {});

/// Applies P (-mu L)^{-1} P, the Stokes preconditioner.
FaceField stokes_preconditioner(const FaceField& r, double mu);

/// Solves P(-mu L w + C'(base) w) = P rhs (transpose = true uses C'(base)^T).
FaceField solve_oseen_steady(const StaggeredVelocity& base, const FaceField& rhs,
                             const FlowParams& params, bool transpose,
                             const KrylovOptions& opts = {1e-12, 500, 80});

struct DecayFit {
    bool skipped = false;           ///< e(0) too small to fit
    double alpha = 0.0;             ///< -slope of log e(t)
    double fit_residual = 0.0;      ///< rms in log units
    int points = 0;
    double smallness_ratio = 0.0;   ///< |grad y_inf| / mu
    double max_error = 0.0;         ///< max_t e(t), for skipped fits
    bool monotone = true;           ///< e(t) nonincreasing within 1e-9 relative
    bool envelope_ok = true;        ///< e(t) <= e(0) exp(-alpha t) (1 + 1e-6) on the window
    bool relaxed_envelope_ok = true;  ///< e(t) <= e(0) exp(-0.9 alpha t) on the window
    std::vector<double> times;
    std::vector<double> errors;     ///< e(t) = |y(t) - y_inf|
};

/// Evolves y0 under the steady control, fits log e(t) on [0.1 T, 0.9 T].
DecayFit stabilization_experiment(const StaggeredVelocity& y0, const ForceField& steady_control,
                                  const FlowParams& params, const SteadyOptions& opts = {});

}  // namespace nstp
