#include "nstp/flow/flow_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nstp/flow/series_fit.hpp"
#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"

namespace nstp {

int FlowParams::steps() const {
    const double ratio = t_final / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-12 * std::max(1.0, ratio))
        throw std::invalid_argument("t_final/dt must be an integer (got " + std::to_string(ratio) + ")");
    return static_cast<int>(rounded);
}

void FlowParams::validate() const {
    if (!(mu > 0.0)) throw std::invalid_argument("mu must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be > 0");
    if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("n must be a power of two >= 8");
    if (!(cfl > 0.0)) throw std::invalid_argument("cfl must be > 0");
    steps();
}

std::vector<double> Trajectory::times() const {
    std::vector<double> t(snapshots.size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
    return t;
}

std::vector<double> Trajectory::l2_norms() const {
    std::vector<double> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) out.push_back(norm_l2(s));
    return out;
}

std::vector<double> Trajectory::h1_norms() const {
    std::vector<double> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) out.push_back(norm_h1_semi(s));
    return out;
}

double cfl_number(const StaggeredVelocity& y, const FlowParams& params) {
    return y.max_abs() * params.dt / y.grid().h();
}

StaggeredVelocity implicit_projection(const FaceField& r, const FlowParams& params) {
    const double k = params.dt * params.mu;
    // P and L do not commute next to the walls, so P (I - k L)^{-1} P only
    // preconditions the solenoidal Stokes solve
    LinearMap op = [k](const FaceField& x) {
        FaceField out = x;
        out.axpy(-k, laplacian(x));
        return leray(out);
    };
    LinearMap pre = [k](const FaceField& x) {
        return leray(solve_shifted_laplacian(leray(x), 1.0, k));
    };
    return leray(solve_cg(op, leray(r), pre, {1e-14, 200, 0}).x);
}

StaggeredVelocity step_ns(const StaggeredVelocity& y, const ForceField& force,
                          const FlowParams& params) {
    FaceField r = y;
    r.axpy(params.dt, force);
    if (params.convection) r.axpy(-params.dt, convection(y, y));
    return implicit_projection(r, params);
}

StaggeredVelocity step_tangent(const StaggeredVelocity& base, const StaggeredVelocity& w,
                               const ForceField& f, const FlowParams& params) {
    FaceField r = w;
    r.axpy(params.dt, f);
    if (params.convection) {
        r.axpy(-params.dt, convection(base, w));
        r.axpy(-params.dt, convection(w, base));
    }
    return implicit_projection(r, params);
}

FaceField convection_jacobian_transpose(const FaceField& base, const FaceField& r) {
    FaceField out = convection_transpose(base, r);
    out -= convection(base, r);
    return out;
}

AdjointStep step_adjoint(const StaggeredVelocity& base, const StaggeredVelocity& q,
                         const FlowParams& params) {
    StaggeredVelocity s = implicit_projection(q, params);
    if (!params.convection) return {s, s};
    FaceField state = s;
    state.axpy(-params.dt, convection_jacobian_transpose(base, s));
    return {leray(state), std::move(s)};
}

ForceField step_force(const ControlSignal& control, int k) {
    if (control.is_steady()) return control.at(0);
    ForceField f = control.at(k);
    f += control.at(k + 1);
    f *= 0.5;
    return f;
}

Trajectory solve_unsteady(const StaggeredVelocity& y0, const ControlSignal& control,
                          const FlowParams& params) {
    params.validate();
    const int steps = params.steps();
    if (!control.is_steady() && control.size() != static_cast<std::size_t>(steps) + 1)
        throw DimensionError("solve_unsteady: control has " + std::to_string(control.size()) +
                             " nodes, expected " + std::to_string(steps + 1));
    require_same_grid(y0.grid(), control.grid(), "solve_unsteady");

    Trajectory traj;
    traj.params = params;
    traj.snapshots.reserve(static_cast<std::size_t>(steps) + 1);
    traj.snapshots.push_back(y0);
    for (int k = 0; k < steps; ++k) {
        const double cfl = cfl_number(traj.snapshots.back(), params);
        if (cfl > traj.max_cfl) traj.max_cfl = cfl;
        traj.snapshots.push_back(step_ns(traj.snapshots.back(), step_force(control, k), params));
    }
    if (traj.max_cfl > 1.0) {
        std::ostringstream os;
        os << "CFL number " << traj.max_cfl << " exceeds 1";
        traj.warnings.push_back(os.str());
    }
    return traj;
}

double energy_balance_residual(const Trajectory& traj, const ControlSignal& control) {
    const double dt = traj.params.dt;
    const double mu = traj.params.mu;
    const double e0 = 0.5 * inner_l2(traj.at(0), traj.at(0));
    double dissipation = 0.0, work = 0.0, worst = 0.0;
    double prev_diss = norm_h1_semi(traj.at(0));
    prev_diss *= prev_diss;
    double prev_work = inner_l2(control.at(0), traj.at(0));
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double g = norm_h1_semi(traj.at(k));
        const double d = g * g;
        const double w = inner_l2(control.at(static_cast<int>(k)), traj.at(k));
        dissipation += 0.5 * dt * (prev_diss + d);
        work += 0.5 * dt * (prev_work + w);
        prev_diss = d;
        prev_work = w;
        const double ek = 0.5 * inner_l2(traj.at(k), traj.at(k));
        worst = std::max(worst, std::abs(ek + mu * dissipation - e0 - work));
    }
    return worst;
}

FaceField steady_residual(const StaggeredVelocity& y, const ForceField& control,
                          const FlowParams& params) {
    FaceField r = -params.mu * laplacian(y);
    if (params.convection) r += convection(y, y);
    r -= control;
    return leray(r);
}

FaceField stokes_preconditioner(const FaceField& r, double mu) {
    return leray(solve_shifted_laplacian(leray(r), 0.0, mu));
}

namespace {

FaceField solve_linear(const LinearMap& op, const FaceField& rhs, double mu,
                       const KrylovOptions& opts) {
    LinearMap pre = [mu](const FaceField& r) { return stokes_preconditioner(r, mu); };
    return solve_gmres(op, leray(rhs), pre, opts).x;
}

}  // namespace

FaceField solve_oseen_steady(const StaggeredVelocity& base, const FaceField& rhs,
                             const FlowParams& params, bool transpose, const KrylovOptions& opts) {
    const double mu = params.mu;
    const bool conv = params.convection;
    LinearMap op = [&base, mu, conv, transpose](const FaceField& x) {
        FaceField r = -mu * laplacian(x);
        if (conv) {
            if (transpose) {
                r += convection_jacobian_transpose(base, x);
            } else {
                r += convection(base, x);
                r += convection(x, base);
            }
        }
        return leray(r);
    };
    return solve_linear(op, rhs, mu, opts);
}

SteadyState solve_steady(const ForceField& control, const FlowParams& params,
                         const SteadyOptions& opts) {
    const Grid& grid = control.grid();
    const double mu = params.mu;
    SteadyState st{FaceField(grid), CellField(grid, true), 0.0, 0, {}};
    FaceField& y = st.y;

    bool newton = false;
    for (int it = 0; it <= opts.max_iter; ++it) {
        const FaceField r = steady_residual(y, control, params);
        const double res = norm_l2(r);
        st.history.push_back(res);
        st.iterations = it;
        if (!std::isfinite(res) || (st.history.size() > 1 && res > 1e6 * std::max(st.history.front(), 1e-300)))
            throw SolverError("steady solve diverged", res, st.history);
        if (res <= opts.tol) break;
        if (it == opts.max_iter)
            throw SolverError("steady solve hit the iteration cap", res, st.history);

        try {
            if (!params.convection) {
                // Stokes: one linear solve is exact up to the Krylov tolerance
                FaceField delta = solve_oseen_steady(y, -1.0 * r, params, false, opts.linear);
                y += delta;
                continue;
            }
            if (res < opts.newton_switch) newton = true;
            if (newton) {
                FaceField delta = solve_oseen_steady(y, -1.0 * r, params, false, opts.linear);
                y += delta;
            } else {
                const FaceField base = y;
                LinearMap picard = [&base, mu](const FaceField& x) {
                    FaceField out = -mu * laplacian(x);
                    out += convection(base, x);
                    return leray(out);
                };
                FaceField next = solve_linear(picard, control, mu, opts.linear);
                y *= 1.0 - opts.damping;
                y.axpy(opts.damping, next);
            }
        } catch (const SolverError& e) {
            throw SolverError(std::string("steady solve: linear solve failed: ") + e.what(), res,
                              st.history);
        }
    }
    st.residual = st.history.back();

    FaceField full = -mu * laplacian(y);
    if (params.convection) full += convection(y, y);
    full -= control;
    CellField phi = project_divergence_free(full).potential;
    for (double& x : phi.data()) x = -x;
    st.p = std::move(phi);
    return st;
}

DecayFit stabilization_experiment(const StaggeredVelocity& y0, const ForceField& steady_control,
                                  const FlowParams& params, const SteadyOptions& opts) {
    const SteadyState inf = solve_steady(steady_control, params, opts);
    const Trajectory traj = solve_unsteady(y0, ControlSignal(steady_control), params);

    DecayFit fit;
    fit.smallness_ratio = norm_h1_semi(inf.y) / params.mu;
    fit.times = traj.times();
    for (const auto& s : traj.snapshots) fit.errors.push_back(norm_l2(s - inf.y));
    for (double e : fit.errors) fit.max_error = std::max(fit.max_error, e);
    for (std::size_t k = 1; k < fit.errors.size(); ++k)
        if (fit.errors[k] > fit.errors[k - 1] * (1.0 + 1e-9) + 1e-14) fit.monotone = false;

    const double e0 = fit.errors.front();
    if (e0 <= 1e-10) {
        fit.skipped = true;
        return fit;
    }
    const double t_lo = 0.1 * params.t_final, t_hi = 0.9 * params.t_final;
    const LogLinearFit line = fit_log_linear(fit.times, fit.errors, t_lo, t_hi);
    fit.alpha = -line.slope;
    fit.fit_residual = line.rms_residual;
    fit.points = line.points;
    for (std::size_t k = 0; k < fit.times.size(); ++k) {
        const double t = fit.times[k];
        if (t < t_lo || t > t_hi) continue;
        if (fit.errors[k] > e0 * std::exp(-fit.alpha * t) * (1.0 + 1e-6)) fit.envelope_ok = false;
        if (fit.errors[k] > e0 * std::exp(-0.9 * fit.alpha * t)) fit.relaxed_envelope_ok = false;
    }
    return fit;
}

}  // namespace nstp
