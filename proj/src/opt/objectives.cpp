#include "nstp/opt/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/krylov.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/opt/checkpoint.hpp"

namespace nstp {

namespace {

void require_time_varying(const ControlSignal& u, const ProblemSpec& spec, const char* where) {
    if (u.is_steady()) throw std::invalid_argument(std::string(where) + ": control must be time-varying");
    const std::size_t nodes = static_cast<std::size_t>(spec.params.steps()) + 1;
    if (u.size() != nodes)
        throw DimensionError(std::string(where) + ": control has " + std::to_string(u.size()) +
                             " nodes, expected " + std::to_string(nodes));
}

double half_sq_dist(const FaceField& a, const FaceField& b) {
    const FaceField d = a - b;
    return 0.5 * inner_l2(d, d);
}

// Nodal values of the force sensitivities s_1..s_N (s[0] unused): node 0
// and N see one adjacent step, interior nodes average two.
std::vector<StaggeredVelocity> nodal_average(std::vector<StaggeredVelocity>& s) {
    const int steps = static_cast<int>(s.size()) - 1;
    std::vector<StaggeredVelocity> q;
    q.reserve(s.size());
    q.push_back(s[1]);
    for (int j = 1; j < steps; ++j) q.push_back(0.5 * (s[j] + s[j + 1]));
    q.push_back(std::move(s[steps]));
    return q;
}

// Backward sweep of the tracking adjoint. `state(k)` must be readable for
// decreasing k; returns s_1..s_N where the sensitivity of J to the force of
// step k is dt s_{k+1}.
template <typename StateAt>
std::vector<StaggeredVelocity> adjoint_sweep(StateAt&& state, int steps, const FlowParams& params,
                                             const FaceField& target, const FaceField& terminal,
                                             double* tracking) {
    const double dt = params.dt;
    const Grid& grid = target.grid();
    std::vector<StaggeredVelocity> s(steps + 1, FaceField(grid));
    double track = 0.0;
    FaceField lambda = [&] {
        const FaceField& y = state(steps);
        track += trapezoid_weight(steps, steps, dt) * half_sq_dist(y, target);
        FaceField r = trapezoid_weight(steps, steps, dt) * (y - target);
        r += terminal;
        return leray(r);
    }();
    for (int k = steps; k >= 1; --k) {
        const FaceField& base = state(k - 1);
        AdjointStep adj = step_adjoint(base, lambda, params);
        s[k] = std::move(adj.force);
        const double w = trapezoid_weight(k - 1, steps, dt);
        track += w * half_sq_dist(base, target);
        if (k > 1) {
            lambda = std::move(adj.state);
            lambda += leray(w * (base - target));
        }
    }
    if (tracking) *tracking = track;
    return s;
}

int checkpoint_stride(const ProblemSpec& spec, int steps) {
    const Grid& g = spec.grid();
    const std::size_t bytes = sizeof(double) * (g.u_size() + g.v_size()) * (steps + 1);
    switch (spec.checkpoint) {
        case CheckpointMode::always: return ReverseTape<FaceField>::sqrt_stride(steps);
        case CheckpointMode::never: return 1;
        case CheckpointMode::automatic: break;
    }
    return bytes > spec.memory_budget ? ReverseTape<FaceField>::sqrt_stride(steps) : 1;
}

}  // namespace

CostBreakdown cost_unsteady(const ControlSignal& u, const ProblemSpec& spec) {
    require_time_varying(u, spec, "cost_unsteady");
    const Trajectory traj = solve_unsteady(spec.y0, u, spec.params);
    const int steps = static_cast<int>(traj.size()) - 1;
    CostBreakdown c;
    for (int j = 0; j <= steps; ++j) {
        const double w = trapezoid_weight(j, steps, spec.params.dt);
        c.tracking += w * half_sq_dist(traj.at(j), spec.target);
        c.penalty += 0.5 * spec.k * w * inner_l2(u.field(j), u.field(j));
    }
    c.terminal = inner_l2(spec.q0, traj.snapshots.back());
    c.total = c.tracking + c.penalty + c.terminal;
    return c;
}

UnsteadyAdjoint adjoint_unsteady(const ControlSignal& u, const ProblemSpec& spec) {
    require_time_varying(u, spec, "adjoint_unsteady");
    const FlowParams& params = spec.params;
    const int steps = params.steps();
    const int stride = checkpoint_stride(spec, steps);

    UnsteadyAdjoint out{Trajectory{}, {}, u, {}, stride > 1};
    std::vector<StaggeredVelocity> s;
    double tracking = 0.0;
    if (stride == 1) {
        out.state = solve_unsteady(spec.y0, u, params);
        s = adjoint_sweep([&](int k) -> const FaceField& { return out.state.snapshots[k]; }, steps,
                          params, spec.target, spec.q0, &tracking);
    } else {
        ReverseTape<FaceField> tape(spec.y0, steps, stride, [&](int k, const FaceField& y) {
            return step_ns(y, step_force(u, k), params);
        });
        s = adjoint_sweep([&](int k) -> const FaceField& { return tape.at(k); }, steps, params,
                          spec.target, spec.q0, &tracking);
        out.state.params = params;
        out.state.snapshots = {spec.y0, tape.final_state()};
    }
    out.adjoint = nodal_average(s);

    double penalty = 0.0;
    for (int j = 0; j <= steps; ++j) {
        penalty += 0.5 * spec.k * trapezoid_weight(j, steps, params.dt) * inner_l2(u.field(j), u.field(j));
        FaceField& g = out.gradient.field(j);
        g *= spec.k;
        g += out.adjoint[j];
    }
    out.cost.tracking = tracking;
    out.cost.penalty = penalty;
    out.cost.terminal = inner_l2(spec.q0, out.state.snapshots.back());
    out.cost.total = out.cost.tracking + out.cost.penalty + out.cost.terminal;
    return out;
}

ControlSignal gradient_unsteady(const ControlSignal& u, const ProblemSpec& spec) {
    return adjoint_unsteady(u, spec).gradient;
}

ControlSignal hessian_vec_unsteady(const ControlSignal& u, const ControlSignal& v,
                                   const ProblemSpec& spec) {
    require_time_varying(u, spec, "hessian_vec_unsteady");
    require_time_varying(v, spec, "hessian_vec_unsteady");
    const FlowParams& params = spec.params;
    const double dt = params.dt;
    const int steps = params.steps();
    const Grid& grid = spec.grid();

    const Trajectory traj = solve_unsteady(spec.y0, u, params);
    std::vector<FaceField> delta;
    delta.reserve(steps + 1);
    delta.push_back(FaceField(grid));
    for (int k = 0; k < steps; ++k)
        delta.push_back(step_tangent(traj.at(k), delta.back(), step_force(v, k), params));

    // first adjoint lambda and its directional derivative m, swept together
    const double wN = trapezoid_weight(steps, steps, dt);
    FaceField lambda = leray(wN * (traj.at(steps) - spec.target) + spec.q0);
    FaceField m = leray(wN * delta[steps]);
    std::vector<StaggeredVelocity> sigma(steps + 1, FaceField(grid));
    for (int k = steps; k >= 1; --k) {
        const FaceField& base = traj.at(k - 1);
        AdjointStep al = step_adjoint(base, lambda, params);
        AdjointStep am = step_adjoint(base, m, params);
        sigma[k] = std::move(am.force);
        if (k == 1) break;
        const double w = trapezoid_weight(k - 1, steps, dt);
        FaceField next_m = std::move(am.state);
        next_m += leray(w * delta[k - 1]);
        if (params.convection) {
            // derivative of -dt C'(y)^T s with respect to y along delta
            FaceField curv = convection_transpose(delta[k - 1], al.force);
            curv -= convection(delta[k - 1], al.force);
            next_m.axpy(-dt, leray(curv));
        }
        m = std::move(next_m);
        lambda = std::move(al.state);
        lambda += leray(w * (base - spec.target));
    }
    std::vector<StaggeredVelocity> nodal = nodal_average(sigma);
    ControlSignal hv = v;
    for (int j = 0; j <= steps; ++j) {
        hv.field(j) *= spec.k;
        hv.field(j) += nodal[j];
    }
    return hv;
}

CostBreakdown cost_steady(const ForceField& u, const ProblemSpec& spec) {
    const SteadyState st = solve_steady(u, spec.params, spec.steady);
    CostBreakdown c;
    c.tracking = half_sq_dist(st.y, spec.target);
    c.penalty = 0.5 * spec.alpha * inner_l2(u, u);
    c.total = c.tracking + c.penalty;
    return c;
}

SteadyAdjoint adjoint_steady(const ForceField& u, const ProblemSpec& spec) {
    SteadyState st = solve_steady(u, spec.params, spec.steady);
    FaceField q = solve_oseen_steady(st.y, st.y - spec.target, spec.params, true, spec.steady.linear);
    FaceField g = spec.alpha * u;
    g += q;
    CostBreakdown c;
    c.tracking = half_sq_dist(st.y, spec.target);
    c.penalty = 0.5 * spec.alpha * inner_l2(u, u);
    c.total = c.tracking + c.penalty;
    return SteadyAdjoint{std::move(st), std::move(q), std::move(g), c};
}

ForceField gradient_steady(const ForceField& u, const ProblemSpec& spec) {
    return adjoint_steady(u, spec).gradient;
}

ForceField hessian_vec_steady(const ForceField& u, const ForceField& v, const ProblemSpec& spec) {
    const SteadyAdjoint adj = adjoint_steady(u, spec);
    const FaceField& y = adj.state.y;
    const FaceField yv = solve_oseen_steady(y, v, spec.params, false, spec.steady.linear);
    FaceField rhs = yv;
    if (spec.params.convection) {
        rhs += convection(yv, adj.adjoint);
        rhs -= convection_transpose(yv, adj.adjoint);
    }
    FaceField hv = spec.alpha * v;
    hv += solve_oseen_steady(y, rhs, spec.params, true, spec.steady.linear);
    return hv;
}

CostBreakdown cost_time_independent(const ForceField& u, const ProblemSpec& spec) {
    const Trajectory traj = solve_unsteady(spec.y0, ControlSignal(u), spec.params);
    const int steps = static_cast<int>(traj.size()) - 1;
    CostBreakdown c;
    for (int j = 0; j <= steps; ++j)
        c.tracking += trapezoid_weight(j, steps, spec.params.dt) * half_sq_dist(traj.at(j), spec.target);
    ForceField uz = u;
    uz.zero_walls();
    c.penalty = 0.5 * spec.params.t_final * inner_l2(uz, uz);
    c.total = c.tracking + c.penalty;
    return c;
}

TimeIndependentAdjoint adjoint_time_independent(const ForceField& u, const ProblemSpec& spec) {
    const FlowParams& params = spec.params;
    const ControlSignal signal(u);
    const ForceField& uz = signal.field(0);
    Trajectory traj = solve_unsteady(spec.y0, signal, params);
    const int steps = static_cast<int>(traj.size()) - 1;
    double tracking = 0.0;
    const FaceField zero(spec.grid());
    auto s = adjoint_sweep([&](int k) -> const FaceField& { return traj.snapshots[k]; }, steps,
                           params, spec.target, zero, &tracking);
    FaceField integral(spec.grid());
    for (int k = 1; k <= steps; ++k) integral.axpy(params.dt, s[k]);
    FaceField g = params.t_final * uz;
    g += integral;
    CostBreakdown c;
    c.tracking = tracking;
    c.penalty = 0.5 * params.t_final * inner_l2(uz, uz);
    c.total = c.tracking + c.penalty;
    return TimeIndependentAdjoint{std::move(traj), std::move(integral), std::move(g), c};
}

MEstimate estimate_M(const StaggeredVelocity& ybar, std::uint64_t seed, int restarts,
                     int iterations) {
    const Grid& grid = ybar.grid();
    MEstimate best{0.0, FaceField(grid)};
    if (ybar.max_abs() == 0.0) return best;

    auto apply_k = [&ybar](const FaceField& v) {
        FaceField r = convection_transpose(v, ybar);
        r -= convection(v, ybar);
        r *= 0.5;
        return r;
    };
    LinearMap stokes = [](const FaceField& x) { return leray(-1.0 * laplacian(x)); };
    LinearMap pre = [](const FaceField& r) { return stokes_preconditioner(r, 1.0); };

    Rng rng(seed);
    for (int r = 0; r < restarts; ++r) {
        FaceField v = leray(random_smooth_faces(grid, rng, 6));
        v *= 1.0 / norm_h1_semi(v);
        for (int it = 0; it < iterations; ++it) {
            const FaceField kv = apply_k(v);
            const double rq = std::abs(inner_l2(v, kv));  // |v|_V = 1
            if (rq > best.value) {
                best.value = rq;
                best.maximizer = v;
            }
            const FaceField rhs = leray(kv);
            if (norm_l2(rhs) == 0.0) break;
            FaceField w = solve_cg(stokes, rhs, pre, {1e-10, 200, 0}).x;
            const double wn = norm_h1_semi(w);
            if (!(wn > 0.0)) break;
            v = (1.0 / wn) * w;
        }
    }
    return best;
}

}  // namespace nstp
