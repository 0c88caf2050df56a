#include "nstp/opt/minimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"

namespace nstp {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::unsteady: return "unsteady";
        case Variant::steady: return "steady";
        case Variant::time_independent: return "time_independent";
    }
    return "?";
}

namespace {

struct Evaluation {
    CostBreakdown cost;
    ControlSignal gradient;
    ControlSignal adjoint;
};

class Objective {
public:
    Objective(const ProblemSpec& spec, Variant variant) : spec_(spec), variant_(variant) {}

    double dt() const { return spec_.params.dt; }

    double weight() const {
        switch (variant_) {
            case Variant::unsteady: return spec_.k;
            case Variant::steady: return spec_.alpha;
            case Variant::time_independent: return spec_.params.t_final;
        }
        return 1.0;
    }

    ControlSignal zero() const {
        if (variant_ == Variant::unsteady) return ControlSignal::zeros(spec_.grid(), spec_.params.steps());
        return ControlSignal(FaceField(spec_.grid()));
    }

    Evaluation evaluate(const ControlSignal& u) const {
        switch (variant_) {
            case Variant::unsteady: {
                UnsteadyAdjoint a = adjoint_unsteady(u, spec_);
                return {a.cost, std::move(a.gradient), ControlSignal(std::move(a.adjoint))};
            }
            case Variant::steady: {
                SteadyAdjoint a = adjoint_steady(u.field(0), spec_);
                return {a.cost, ControlSignal(std::move(a.gradient)), ControlSignal(std::move(a.adjoint))};
            }
            case Variant::time_independent: {
                TimeIndependentAdjoint a = adjoint_time_independent(u.field(0), spec_);
                return {a.cost, ControlSignal(std::move(a.gradient)),
                        ControlSignal(std::move(a.adjoint_integral))};
            }
        }
        throw std::logic_error("unknown variant");
    }

    void finish(OptimizationReport& report) const {
        const ControlSignal& u = report.control;
        switch (variant_) {
            case Variant::unsteady: {
                report.trajectory = solve_unsteady(spec_.y0, u, spec_.params);
                break;
            }
            case Variant::steady:
                report.steady = solve_steady(u.field(0), spec_.params, spec_.steady);
                break;
            case Variant::time_independent:
                report.trajectory = solve_unsteady(spec_.y0, u, spec_.params);
                break;
        }
    }

private:
    const ProblemSpec& spec_;
    Variant variant_;
};

double projected_gradient_norm(const ControlSignal& u, const ControlSignal& g,
                               std::optional<double> radius, double dt) {
    if (!radius) return control_norm(g, dt);
    ControlSignal trial = u;
    trial.axpy(-1.0, g);
    return control_norm(u - project_admissible(trial, radius), dt);
}

// L-BFGS two-loop recursion; returns -H g.
ControlSignal lbfgs_direction(const ControlSignal& g, const std::deque<ControlSignal>& s,
                              const std::deque<ControlSignal>& y, double gamma0, double dt) {
    ControlSignal q = g;
    const std::size_t m = s.size();
    std::vector<double> alpha(m), rho(m);
    for (std::size_t i = m; i-- > 0;) {
        rho[i] = 1.0 / control_inner(y[i], s[i], dt);
        alpha[i] = rho[i] * control_inner(s[i], q, dt);
        q.axpy(-alpha[i], y[i]);
    }
    if (m > 0) gamma0 = control_inner(s.back(), y.back(), dt) / control_inner(y.back(), y.back(), dt);
    q *= gamma0;
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * control_inner(y[i], q, dt);
        q.axpy(alpha[i] - beta, s[i]);
    }
    q *= -1.0;
    return q;
}

}  // namespace

OptimizationReport minimize(const ProblemSpec& spec, Variant variant, const MinimizeOptions& opts,
                            std::optional<ControlSignal> initial) {
    spec.validate();
    const Objective obj(spec, variant);
    const double dt = obj.dt();
    const auto radius = spec.admissible_radius;

    ControlSignal u = project_admissible(initial ? *initial : obj.zero(), radius);
    OptimizationReport report(u);
    report.variant = variant;

    Evaluation ev = obj.evaluate(u);
    std::deque<ControlSignal> s_mem, y_mem;

    for (int it = 0;; ++it) {
        const double pg = projected_gradient_norm(u, ev.gradient, radius, dt);
        report.cost_history.push_back(ev.cost.total);
        report.tracking_history.push_back(ev.cost.tracking);
        report.penalty_history.push_back(ev.cost.penalty);
        report.grad_history.push_back(pg);
        report.iterations = it;
        if (pg <= opts.grad_tol) {
            report.converged = true;
            break;
        }
        if (it >= opts.max_iter) {
            report.message = "iteration cap reached";
            break;
        }

        ControlSignal d = opts.memory > 0 ? lbfgs_direction(ev.gradient, s_mem, y_mem, 1.0 / obj.weight(), dt)
                                          : (-1.0 / obj.weight()) * ev.gradient;
        if (control_inner(d, ev.gradient, dt) >= 0.0) {
            s_mem.clear();
            y_mem.clear();
            d = (-1.0 / obj.weight()) * ev.gradient;
        }

        bool accepted = false;
        bool fallback = false;
        double t = 1.0;
        while (true) {
            ControlSignal trial = u;
            trial.axpy(t, d);
            trial = project_admissible(trial, radius);
            const ControlSignal step = trial - u;
            const double slope = control_inner(ev.gradient, step, dt);
            if (slope >= 0.0 && !fallback) {
                // projection destroyed the quasi-Newton descent: use the gradient
                fallback = true;
                s_mem.clear();
                y_mem.clear();
                d = (-1.0 / obj.weight()) * ev.gradient;
                t = 1.0;
                continue;
            }
            std::optional<Evaluation> next;
            try {
                next = obj.evaluate(trial);
            } catch (const SolverError&) {
                next.reset();
            }
            if (next && std::isfinite(next->cost.total)) {
                const double jn = next->cost.total, j0 = ev.cost.total;
                const bool armijo = jn <= j0 + opts.armijo * slope;
                const bool roundoff = std::abs(jn - j0) <= 1e-14 * std::abs(j0) &&
                                      projected_gradient_norm(trial, next->gradient, radius, dt) < pg;
                if (armijo || roundoff) {
                    ControlSignal yk = next->gradient - ev.gradient;
                    const double sy = control_inner(step, yk, dt);
                    if (opts.memory > 0 && sy > 1e-12 * control_norm(step, dt) * control_norm(yk, dt)) {
                        s_mem.push_back(step);
                        y_mem.push_back(std::move(yk));
                        if (static_cast<int>(s_mem.size()) > opts.memory) {
                            s_mem.pop_front();
                            y_mem.pop_front();
                        }
                    }
                    u = std::move(trial);
                    ev = std::move(*next);
                    report.step_history.push_back(t);
                    accepted = true;
                    break;
                }
            }
            t *= opts.backtrack;
            if (t < opts.min_step) break;
        }
        if (!accepted) {
            report.stalled = true;
            report.message = "line search failed: step below " + std::to_string(opts.min_step) +
                             " at projected gradient " + std::to_string(pg);
            break;
        }
    }

    report.control = u;
    report.cost = ev.cost;
    const double qn = control_norm(ev.adjoint, dt);
    report.first_order_residual = projected_gradient_norm(u, ev.gradient, radius, dt) / std::max(1.0, qn);
    for (std::size_t j = 0; j < ev.adjoint.size(); ++j) report.adjoint.push_back(ev.adjoint.field(j));
    obj.finish(report);
    return report;
}

OptimalitySystem solve_optimality_system(const ProblemSpec& spec, const MinimizeOptions& opts,
                                         std::optional<ControlSignal> initial) {
    OptimizationReport report = minimize(spec, Variant::unsteady, opts, std::move(initial));
    const FlowParams& params = spec.params;
    Trajectory y = *report.trajectory;

    double scale = 1.0;
    for (const auto& s : y.snapshots) scale = std::max(scale, norm_l2(s));
    double fwd = 0.0;
    for (std::size_t k = 0; k + 1 < y.size(); ++k) {
        const FaceField next = step_ns(y.at(k), step_force(report.control, static_cast<int>(k)), params);
        fwd = std::max(fwd, norm_l2(next - y.at(k + 1)) / scale);
    }

    ProblemSpec taped = spec;
    taped.checkpoint = CheckpointMode::always;
    const UnsteadyAdjoint check = adjoint_unsteady(report.control, taped);
    double qscale = 1.0, bwd = 0.0;
    for (const auto& q : report.adjoint) qscale = std::max(qscale, norm_l2(q));
    for (std::size_t j = 0; j < report.adjoint.size(); ++j)
        bwd = std::max(bwd, norm_l2(check.adjoint[j] - report.adjoint[j]) / qscale);

    ControlSignal coupling = spec.k * report.control;
    ControlSignal qsig(report.adjoint);
    coupling.axpy(1.0, qsig);
    const double coup = control_norm(coupling, params.dt) / std::max(1.0, control_norm(qsig, params.dt));

    Trajectory q;
    q.params = params;
    q.snapshots = report.adjoint;
    return OptimalitySystem{std::move(y), std::move(q), std::move(report), fwd, bwd, coup};
}

}  // namespace nstp
