#include "nstp/oseen/oseen.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nstp/flow/series_fit.hpp"
#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/mesh/table_io.hpp"

namespace nstp {

OseenContext::OseenContext(StaggeredVelocity ybar, FlowParams params,
                           std::optional<StaggeredVelocity> qbar)
    : ybar_(std::move(ybar)), qbar_(qbar ? std::move(*qbar) : FaceField(ybar_.grid())),
      params_(params) {
    require_same_grid(ybar_.grid(), qbar_.grid(), "OseenContext");
    if (ybar_.grid().n() != params_.n)
        throw DimensionError("OseenContext: base flow grid does not match params.n");
    const double scale = std::max(1.0, ybar_.max_abs());
    if (divergence(ybar_).max_abs() > 1e-10 * scale || divergence(qbar_).max_abs() > 1e-10 * std::max(1.0, qbar_.max_abs()))
        throw std::invalid_argument("OseenContext: base fields must be divergence-free");
}

FaceField OseenContext::apply(const FaceField& v) const {
    FaceField r = -params_.mu * laplacian(v);
    if (params_.convection) {
        r += convection(ybar_, v);
        r += convection(v, ybar_);
    }
    return leray(r);
}

StaggeredVelocity step_oseen(const StaggeredVelocity& w, const ForceField& f,
                             const OseenContext& ctx) {
    return step_tangent(ctx.ybar(), w, f, ctx.params());
}

StaggeredVelocity step_oseen_adjoint(const StaggeredVelocity& q, const ForceField& source,
                                     const OseenContext& ctx) {
    StaggeredVelocity out = step_adjoint(ctx.ybar(), q, ctx.params()).state;
    out.axpy(ctx.params().dt, leray(source));
    return out;
}

DecayEstimate estimate_decay_rate(const OseenContext& ctx, double horizon, int n_samples,
                                  std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("estimate_decay_rate: n_samples must be >= 1");
    const FlowParams params = ctx.params().with_horizon(horizon);
    params.validate();
    const int steps = params.steps();
    Rng rng(seed);

    DecayEstimate best(ctx.grid());
    best.sigma = std::numeric_limits<double>::infinity();
    best.samples = n_samples;
    const FaceField zero(ctx.grid());
    for (int s = 0; s < n_samples; ++s) {
        FaceField w = leray(random_faces(ctx.grid(), rng));
        std::vector<double> t{0.0}, l2{norm_l2(w)}, h1{norm_h1_semi(w)};
        const double floor = 1e-12 * h1.front();
        for (int k = 1; k <= steps && h1.back() > floor; ++k) {
            w = step_oseen(w, zero, ctx);
            t.push_back(k * params.dt);
            l2.push_back(norm_l2(w));
            h1.push_back(norm_h1_semi(w));
        }
        const double t_end = t.back();
        const LogLinearFit fit = fit_log_linear(t, h1, 0.5 * t_end, t_end);
        if (fit.points < 10)
            throw std::invalid_argument("estimate_decay_rate: fewer than 10 fit points; lengthen the horizon or reduce dt");
        const double sigma = -fit.slope;
        if (sigma < best.sigma) {
            best.sigma = sigma;
            best.fit_residual = fit.rms_residual;
            best.points = fit.points;
            best.slow_mode = (1.0 / norm_l2(w)) * w;
            best.times = std::move(t);
            best.l2 = std::move(l2);
            best.h1 = std::move(h1);
        }
    }
    best.unstable = !(best.sigma > 0.0);
    return best;
}

CoercivityEstimate coercivity_surrogate(const OseenContext& ctx, int n_samples,
                                        std::uint64_t seed) {
    Rng rng(seed);
    CoercivityEstimate est;
    est.xi = 0.5 * ctx.params().mu;
    std::vector<double> slack;  // (<Az,z> - xi |z|_V^2) / |z|^2
    for (int s = 0; s < n_samples; ++s) {
        const FaceField z = leray(random_smooth_faces(ctx.grid(), rng, 8));
        const double v = norm_h1_semi(z), l = norm_l2(z);
        slack.push_back((inner_l2(ctx.apply(z), z) - est.xi * v * v) / (l * l));
    }
    double worst = std::numeric_limits<double>::infinity();
    for (double x : slack) worst = std::min(worst, x);
    est.gamma = std::max(0.0, -worst);
    est.min_margin = worst + est.gamma;
    return est;
}

namespace {

struct LqProblem {
    const OseenContext& ctx;
    FlowParams params;
    int steps;
    const StaggeredVelocity& z0;
    const StaggeredVelocity& phi0;

    double weight(int k) const { return (k == 0 || k == steps) ? 0.5 * params.dt : params.dt; }

    std::vector<FaceField> forward(const std::vector<FaceField>& v) const {
        std::vector<FaceField> z;
        z.reserve(steps + 1);
        z.push_back(z0);
        for (int k = 0; k < steps; ++k) {
            FaceField f = v[k];
            f += v[k + 1];
            f *= 0.5;
            z.push_back(step_oseen(z.back(), f, ctx));
        }
        return z;
    }

    // derivative of |z|^2/2 - b(z, z, qbar)
    FaceField source(const FaceField& z) const {
        if (!params.convection) return z;
        FaceField r = z;
        r -= convection_transpose(z, ctx.qbar());
        r += convection(z, ctx.qbar());
        return r;
    }

    double running(const FaceField& z) const {
        double c = 0.5 * inner_l2(z, z);
        if (params.convection) c -= inner_l2(convection(z, z), ctx.qbar());
        return c;
    }

    // nodal adjoint phi_j, so that the control gradient is w_j (v_j + phi_j)
    std::vector<FaceField> backward(const std::vector<FaceField>& z) const {
        std::vector<FaceField> s(steps + 1, FaceField(ctx.grid()));
        FaceField lambda = leray(phi0 + weight(steps) * source(z[steps]));
        for (int k = steps; k >= 1; --k) {
            AdjointStep adj = step_adjoint(ctx.ybar(), lambda, params);
            s[k] = std::move(adj.force);
            if (k > 1) {
                lambda = std::move(adj.state);
                lambda += leray(weight(k - 1) * source(z[k - 1]));
            }
        }
        std::vector<FaceField> phi;
        phi.reserve(steps + 1);
        phi.push_back(s[1]);
        for (int j = 1; j < steps; ++j) phi.push_back(0.5 * (s[j] + s[j + 1]));
        phi.push_back(s[steps]);
        return phi;
    }

    double weighted_norm(const std::vector<FaceField>& v) const {
        double acc = 0.0;
        for (int k = 0; k <= steps; ++k) acc += weight(k) * inner_l2(v[k], v[k]);
        return std::sqrt(acc);
    }

    Trajectory as_trajectory(std::vector<FaceField> nodes) const {
        Trajectory t;
        t.params = params;
        t.snapshots = std::move(nodes);
        return t;
    }
};

LqProblem make_problem(const OseenContext& ctx, double horizon, const StaggeredVelocity& z0,
                       const StaggeredVelocity& phi0) {
    FlowParams params = ctx.params().with_horizon(horizon);
    params.validate();
    require_same_grid(z0.grid(), ctx.grid(), "LQ problem");
    require_same_grid(phi0.grid(), ctx.grid(), "LQ problem");
    return LqProblem{ctx, params, params.steps(), z0, phi0};
}

}  // namespace

double lq_cost(const std::vector<FaceField>& control, const StaggeredVelocity& z0,
               const StaggeredVelocity& phi0, const OseenContext& ctx, double horizon) {
    const LqProblem pb = make_problem(ctx, horizon, z0, phi0);
    if (control.size() != static_cast<std::size_t>(pb.steps) + 1)
        throw DimensionError("lq_cost: wrong number of control nodes");
    const auto z = pb.forward(control);
    double j = inner_l2(phi0, z.back());
    for (int k = 0; k <= pb.steps; ++k)
        j += pb.weight(k) * (pb.running(z[k]) + 0.5 * inner_l2(control[k], control[k]));
    return j;
}

std::vector<FaceField> lq_gradient(const std::vector<FaceField>& control,
                                   const StaggeredVelocity& z0, const StaggeredVelocity& phi0,
                                   const OseenContext& ctx, double horizon) {
    const LqProblem pb = make_problem(ctx, horizon, z0, phi0);
    if (control.size() != static_cast<std::size_t>(pb.steps) + 1)
        throw DimensionError("lq_gradient: wrong number of control nodes");
    auto g = pb.backward(pb.forward(control));
    for (int k = 0; k <= pb.steps; ++k) {
        g[k] += control[k];
        g[k] *= pb.weight(k);
    }
    return g;
}

LqSolution solve_lq_optimality(const StaggeredVelocity& z0, const StaggeredVelocity& phi0,
                               const OseenContext& ctx, double horizon, const LqOptions& opts) {
    const LqProblem pb = make_problem(ctx, horizon, z0, phi0);
    LqSolution sol;
    std::vector<FaceField> v(pb.steps + 1, FaceField(ctx.grid()));
    std::vector<FaceField> z = pb.forward(v);
    std::vector<FaceField> phi = pb.backward(z);

    double omega = 1.0;
    double prev = std::numeric_limits<double>::infinity();
    int growth = 0;
    std::vector<double> history;
    for (int sweep = 1;; ++sweep) {
        // v <- (1 - omega) v - omega phi
        std::vector<FaceField> next(pb.steps + 1, FaceField(ctx.grid()));
        for (int k = 0; k <= pb.steps; ++k) {
            next[k] = (1.0 - omega) * v[k];
            next[k].axpy(-omega, phi[k]);
        }
        std::vector<FaceField> diff(pb.steps + 1, FaceField(ctx.grid()));
        for (int k = 0; k <= pb.steps; ++k) diff[k] = next[k] - v[k];
        const double scale = pb.weighted_norm(next);
        const double res = scale > 0.0 ? pb.weighted_norm(diff) / scale : pb.weighted_norm(diff);
        history.push_back(res);
        v = std::move(next);
        z = pb.forward(v);
        phi = pb.backward(z);
        sol.sweeps = sweep;
        sol.sweep_residual = res;
        if (res <= opts.tol || scale == 0.0) break;
        if (!std::isfinite(res) || sweep >= opts.max_sweeps)
            throw SolverError("LQ sweep did not converge (coercivity lost?)", res, history);
        growth = res >= prev ? growth + 1 : 0;
        prev = res;
        if (growth >= 3 && !sol.relaxed) {
            sol.relaxed = true;
            omega = opts.relaxation;
            growth = 0;
            prev = std::numeric_limits<double>::infinity();
        }
    }
    sol.z = pb.as_trajectory(std::move(z));
    sol.phi = pb.as_trajectory(std::move(phi));
    sol.control = std::move(v);
    return sol;
}

StaggeredVelocity riccati_action(const StaggeredVelocity& z0, const OseenContext& ctx,
                                 double horizon, const LqOptions& opts) {
    const FaceField zero(ctx.grid());
    return solve_lq_optimality(z0, zero, ctx, horizon, opts).phi.at(0);
}

void write_decay_csv(const std::filesystem::path& path, const DecayEstimate& est) {
    Table t;
    t.add("t", est.times);
    t.add("l2", est.l2);
    t.add("h1", est.h1);
    write_csv(path, t);
}

void write_lq_csv(const std::filesystem::path& path, const LqSolution& sol) {
    Table t;
    t.add("t", sol.z.times());
    t.add("z", sol.z.l2_norms());
    t.add("phi", sol.phi.l2_norms());
    write_csv(path, t);
}

}  // namespace nstp
