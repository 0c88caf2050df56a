#include "nstp/turnpike/turnpike.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nstp/flow/series_fit.hpp"
#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/oseen/oseen.hpp"

namespace nstp {

void parallel_for(int count, int threads, const std::function<void(int)>& f) {
    const int workers = std::min(std::max(1, threads), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

DistanceSeries turnpike_distance(const Trajectory& y, const Trajectory& q,
                                 const StaggeredVelocity& ybar, const StaggeredVelocity& qbar) {
    if (y.size() != q.size()) throw DimensionError("turnpike_distance: horizon mismatch");
    require_same_grid(y.at(0).grid(), ybar.grid(), "turnpike_distance");
    require_same_grid(q.at(0).grid(), qbar.grid(), "turnpike_distance");
    DistanceSeries s;
    for (std::size_t k = 0; k < y.size(); ++k) {
        s.t.push_back(y.time(k));
        s.dy.push_back(norm_l2(y.at(k) - ybar));
        s.dq.push_back(norm_l2(q.at(k) - qbar));
        s.d.push_back(s.dy.back() + s.dq.back());
    }
    return s;
}

namespace {

// log(e^{-g t} + e^{-g (T - t)}) without overflow, and its derivative in g
double log_shape(double t, double T, double g) {
    return -g * std::min(t, T - t) + std::log1p(std::exp(-g * std::abs(T - 2 * t)));
}
double log_shape_dg(double t, double T, double g) {
    const double a = std::abs(T - 2 * t);
    const double e = std::exp(-g * a);
    return -std::min(t, T - t) - a * e / (1.0 + e);
}

}  // namespace

TurnpikeFit fit_turnpike(const std::vector<double>& t, const std::vector<double>& d, double horizon) {
    if (t.size() != d.size()) throw std::invalid_argument("fit_turnpike: size mismatch");
    TurnpikeFit fit;
    const double T = horizon;
    fit.t_lo = 0.05 * T;
    fit.t_hi = 0.95 * T;

    double dmax = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= fit.t_lo && t[i] <= fit.t_hi && std::isfinite(d[i])) dmax = std::max(dmax, d[i]);
    const double floor = std::max(1e-14 * dmax, std::numeric_limits<double>::min());
    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < fit.t_lo || t[i] > fit.t_hi) continue;
        if (!(d[i] > floor) || !std::isfinite(d[i])) continue;
        ts.push_back(t[i]);
        ls.push_back(std::log(d[i]));
    }
    fit.points = static_cast<int>(ts.size());
    if (fit.points < 10) {
        fit.message = "fewer than 10 usable points in the fit window";
        return fit;
    }

    const LogLinearFit left = fit_log_linear(t, d, 0.05 * T, 0.4 * T);
    const LogLinearFit right = fit_log_linear(t, d, 0.6 * T, 0.95 * T);
    double g0 = 0.0;
    int decaying = 0;
    if (left.points >= 2 && left.slope < 0.0) {
        g0 += -left.slope;
        ++decaying;
    }
    if (right.points >= 2 && right.slope > 0.0) {
        g0 += right.slope;
        ++decaying;
    }
    if (decaying == 0) {
        fit.message = "series does not decay away from the edges";
        return fit;
    }
    g0 /= decaying;
    double a0 = 0.0;
    {
        // best intercept for the initial rate
        for (std::size_t i = 0; i < ts.size(); ++i) a0 += ls[i] - log_shape(ts[i], T, g0);
        a0 /= static_cast<double>(ts.size());
    }

    auto sse = [&](double a, double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = ls[i] - a - log_shape(ts[i], T, g);
            s += r * r;
        }
        return s;
    };

    // Levenberg-Marquardt on (log C, gamma)
    double a = a0, g = g0, lambda = 1e-3;
    double cur = sse(a, g);
    for (int it = 0; it < 500; ++it) {
        double jaa = 0.0, jag = 0.0, jgg = 0.0, ra = 0.0, rg = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = ls[i] - a - log_shape(ts[i], T, g);
            const double dg = log_shape_dg(ts[i], T, g);
            jaa += 1.0;
            jag += dg;
            jgg += dg * dg;
            ra += r;
            rg += r * dg;
        }
        bool improved = false;
        double da = 0.0, dgm = 0.0;
        for (int tries = 0; tries < 40 && !improved; ++tries) {
            const double m11 = jaa * (1.0 + lambda), m22 = jgg * (1.0 + lambda), m12 = jag;
            const double det = m11 * m22 - m12 * m12;
            da = (m22 * ra - m12 * rg) / det;
            dgm = (m11 * rg - m12 * ra) / det;
            const double trial = sse(a + da, g + dgm);
            if (trial <= cur) {
                a += da;
                g += dgm;
                cur = trial;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) break;
        if (std::abs(da) <= 1e-15 * (1.0 + std::abs(a)) && std::abs(dgm) <= 1e-15 * (1.0 + std::abs(g)))
            break;
    }

    fit.C = std::exp(a);
    fit.gamma = g;
    fit.rms_log_residual = std::sqrt(cur / static_cast<double>(ts.size()));
    if (!std::isfinite(g) || g * T < 1e-2) {
        fit.message = "fitted rate is not positive";
        return fit;
    }
    fit.envelope_ok = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < fit.t_lo || t[i] > fit.t_hi) continue;
        const double model = fit.C * std::exp(log_shape(t[i], T, g));
        if (d[i] > floor)
            fit.max_relative_fit_residual = std::max(fit.max_relative_fit_residual, std::abs(d[i] / model - 1.0));
        if (d[i] > 1.1 * model) fit.envelope_ok = false;
    }
    fit.ok = true;
    return fit;
}

namespace {

Gate make_gate(std::string name, double value, double bound, bool passed) {
    return Gate{std::move(name), value, bound, passed};
}

ProblemSpec base_spec(const Grid& grid, const FlowParams& params) {
    ProblemSpec spec(grid);
    spec.params = params;
    return spec;
}

}  // namespace

TurnpikeReport turnpike_experiment(const TurnpikeSetup& setup, std::vector<double> horizons) {
    if (horizons.empty()) throw std::invalid_argument("turnpike_experiment: no horizons");
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    FlowParams params = setup.params.with_horizon(horizons.front());
    params.validate();
    for (double T : horizons) params.with_horizon(T).steps();

    TurnpikeReport rep;
    const Grid grid(params.n);
    Rng rng(setup.seed);

    ProblemSpec spec = base_spec(grid, params);
    spec.k = setup.k;
    spec.alpha = setup.k;
    const ForceField ustar = setup.control_amplitude * random_smooth_faces(grid, rng);
    spec.target = solve_steady(ustar, params, spec.steady).y;

    // steady optimal pair
    const OptimizationReport steady = minimize(spec, Variant::steady, setup.steady_opts);
    const StaggeredVelocity& ybar = steady.steady->y;
    const StaggeredVelocity& qbar = steady.adjoint.front();
    rep.ybar_norm = norm_l2(ybar);
    rep.qbar_norm = norm_l2(qbar);
    rep.steady_cost = steady.cost.total;
    rep.steady_first_order_residual = steady.first_order_residual;
    rep.gates.push_back(make_gate("steady_first_order", steady.first_order_residual, 1e-6,
                                  steady.first_order_residual <= 1e-6));

    rep.m_hat = estimate_M(ybar, setup.seed).value;
    rep.gates.push_back(make_gate("M_hat_below_mu", rep.m_hat, params.mu, rep.m_hat < params.mu));

    const double tracking = norm_l2(ybar - spec.target);
    rep.gates.push_back(make_gate("tracking_residual", tracking, setup.tracking_gate,
                                  tracking <= setup.tracking_gate));

    double rayleigh = std::numeric_limits<double>::infinity();
    for (int i = 0; i < setup.hessian_samples; ++i) {
        const ForceField v = random_smooth_faces(grid, rng);
        const ForceField hv = hessian_vec_steady(steady.control.field(0), v, spec);
        rayleigh = std::min(rayleigh, inner_l2(hv, v) / inner_l2(v, v));
    }
    rep.gates.push_back(make_gate("hessian_rayleigh", rayleigh, 0.0, rayleigh > 0.0));

    const OseenContext ctx(ybar, params, qbar);
    const DecayEstimate decay = estimate_decay_rate(ctx, setup.decay_horizon, setup.decay_samples, setup.seed);
    rep.sigma = decay.sigma;
    rep.gates.push_back(make_gate("oseen_sigma", decay.sigma, 0.0, !decay.unstable));

    const double amp = setup.perturbation * rep.ybar_norm;
    const FaceField& mode = decay.slow_mode;
    const StaggeredVelocity y0 = ybar + amp * mode;
    // terminal datum for which the constant steady pair solves the discrete
    // optimality system exactly; it differs from qbar by O(dt)
    const double dt = params.dt;
    const StaggeredVelocity q_terminal =
        leray(qbar - (dt * params.mu) * laplacian(qbar)) - (0.5 * dt) * leray(ybar - spec.target);
    const StaggeredVelocity q0 = q_terminal + amp * mode;
    const double eps = setup.epsilon.value_or(0.1 * rep.ybar_norm);
    const double closeness = norm_l2(y0 - ybar) + norm_l2(q0 - q_terminal);
    rep.gates.push_back(make_gate("initial_closeness", closeness, eps, closeness <= eps));

    rep.gates_passed = std::all_of(rep.gates.begin(), rep.gates.end(), [](const Gate& g) { return g.passed; });
    if (!rep.gates_passed) return rep;

    {
        const double T = horizons.back();
        const LqSolution lq = solve_lq_optimality(amp * mode, amp * mode, ctx, T);
        std::vector<double> dl;
        const auto zn = lq.z.l2_norms(), pn = lq.phi.l2_norms();
        for (std::size_t k = 0; k < zn.size(); ++k) dl.push_back(zn[k] + pn[k]);
        rep.lq_gamma = fit_turnpike(lq.z.times(), dl, T).gamma;
    }

    rep.horizons.resize(horizons.size());
    parallel_for(static_cast<int>(horizons.size()), setup.threads, [&](int i) {
        HorizonResult& h = rep.horizons[i];
        h.horizon = horizons[i];
        try {
            ProblemSpec sp = spec;
            sp.params = params.with_horizon(h.horizon);
            sp.y0 = y0;
            sp.q0 = q0;
            const int steps = sp.params.steps();
            const ControlSignal initial(std::vector<ForceField>(steps + 1, steady.control.field(0)));
            const OptimalitySystem sys = solve_optimality_system(sp, setup.unsteady_opts, initial);
            h.iterations = sys.report.iterations;
            h.converged = sys.report.converged;
            h.first_order_residual = sys.report.first_order_residual;
            h.cost = sys.report.cost.total;
            h.series = turnpike_distance(sys.y, sys.q, ybar, qbar);
            h.d_mid = h.series.d[h.series.d.size() / 2];
            h.fit = fit_turnpike(h.series.t, h.series.d, h.horizon);
        } catch (const std::exception& e) {
            h.error = e.what();
        }
    });

    bool all_ok = true;
    rep.envelopes_ok = true;
    rep.d_mid_decreasing = true;
    for (std::size_t i = 0; i < rep.horizons.size(); ++i) {
        const HorizonResult& h = rep.horizons[i];
        all_ok = all_ok && h.error.empty() && h.converged && h.fit.ok;
        rep.envelopes_ok = rep.envelopes_ok && h.fit.envelope_ok;
        if (i > 0 && !(h.d_mid < rep.horizons[i - 1].d_mid)) rep.d_mid_decreasing = false;
    }
    if (rep.horizons.size() >= 2) {
        const double ga = rep.horizons[rep.horizons.size() - 2].fit.gamma;
        const double gb = rep.horizons.back().fit.gamma;
        rep.gamma_spread = std::abs(ga - gb) / gb;
    }
    const double g_last = rep.horizons.back().fit.gamma;
    rep.lq_gamma_agrees = rep.lq_gamma > 0.0 && g_last > 0.0 && g_last <= 2.0 * rep.lq_gamma &&
                          rep.lq_gamma <= 2.0 * g_last;
    rep.passed = all_ok && rep.envelopes_ok && rep.d_mid_decreasing && rep.gamma_spread <= 0.15;
    return rep;
}

GammaConvergenceReport gamma_convergence_experiment(const GammaSetup& setup, std::vector<double> horizons) {
    if (horizons.empty()) throw std::invalid_argument("gamma_convergence_experiment: no horizons");
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    FlowParams params = setup.params.with_horizon(horizons.front());
    params.validate();
    for (double T : horizons) params.with_horizon(T).steps();

    GammaConvergenceReport rep;
    rep.horizons = horizons;
    rep.radius = setup.admissible_radius;
    const Grid grid(params.n);
    Rng rng(setup.seed);

    ProblemSpec spec = base_spec(grid, params);
    spec.alpha = 1.0;
    spec.admissible_radius = setup.admissible_radius;
    const ForceField ustar = setup.control_amplitude * random_smooth_faces(grid, rng);
    spec.target = solve_steady(ustar, params, spec.steady).y;

    const OptimizationReport steady = minimize(spec, Variant::steady, setup.opts);
    rep.steady_cost = steady.cost.total;
    const ForceField& uinf = steady.control.field(0);
    rep.steady_control_norm = norm_l2(uinf);

    const std::size_t m = horizons.size();
    rep.averaged_costs.assign(m, 0.0);
    rep.cost_gaps.assign(m, 0.0);
    rep.control_gaps.assign(m, 0.0);
    rep.control_norms.assign(m, 0.0);
    rep.smallness.assign(m, 0.0);
    rep.errors.assign(m, "");
    parallel_for(static_cast<int>(m), setup.threads, [&](int i) {
        try {
            ProblemSpec sp = spec;
            sp.params = params.with_horizon(horizons[i]);
            const OptimizationReport r = minimize(sp, Variant::time_independent, setup.opts, ControlSignal(uinf));
            if (!r.converged) rep.errors[i] = "not converged: " + r.message;
            const ForceField& u = r.control.field(0);
            rep.averaged_costs[i] = r.cost.total / horizons[i];
            rep.cost_gaps[i] = std::abs(rep.averaged_costs[i] - rep.steady_cost);
            rep.control_gaps[i] = norm_l2(u - uinf);
            rep.control_norms[i] = norm_l2(u);
            const SteadyState st = solve_steady(u, sp.params, sp.steady);
            rep.smallness[i] = norm_h1_semi(st.y) / params.mu;
        } catch (const std::exception& e) {
            rep.errors[i] = e.what();
        }
    });

    rep.gaps_decreasing = true;
    rep.control_gaps_nonincreasing = true;
    rep.smallness_ok = true;
    rep.radius_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && !(rep.cost_gaps[i] < rep.cost_gaps[i - 1])) rep.gaps_decreasing = false;
        if (i > 0 && rep.control_gaps[i] > rep.control_gaps[i - 1]) rep.control_gaps_nonincreasing = false;
        if (rep.smallness[i] > setup.smallness_bound) rep.smallness_ok = false;
        if (rep.radius) rep.radius_excess = std::max(rep.radius_excess, rep.control_norms[i] - *rep.radius);
    }
    if (rep.radius) rep.radius_excess = std::max(rep.radius_excess, rep.steady_control_norm - *rep.radius);
    else rep.radius_excess = 0.0;
    rep.gap_ratio = rep.cost_gaps.front() > 0.0 ? rep.cost_gaps.back() / rep.cost_gaps.front() : 0.0;
    return rep;
}

}  // namespace nstp
