#include "nstp/cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "nstp/flow/flow_solver.hpp"
#include "nstp/flow/series_fit.hpp"
#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/mesh/snapshot_io.hpp"
#include "nstp/mesh/table_io.hpp"
#include "nstp/opt/minimize.hpp"
#include "nstp/oseen/oseen.hpp"
#include "nstp/turnpike/turnpike.hpp"

namespace nstp::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kTwoPiSq = 2.0 * std::numbers::pi * std::numbers::pi;

// independent random streams per field source
constexpr std::uint64_t kControlStream = 0;
constexpr std::uint64_t kInitialStream = 0x9e3779b97f4a7c15ULL;

Rng stream(const ExperimentConfig& cfg, std::uint64_t offset) { return Rng(cfg.seed + offset); }

FaceField load_field(const FieldRecipe& r, const ExperimentConfig& cfg, const char* key) {
    Snapshot s = [&] {
        try {
            return read_snapshot(r.path);
        } catch (const std::exception& e) {
            throw std::invalid_argument(std::string(key) + ": " + e.what());
        }
    }();
    if (s.field.n() != cfg.flow.n)
        throw std::invalid_argument(std::string(key) + ": " + r.path.string() + " holds an n=" +
                                    std::to_string(s.field.n()) + " field, config has n=" +
                                    std::to_string(cfg.flow.n));
    return std::move(s.field);
}

SteadyOptions steady_options(const ExperimentConfig& cfg) {
    SteadyOptions o;
    o.tol = cfg.steady_tol;
    o.max_iter = cfg.steady_max_iter;
    return o;
}

MinimizeOptions minimize_options(const ExperimentConfig& cfg) {
    MinimizeOptions o;
    o.grad_tol = cfg.effective_grad_tol();
    o.max_iter = cfg.max_iter;
    o.memory = cfg.memory;
    return o;
}

Variant parse_variant(const std::string& v) {
    if (v == "steady") return Variant::steady;
    if (v == "time_independent") return Variant::time_independent;
    return Variant::unsteady;
}

bool uses_t_final(Experiment e) {
    return e == Experiment::evolve || e == Experiment::optimize || e == Experiment::lq ||
           e == Experiment::stabilize;
}

json fit_json(const TurnpikeFit& f) {
    return {{"ok", f.ok},
            {"C", f.C},
            {"gamma", f.gamma},
            {"t_lo", f.t_lo},
            {"t_hi", f.t_hi},
            {"points", f.points},
            {"rms_log_residual", f.rms_log_residual},
            {"max_relative_fit_residual", f.max_relative_fit_residual},
            {"envelope_ok", f.envelope_ok},
            {"message", f.message}};
}

json cost_json(const CostBreakdown& c) {
    return {{"tracking", c.tracking}, {"penalty", c.penalty}, {"terminal", c.terminal}, {"total", c.total}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

// Result of one experiment before the common bookkeeping.
struct Result {
    json summary = json::object();
    bool gates_passed = true;
    bool converged = true;
};

Result run_steady(const ExperimentConfig& cfg, const fs::path& dir) {
    const ForceField u = build_control(cfg);
    const SteadyState st = solve_steady(u, cfg.flow, steady_options(cfg));
    Table hist;
    std::vector<double> it;
    for (std::size_t i = 0; i < st.history.size(); ++i) it.push_back(static_cast<double>(i));
    hist.add("iteration", it);
    hist.add("residual", st.history);
    write_csv(dir / "steady_history.csv", hist);
    write_snapshot(dir / "state.fld", st.y, 0.0);
    write_snapshot(dir / "control.fld", u, 0.0);

    Result r;
    r.summary["residual"] = st.residual;
    r.summary["iterations"] = st.iterations;
    r.summary["y_l2"] = norm_l2(st.y);
    r.summary["y_h1"] = norm_h1_semi(st.y);
    r.summary["smallness_ratio"] = norm_h1_semi(st.y) / cfg.flow.mu;
    r.summary["max_velocity"] = st.y.max_abs();
    r.summary["cfl"] = cfl_number(st.y, cfg.flow);
    return r;
}

Result run_evolve(const ExperimentConfig& cfg, const fs::path& dir) {
    const StaggeredVelocity y0 = build_initial(cfg);
    const ForceField u = build_control(cfg);
    const ControlSignal control(u);
    const Trajectory traj = solve_unsteady(y0, control, cfg.flow);

    Table t;
    t.add("t", traj.times());
    const auto l2 = traj.l2_norms();
    t.add("l2", l2);
    t.add("h1", traj.h1_norms());
    std::vector<double> energy;
    for (double x : l2) energy.push_back(0.5 * x * x);
    t.add("energy", energy);
    write_csv(dir / "series.csv", t);
    write_snapshot(dir / "initial_state.fld", y0, 0.0);
    write_snapshot(dir / "final_state.fld", traj.snapshots.back(), cfg.flow.t_final);

    Result r;
    r.summary["steps"] = cfg.flow.steps();
    r.summary["final_l2"] = l2.back();
    r.summary["final_h1"] = norm_h1_semi(traj.snapshots.back());
    r.summary["max_cfl"] = traj.max_cfl;
    r.summary["energy_balance_residual"] = energy_balance_residual(traj, control);
    r.summary["warnings"] = traj.warnings;
    return r;
}

Result run_optimize(const ExperimentConfig& cfg, const fs::path& dir) {
    const Grid grid(cfg.flow.n);
    ProblemSpec spec(grid);
    spec.params = cfg.flow;
    spec.target = build_target(cfg);
    spec.y0 = build_initial(cfg);
    spec.q0 = build_terminal(cfg);
    spec.k = cfg.k;
    spec.alpha = cfg.alpha;
    spec.admissible_radius = cfg.admissible_radius;
    const Variant variant = parse_variant(cfg.variant);
    const OptimizationReport rep = minimize(spec, variant, minimize_options(cfg));

    Table t;
    const std::size_t m = rep.cost_history.size();
    std::vector<double> iter(m), step(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) iter[i] = static_cast<double>(i);
    for (std::size_t i = 0; i < rep.step_history.size() && i + 1 < m; ++i) step[i + 1] = rep.step_history[i];
    t.add("iter", iter);
    t.add("cost", rep.cost_history);
    t.add("tracking", rep.tracking_history);
    t.add("penalty", rep.penalty_history);
    t.add("grad_norm", rep.grad_history);
    t.add("step", step);
    write_csv(dir / "optimization.csv", t);

    const double dt = cfg.flow.dt;
    if (rep.control.is_steady()) {
        write_snapshot(dir / "control.fld", rep.control.field(0), 0.0);
    } else {
        fs::create_directories(dir / "controls");
        for (std::size_t j = 0; j < rep.control.size(); ++j) {
            char name[32];
            std::snprintf(name, sizeof name, "control_%05zu.fld", j);
            write_snapshot(dir / "controls" / name, rep.control.field(j), static_cast<double>(j) * dt);
        }
    }
    if (rep.steady) write_snapshot(dir / "state.fld", rep.steady->y, 0.0);
    if (rep.trajectory) write_snapshot(dir / "final_state.fld", rep.trajectory->snapshots.back(), cfg.flow.t_final);
    write_snapshot(dir / "target.fld", spec.target, 0.0);

    Result r;
    r.converged = rep.converged;
    r.summary["variant"] = to_string(variant);
    r.summary["converged"] = rep.converged;
    r.summary["stalled"] = rep.stalled;
    r.summary["iterations"] = rep.iterations;
    r.summary["first_order_residual"] = rep.first_order_residual;
    r.summary["cost"] = cost_json(rep.cost);
    r.summary["control_norm"] = control_norm(rep.control, dt);
    r.summary["target_l2"] = norm_l2(spec.target);
    r.summary["message"] = rep.message;
    return r;
}

StaggeredVelocity base_state(const ExperimentConfig& cfg) {
    const ForceField u = build_control(cfg);
    return solve_steady(u, cfg.flow, steady_options(cfg)).y;
}

Result run_lq(const ExperimentConfig& cfg, const fs::path& dir) {
    const StaggeredVelocity ybar = base_state(cfg);
    const OseenContext ctx(ybar, cfg.flow);
    const StaggeredVelocity z0 = build_initial(cfg);
    const StaggeredVelocity phi0 = build_terminal(cfg);
    const double T = cfg.flow.t_final;
    const LqSolution sol = solve_lq_optimality(z0, phi0, ctx, T);

    const auto zn = sol.z.l2_norms(), pn = sol.phi.l2_norms();
    std::vector<double> d(zn.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = zn[i] + pn[i];
    Table t;
    t.add("t", sol.z.times());
    t.add("z", zn);
    t.add("phi", pn);
    t.add("d", d);
    write_csv(dir / "lq.csv", t);
    const std::vector<double> times = sol.z.times();

    Result r;
    r.converged = sol.sweep_residual <= LqOptions{}.tol;
    r.summary["ybar_l2"] = norm_l2(ybar);
    r.summary["sweeps"] = sol.sweeps;
    r.summary["sweep_residual"] = sol.sweep_residual;
    r.summary["relaxed"] = sol.relaxed;
    if (cfg.terminal.kind == FieldRecipe::Kind::zero) {
        // no terminal layer: a single exponential away from the start
        const LogLinearFit line = fit_log_linear(times, d, 0.25 * T, T);
        r.summary["decay_fit"] = {{"gamma", -line.slope},
                                  {"C", std::exp(line.intercept)},
                                  {"t_lo", 0.25 * T},
                                  {"t_hi", T},
                                  {"points", line.points},
                                  {"rms_log_residual", line.rms_residual}};
    } else {
        r.summary["fit"] = fit_json(fit_turnpike(times, d, T));
    }

    if (!cfg.horizons.empty()) {
        // Riccati action phi(0) on growing horizons and the successive differences
        json ric = json::array();
        std::vector<StaggeredVelocity> actions;
        for (double h : cfg.horizons) actions.push_back(riccati_action(z0, ctx, h));
        for (std::size_t i = 0; i < actions.size(); ++i) {
            json e = {{"horizon", cfg.horizons[i]}, {"norm", norm_l2(actions[i])}};
            if (i > 0) e["difference"] = norm_l2(actions[i] - actions[i - 1]);
            ric.push_back(e);
        }
        r.summary["riccati"] = ric;
    }
    return r;
}

Result run_decay(const ExperimentConfig& cfg, const fs::path& dir) {
    const StaggeredVelocity ybar = base_state(cfg);
    const OseenContext ctx(ybar, cfg.flow);
    const DecayEstimate est = estimate_decay_rate(ctx, cfg.decay_horizon, cfg.decay_samples, cfg.seed);
    const CoercivityEstimate co = coercivity_surrogate(ctx, cfg.decay_samples, cfg.seed);
    write_decay_csv(dir / "decay.csv", est);
    write_snapshot(dir / "slow_mode.fld", est.slow_mode, 0.0);

    Result r;
    r.gates_passed = !est.unstable;
    r.summary["ybar_l2"] = norm_l2(ybar);
    r.summary["sigma"] = est.sigma;
    r.summary["stokes_bound"] = cfg.flow.mu * kTwoPiSq;
    r.summary["fit_residual"] = est.fit_residual;
    r.summary["samples"] = est.samples;
    r.summary["points"] = est.points;
    r.summary["unstable"] = est.unstable;
    r.summary["coercivity"] = {{"xi", co.xi}, {"gamma", co.gamma}, {"min_margin", co.min_margin}};
    return r;
}

Result run_stabilize(const ExperimentConfig& cfg, const fs::path& dir) {
    const StaggeredVelocity y0 = build_initial(cfg);
    const ForceField u = build_control(cfg);
    const DecayFit fit = stabilization_experiment(y0, u, cfg.flow, steady_options(cfg));
    Table t;
    t.add("t", fit.times);
    t.add("e", fit.errors);
    write_csv(dir / "stabilization.csv", t);

    Result r;
    r.gates_passed = fit.smallness_ratio <= cfg.smallness_bound;
    r.summary["smallness_ratio"] = fit.smallness_ratio;
    r.summary["smallness_bound"] = cfg.smallness_bound;
    r.summary["skipped"] = fit.skipped;
    r.summary["alpha"] = fit.alpha;
    r.summary["fit_residual"] = fit.fit_residual;
    r.summary["points"] = fit.points;
    r.summary["monotone"] = fit.monotone;
    r.summary["envelope_ok"] = fit.envelope_ok;
    r.summary["relaxed_envelope_ok"] = fit.relaxed_envelope_ok;
    r.summary["max_error"] = fit.max_error;
    return r;
}

Result run_turnpike(const ExperimentConfig& cfg, const fs::path& dir) {
    TurnpikeSetup s;
    s.params = cfg.flow;
    s.k = cfg.k;
    s.control_amplitude = cfg.control_amplitude;
    s.perturbation = cfg.perturbation;
    s.epsilon = cfg.epsilon;
    s.tracking_gate = cfg.tracking_gate;
    s.decay_horizon = cfg.decay_horizon;
    s.decay_samples = cfg.decay_samples;
    s.hessian_samples = cfg.hessian_samples;
    s.seed = cfg.seed;
    s.unsteady_opts = minimize_options(cfg);
    s.steady_opts.max_iter = cfg.max_iter;
    s.threads = cfg.threads;
    const TurnpikeReport rep = turnpike_experiment(s, cfg.horizons);

    Result r;
    r.gates_passed = rep.gates_passed;
    json gates = json::array();
    for (const Gate& g : rep.gates)
        gates.push_back({{"name", g.name}, {"value", g.value}, {"bound", g.bound}, {"passed", g.passed}});
    r.summary["gates"] = gates;
    r.summary["gates_passed"] = rep.gates_passed;
    r.summary["ybar_l2"] = rep.ybar_norm;
    r.summary["qbar_l2"] = rep.qbar_norm;
    r.summary["steady_cost"] = rep.steady_cost;
    r.summary["steady_first_order_residual"] = rep.steady_first_order_residual;
    r.summary["m_hat"] = rep.m_hat;
    r.summary["sigma"] = rep.sigma;
    if (!rep.gates_passed) return r;

    json hs = json::array();
    for (const HorizonResult& h : rep.horizons) {
        hs.push_back({{"horizon", h.horizon},
                      {"fit", fit_json(h.fit)},
                      {"d_mid", h.d_mid},
                      {"iterations", h.iterations},
                      {"converged", h.converged},
                      {"first_order_residual", h.first_order_residual},
                      {"cost", h.cost},
                      {"error", h.error}});
        if (!h.series.t.empty()) {
            Table t;
            t.add("t", h.series.t);
            t.add("d", h.series.d);
            t.add("dy", h.series.dy);
            t.add("dq", h.series.dq);
            write_csv(dir / ("turnpike_T" + format_double(h.horizon) + ".csv"), t);
        }
        if (!h.error.empty() || !h.converged) r.converged = false;
    }
    r.summary["horizons"] = hs;
    r.summary["lq_gamma"] = rep.lq_gamma;
    r.summary["lq_gamma_agrees"] = rep.lq_gamma_agrees;
    r.summary["d_mid_decreasing"] = rep.d_mid_decreasing;
    r.summary["gamma_spread"] = rep.gamma_spread;
    r.summary["envelopes_ok"] = rep.envelopes_ok;
    r.summary["passed"] = rep.passed;
    return r;
}

Result run_gamma(const ExperimentConfig& cfg, const fs::path& dir) {
    GammaSetup s;
    s.params = cfg.flow;
    s.control_amplitude = cfg.control_amplitude;
    s.admissible_radius = cfg.admissible_radius;
    s.smallness_bound = cfg.smallness_bound;
    s.seed = cfg.seed;
    s.opts = minimize_options(cfg);
    s.threads = cfg.threads;
    const GammaConvergenceReport rep = gamma_convergence_experiment(s, cfg.horizons);

    Table t;
    t.add("T", rep.horizons);
    t.add("averaged_cost", rep.averaged_costs);
    t.add("cost_gap", rep.cost_gaps);
    t.add("control_gap", rep.control_gaps);
    t.add("control_norm", rep.control_norms);
    t.add("smallness", rep.smallness);
    write_csv(dir / "gamma_convergence.csv", t);

    Result r;
    r.gates_passed = rep.smallness_ok;
    for (const auto& e : rep.errors)
        if (!e.empty()) r.converged = false;
    r.summary["steady_cost"] = rep.steady_cost;
    r.summary["steady_control_norm"] = rep.steady_control_norm;
    r.summary["radius"] = rep.radius ? json(*rep.radius) : json(nullptr);
    r.summary["averaged_costs"] = rep.averaged_costs;
    r.summary["cost_gaps"] = rep.cost_gaps;
    r.summary["control_gaps"] = rep.control_gaps;
    r.summary["control_norms"] = rep.control_norms;
    r.summary["smallness"] = rep.smallness;
    r.summary["errors"] = rep.errors;
    r.summary["gaps_decreasing"] = rep.gaps_decreasing;
    r.summary["gap_ratio"] = rep.gap_ratio;
    r.summary["control_gaps_nonincreasing"] = rep.control_gaps_nonincreasing;
    r.summary["radius_excess"] = rep.radius_excess;
    r.summary["smallness_ok"] = rep.smallness_ok;
    return r;
}

}  // namespace

ForceField build_control(const ExperimentConfig& cfg) {
    const Grid grid(cfg.flow.n);
    switch (cfg.control.kind) {
        case FieldRecipe::Kind::random: {
            Rng rng = stream(cfg, kControlStream);
            return cfg.control_amplitude * random_smooth_faces(grid, rng);
        }
        case FieldRecipe::Kind::file: return load_field(cfg.control, cfg, "control");
        default: return ForceField(grid);
    }
}

StaggeredVelocity build_initial(const ExperimentConfig& cfg) {
    const Grid grid(cfg.flow.n);
    switch (cfg.initial.kind) {
        case FieldRecipe::Kind::random: {
            Rng rng = stream(cfg, kInitialStream);
            FaceField f = leray(random_smooth_faces(grid, rng));
            f *= cfg.initial_amplitude / norm_l2(f);
            return f;
        }
        case FieldRecipe::Kind::file: return leray(load_field(cfg.initial, cfg, "initial"));
        default: return StaggeredVelocity(grid);
    }
}

StaggeredVelocity build_terminal(const ExperimentConfig& cfg) {
    if (cfg.terminal.kind == FieldRecipe::Kind::file) return leray(load_field(cfg.terminal, cfg, "terminal"));
    return StaggeredVelocity(Grid(cfg.flow.n));
}

FaceField build_target(const ExperimentConfig& cfg) {
    switch (cfg.target.kind) {
        case FieldRecipe::Kind::constructed:
            return solve_steady(build_control(cfg), cfg.flow, steady_options(cfg)).y;
        case FieldRecipe::Kind::control_file:
            return solve_steady(load_field(cfg.target, cfg, "target"), cfg.flow, steady_options(cfg)).y;
        case FieldRecipe::Kind::file: return load_field(cfg.target, cfg, "target");
        default: return FaceField(Grid(cfg.flow.n));
    }
}

std::vector<Diagnostic> precheck(const ExperimentConfig& cfg) {
    std::vector<Diagnostic> out;
    auto error = [&](std::string key, std::string msg) {
        out.push_back({Diagnostic::Severity::error, std::move(key), std::move(msg)});
    };
    auto warn = [&](std::string key, std::string msg) {
        out.push_back({Diagnostic::Severity::warning, std::move(key), std::move(msg)});
    };

    try {
        Grid g(cfg.flow.n);
    } catch (const std::exception& e) {
        error("n", e.what());
        return out;
    }
    try {
        cfg.flow.validate();
    } catch (const std::exception& e) {
        error("", e.what());
    }

    const Experiment ex = cfg.experiment;
    if (uses_t_final(ex)) {
        try {
            cfg.flow.steps();
        } catch (const std::exception&) {
            error("t_final", "t_final = " + format_double(cfg.flow.t_final) + " is not a multiple of dt = " +
                                 format_double(cfg.flow.dt));
        }
    }
    const bool sweep = ex == Experiment::turnpike || ex == Experiment::gamma_convergence;
    if (sweep && cfg.horizons.empty()) error("horizons", std::string("required for ") + to_string(ex));
    for (double h : cfg.horizons) {
        try {
            cfg.flow.with_horizon(h).steps();
        } catch (const std::exception&) {
            error("horizons", "horizon " + format_double(h) + " is not a multiple of dt = " + format_double(cfg.flow.dt));
        }
    }
    if (sweep && cfg.target.kind != FieldRecipe::Kind::constructed)
        error("target", std::string(to_string(ex)) + " builds its own target; only 'constructed' is accepted");
    if (sweep && cfg.control.kind != FieldRecipe::Kind::random)
        error("control", std::string(to_string(ex)) + " draws its own random control; only 'random' is accepted");
    if (ex == Experiment::lq && cfg.initial.kind == FieldRecipe::Kind::zero)
        error("initial", "lq needs a nonzero initial deviation (random or file:PATH)");
    if (ex == Experiment::optimize && cfg.variant == "steady" && cfg.initial.kind != FieldRecipe::Kind::zero)
        warn("initial", "ignored by the steady variant");

    // field files must exist and sit on the configured grid
    double control_max = 0.0, initial_max = 0.0;
    try {
        control_max = build_control(cfg).max_abs();
    } catch (const std::exception& e) {
        error("control", e.what());
    }
    try {
        initial_max = build_initial(cfg).max_abs();
    } catch (const std::exception& e) {
        error("initial", e.what());
    }
    try {
        build_terminal(cfg);
    } catch (const std::exception& e) {
        error("terminal", e.what());
    }
    if (cfg.target.kind == FieldRecipe::Kind::file || cfg.target.kind == FieldRecipe::Kind::control_file) {
        try {
            load_field(cfg.target, cfg, "target");
        } catch (const std::exception& e) {
            error("target", e.what());
        }
    }

    const double u_est = std::max(initial_max, control_max / (cfg.flow.mu * kTwoPiSq));
    if (u_est > 0.0) {
        const double h = 1.0 / cfg.flow.n;
        const double bound = cfg.flow.cfl * h / u_est;
        if (cfg.flow.dt > bound)
            warn("dt", "dt = " + format_double(cfg.flow.dt) + " exceeds the CFL estimate dt <= cfl h / U = " +
                           format_double(bound) + " (U ~ " + format_double(u_est) + ")");
    }
    return out;
}

fs::path make_run_directory(const fs::path& parent, Experiment experiment,
                            std::chrono::system_clock::time_point now) {
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    const std::string base = std::string(to_string(experiment)) + "-" + stamp;
    fs::create_directories(parent);
    fs::path dir = parent / base;
    for (int i = 2; !fs::create_directory(dir); ++i) dir = parent / (base + "-" + std::to_string(i));
    return dir;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "resolved.cfg");
        out << resolved_text(cfg);
    }

    auto fail = [&](const std::string& type, const std::string& message, const SolverError* se) {
        json err = {{"experiment", to_string(cfg.experiment)}, {"status", "error"}, {"type", type}, {"message", message}};
        if (se) {
            err["residual"] = se->residual();
            err["history"] = se->history();
        }
        write_json(dir / "error.json", err);
        return RunOutcome{kExitError, "error", message};
    };

    for (const Diagnostic& d : precheck(cfg))
        if (d.severity == Diagnostic::Severity::error) return fail("invalid_config", d.text(), nullptr);

    Result r;
    try {
        switch (cfg.experiment) {
            case Experiment::steady: r = run_steady(cfg, dir); break;
            case Experiment::evolve: r = run_evolve(cfg, dir); break;
            case Experiment::optimize: r = run_optimize(cfg, dir); break;
            case Experiment::lq: r = run_lq(cfg, dir); break;
            case Experiment::decay: r = run_decay(cfg, dir); break;
            case Experiment::stabilize: r = run_stabilize(cfg, dir); break;
            case Experiment::turnpike: r = run_turnpike(cfg, dir); break;
            case Experiment::gamma_convergence: r = run_gamma(cfg, dir); break;
        }
    } catch (const SolverError& e) {
        return fail("solver_failure", e.what(), &e);
    } catch (const std::exception& e) {
        return fail("runtime_error", e.what(), nullptr);
    }

    RunOutcome outcome;
    if (!r.gates_passed) {
        outcome = {kExitGateFailed, "gate_failed", "regime gate failed"};
    } else if (!r.converged) {
        outcome = {kExitError, "not_converged", "solver did not converge"};
    } else {
        outcome = {kExitOk, "ok", ""};
    }
    json summary = {{"experiment", to_string(cfg.experiment)}, {"status", outcome.status}};
    for (auto& [key, value] : r.summary.items()) summary[key] = value;
    write_json(dir / "summary.json", summary);
    if (outcome.exit_code == kExitError)
        write_json(dir / "error.json", {{"experiment", to_string(cfg.experiment)},
                                        {"status", outcome.status},
                                        {"type", "not_converged"},
                                        {"message", outcome.message}});
    return outcome;
}

std::vector<fs::path> plot_data(const fs::path& run_dir, const fs::path& out) {
    if (!fs::is_directory(run_dir)) throw std::invalid_argument("not a run directory: " + run_dir.string());
    fs::create_directories(out);
    std::vector<fs::path> written;

    std::vector<fs::path> snapshots;
    for (const auto& entry : fs::recursive_directory_iterator(run_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".fld") snapshots.push_back(entry.path());
    std::sort(snapshots.begin(), snapshots.end());
    for (const fs::path& p : snapshots) {
        const Snapshot s = read_snapshot(p);
        const int n = s.field.n();
        const double h = 1.0 / n;
        std::vector<double> x, y, u, v, speed;
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const double uc = 0.5 * (s.field.u(i, j) + s.field.u(i + 1, j));
                const double vc = 0.5 * (s.field.v(i, j) + s.field.v(i, j + 1));
                x.push_back((i + 0.5) * h);
                y.push_back((j + 0.5) * h);
                u.push_back(uc);
                v.push_back(vc);
                speed.push_back(std::hypot(uc, vc));
            }
        }
        Table t;
        t.add("x", x);
        t.add("y", y);
        t.add("u", u);
        t.add("v", v);
        t.add("speed", speed);
        fs::path rel = fs::relative(p, run_dir);
        std::string name = rel.replace_extension("").generic_string();
        std::replace(name.begin(), name.end(), '/', '_');
        const fs::path target = out / (name + "_cells.csv");
        write_csv(target, t);
        written.push_back(target);
    }

    const fs::path summary_path = run_dir / "summary.json";
    if (fs::exists(summary_path)) {
        std::ifstream in(summary_path);
        const json j = json::parse(in);
        const json flat = j.flatten();
        const fs::path target = out / "summary_scalars.csv";
        std::ofstream csv(target);
        csv << "key,value\n";
        for (const auto& [key, value] : flat.items()) {
            if (!value.is_number() && !value.is_boolean()) continue;
            csv << key << ",";
            if (value.is_boolean()) csv << (value.get<bool>() ? 1 : 0);
            else csv << format_double(value.get<double>());
            csv << "\n";
        }
        written.push_back(target);
    }
    return written;
}

}  // namespace nstp::cli
