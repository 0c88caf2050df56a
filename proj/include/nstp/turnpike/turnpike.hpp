#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nstp/flow/flow_solver.hpp"
#include "nstp/opt/minimize.hpp"

namespace nstp {

struct DistanceSeries {
    std::vector<double> t;
    std::vector<double> d;   ///< dy + dq
    std::vector<double> dy;  ///< |y(t) - ybar|
    std::vector<double> dq;  ///< |q(t) - qbar|
};

/// d(t_k) = |y(t_k) - ybar| + |q(t_k) - qbar| at every node.
DistanceSeries turnpike_distance(const Trajectory& y, const Trajectory& q,
                                 const StaggeredVelocity& ybar, const StaggeredVelocity& qbar);

/// Least-squares fit of log d against log C(e^{-gamma t} + e^{-gamma (T-t)})
/// on [0.05 T, 0.95 T]. Points at or below 1e-14 of the largest value in
/// that window are dropped.
struct TurnpikeFit {
    bool ok = false;
    std::string message;
    double C = 0.0;
    double gamma = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    int points = 0;
    double rms_log_residual = 0.0;
    double max_relative_fit_residual = 0.0;  ///< max |d / model - 1| on the window
    bool envelope_ok = false;                ///< d <= 1.1 model on the window
};
TurnpikeFit fit_turnpike(const std::vector<double>& t, const std::vector<double>& d, double horizon);

struct Gate {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool passed = false;
};

/// Constructed turnpike problem: target x^d = steady state of a random
/// control of size control_amplitude; y0 and q0 are the steady optimal pair
/// displaced along the slowest Oseen decay mode.
struct TurnpikeSetup {
    FlowParams params;        ///< t_final is replaced by each horizon
    double k = 1.0;
    double control_amplitude = 0.5;
    double perturbation = 0.04;            ///< |y0 - ybar| = |q0 - qbar| = perturbation |ybar|
    std::optional<double> epsilon;         ///< closeness gate, default 0.1 |ybar|
    double tracking_gate = 0.05;           ///< bound on |ybar - x^d|
    double decay_horizon = 4.0;
    int decay_samples = 2;
    int hessian_samples = 5;
    std::uint64_t seed = 1;
    MinimizeOptions steady_opts{1e-12, 400, 8, 1e-4, 0.5, 1e-14};
    MinimizeOptions unsteady_opts{1e-11, 400, 8, 1e-4, 0.5, 1e-14};
    int threads = 1;
};

struct HorizonResult {
    double horizon = 0.0;
    TurnpikeFit fit;
    double d_mid = 0.0;
    DistanceSeries series;
    int iterations = 0;
    bool converged = false;
    double first_order_residual = 0.0;
    double cost = 0.0;
    std::string error;
};

struct TurnpikeReport {
    std::vector<Gate> gates;
    bool gates_passed = false;
    double ybar_norm = 0.0;
    double qbar_norm = 0.0;
    double steady_cost = 0.0;
    double steady_first_order_residual = 0.0;
    double m_hat = 0.0;
    double sigma = 0.0;
    double lq_gamma = 0.0;
    bool lq_gamma_agrees = false;  ///< nonlinear and LQ rates within a factor 2
    std::vector<HorizonResult> horizons;
    bool d_mid_decreasing = false;
    double gamma_spread = 0.0;  ///< |gamma_a - gamma_b| / gamma_b for the two longest horizons
    bool envelopes_ok = false;
    bool passed = false;        ///< all horizons converged, fitted, monotone and certified
};

TurnpikeReport turnpike_experiment(const TurnpikeSetup& setup, std::vector<double> horizons);

/// Time-independent controls on growing horizons against the steady problem
/// min 1/2 |y - z|^2 + 1/2 |u|^2. The target z is the steady state of a
/// random control of size control_amplitude; y0 = 0.
struct GammaSetup {
    FlowParams params;
    double control_amplitude = 0.5;
    std::optional<double> admissible_radius;
    double smallness_bound = 1.0;  ///< gate on |grad ybar| / mu
    std::uint64_t seed = 1;
    MinimizeOptions opts{1e-10, 400, 8, 1e-4, 0.5, 1e-14};
    int threads = 1;
};

struct GammaConvergenceReport {
    std::vector<double> horizons;
    std::vector<double> averaged_costs;  ///< I^T / T
    std::vector<double> cost_gaps;       ///< |I^T / T - I|
    std::vector<double> control_gaps;    ///< |u^T - u_inf|
    std::vector<double> control_norms;
    std::vector<double> smallness;       ///< |grad ybar(u^T)| / mu
    std::vector<std::string> errors;     ///< per-horizon failures, empty when fine
    double steady_cost = 0.0;
    double steady_control_norm = 0.0;
    std::optional<double> radius;
    bool gaps_decreasing = false;
    double gap_ratio = 0.0;              ///< last gap / first gap
    bool control_gaps_nonincreasing = false;
    double radius_excess = 0.0;          ///< max(|u| - radius), <= 0 when respected
    bool smallness_ok = false;
};

GammaConvergenceReport gamma_convergence_experiment(const GammaSetup& setup,
                                                    std::vector<double> horizons);

/// Runs f(0..count-1) on up to `threads` workers; results are indexed, so the
/// outcome does not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& f);

}  // namespace nstp
