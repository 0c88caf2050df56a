#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "nstp/flow/flow_params.hpp"
#include "nstp/flow/flow_solver.hpp"
#include "nstp/mesh/fields.hpp"

namespace nstp {

/// Base flow for the linearized problem. qbar is only needed by the LQ
/// optimality system; it defaults to zero.
class OseenContext {
public:
    OseenContext(StaggeredVelocity ybar, FlowParams params,
                 std::optional<StaggeredVelocity> qbar = std::nullopt);

    const StaggeredVelocity& ybar() const noexcept { return ybar_; }
    const StaggeredVelocity& qbar() const noexcept { return qbar_; }
    const FlowParams& params() const noexcept { return params_; }
    const Grid& grid() const noexcept { return ybar_.grid(); }

    /// P(-mu L v + C(ybar, v) + C(v, ybar))
    FaceField apply(const FaceField& v) const;

private:
    StaggeredVelocity ybar_;
    StaggeredVelocity qbar_;
    FlowParams params_;
};

/// One linearized step w -> S (w + dt (f - C(ybar, w) - C(w, ybar))).
StaggeredVelocity step_oseen(const StaggeredVelocity& w, const ForceField& f,
                             const OseenContext& ctx);

/// Backward step: transpose of w -> step_oseen(w, 0) applied to q, plus dt P source.
StaggeredVelocity step_oseen_adjoint(const StaggeredVelocity& q, const ForceField& source,
                                     const OseenContext& ctx);

struct DecayEstimate {
    explicit DecayEstimate(const Grid& grid) : slow_mode(grid) {}

    double sigma = 0.0;           ///< minimum fitted rate over samples
    double fit_residual = 0.0;    ///< rms log residual of the slowest sample
    int samples = 0;
    int points = 0;               ///< fit points of the slowest sample
    bool unstable = false;        ///< sigma <= 0
    StaggeredVelocity slow_mode;  ///< final state of the slowest sample, unit L2 norm
    std::vector<double> times;    ///< trace of the slowest sample
    std::vector<double> l2;
    std::vector<double> h1;
};

/// Evolves random solenoidal fields with f = 0 and fits -d/dt log |w|_V on
/// the second half of the horizon (cut where |w|_V drops below 1e-12 of its
/// start). Throws std::invalid_argument when fewer than 10 points remain.
DecayEstimate estimate_decay_rate(const OseenContext& ctx, double horizon, int n_samples,
                                  std::uint64_t seed = 1);

/// <A z, z> + gamma |z|^2 >= xi |z|_V^2 measured on random solenoidal z
/// with xi = mu / 2.
struct CoercivityEstimate {
    double xi = 0.0;
    double gamma = 0.0;
    double min_margin = 0.0;  ///< min over samples of (<Az,z> + gamma|z|^2 - xi|z|_V^2) / |z|^2
};
CoercivityEstimate coercivity_surrogate(const OseenContext& ctx, int n_samples,
                                        std::uint64_t seed = 1);

struct LqOptions {
    double tol = 1e-9;     ///< relative sweep residual
    int max_sweeps = 300;
    double relaxation = 0.5;  ///< fallback when full replacement stops contracting
};

/// Discrete LQ problem on [0, T]: minimise over nodal controls v
///
///   sum_k w_k (|z_k|^2/2 - b(z_k, z_k, qbar) + |v_k|^2/2) + <phi0, z_N>
///
/// subject to z_{k+1} = step_oseen(z_k, (v_k + v_{k+1})/2), z_0 = z0, with
/// trapezoid weights w_k. The optimality condition is v = -phi where phi is
/// the nodal adjoint.
struct LqSolution {
    Trajectory z;
    Trajectory phi;
    std::vector<FaceField> control;
    int sweeps = 0;
    double sweep_residual = 0.0;
    bool relaxed = false;
};

LqSolution solve_lq_optimality(const StaggeredVelocity& z0, const StaggeredVelocity& phi0,
                               const OseenContext& ctx, double horizon,
                               const LqOptions& opts = {});

/// Value of the discrete LQ functional and its gradient with respect to the
/// nodal controls (in the summed inner_l2 pairing).
double lq_cost(const std::vector<FaceField>& control, const StaggeredVelocity& z0,
               const StaggeredVelocity& phi0, const OseenContext& ctx, double horizon);
std::vector<FaceField> lq_gradient(const std::vector<FaceField>& control,
                                   const StaggeredVelocity& z0, const StaggeredVelocity& phi0,
                                   const OseenContext& ctx, double horizon);

/// phi(0) of the LQ system with phi0 = 0.
StaggeredVelocity riccati_action(const StaggeredVelocity& z0, const OseenContext& ctx,
                                 double horizon, const LqOptions& opts = {});

/// CSV (t, l2, h1) of the slowest decay sample.
void write_decay_csv(const std::filesystem::path& path, const DecayEstimate& est);
/// CSV (t, z, phi) of L2 norms.
void write_lq_csv(const std::filesystem::path& path, const LqSolution& sol);

}  // namespace nstp
