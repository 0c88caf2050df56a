#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "nstp/flow/flow_solver.hpp"
#include "nstp/flow/series_fit.hpp"
#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/oseen/oseen.hpp"

using namespace nstp;

namespace {

constexpr double kTwoPiSq = 2.0 * std::numbers::pi * std::numbers::pi;

FlowParams base_params(int n = 32, double mu = 0.05, double dt = 0.02) {
    FlowParams p;
    p.n = n;
    p.mu = mu;
    p.dt = dt;
    p.t_final = 1.0;
    return p;
}

FaceField solenoidal(const Grid& g, Rng& rng, double amplitude) {
    FaceField f = leray(random_smooth_faces(g, rng));
    f *= amplitude / norm_l2(f);
    return f;
}

OseenContext small_base(Rng& rng, double amplitude, double q_amplitude = 0.0) {
    const FlowParams p = base_params();
    Grid g(p.n);
    SteadyOptions tight;
    tight.tol = 1e-12;
    SteadyState st = solve_steady(amplitude * random_smooth_faces(g, rng), p, tight);
    std::optional<FaceField> q;
    if (q_amplitude > 0.0) q = solenoidal(g, rng, q_amplitude);
    return OseenContext(st.y, p, q);
}

double dot(const std::vector<FaceField>& a, const std::vector<FaceField>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += inner_l2(a[k], b[k]);
    return s;
}

// Conjugate gradients on the quadratic LQ functional, using only cost and
// gradient evaluations: an independent route to the minimiser.
std::vector<FaceField> direct_minimize(const StaggeredVelocity& z0, const StaggeredVelocity& phi0,
                                       const OseenContext& ctx, double horizon, int nodes) {
    const Grid& g = ctx.grid();
    std::vector<FaceField> x(nodes, FaceField(g));
    const auto g0 = lq_gradient(x, z0, phi0, ctx, horizon);
    auto hess = [&](const std::vector<FaceField>& v) {
        auto gv = lq_gradient(v, z0, phi0, ctx, horizon);
        for (int k = 0; k < nodes; ++k) gv[k] -= g0[k];
        return gv;
    };
    std::vector<FaceField> r = g0;
    for (auto& f : r) f *= -1.0;
    std::vector<FaceField> p = r;
    double rr = dot(r, r);
    const double r0 = std::sqrt(rr);
    for (int it = 0; it < 200 && std::sqrt(rr) > 1e-13 * r0; ++it) {
        const auto hp = hess(p);
        const double alpha = rr / dot(p, hp);
        for (int k = 0; k < nodes; ++k) {
            x[k].axpy(alpha, p[k]);
            r[k].axpy(-alpha, hp[k]);
        }
        const double rr_new = dot(r, r);
        for (int k = 0; k < nodes; ++k) {
            p[k] *= rr_new / rr;
            p[k] += r[k];
        }
        rr = rr_new;
    }
    return x;
}

}  // namespace

TEST_CASE("Oseen step") {
    Rng rng(1);
    const FlowParams p = base_params();
    Grid g(p.n);
    OseenContext ctx = small_base(rng, 0.5);

    SUBCASE("zero in, zero out") {
        CHECK(step_oseen(FaceField(g), FaceField(g), ctx).max_abs() == 0.0);
    }

    SUBCASE("linear in (w, f)") {
        for (int trial = 0; trial < 5; ++trial) {
            FaceField w1 = solenoidal(g, rng, 1.0), w2 = solenoidal(g, rng, 1.0);
            FaceField f1 = random_faces(g, rng), f2 = random_faces(g, rng);
            const double a = 0.7, b = -1.3;
            FaceField lhs = step_oseen(a * w1 + b * w2, a * f1 + b * f2, ctx);
            FaceField rhs = a * step_oseen(w1, f1, ctx) + b * step_oseen(w2, f2, ctx);
            CHECK(norm_l2(lhs - rhs) <= 1e-12 * norm_l2(rhs));
        }
    }

    SUBCASE("zero base flow is the Stokes step") {
        OseenContext stokes(FaceField(g), p);
        FlowParams no_conv = p;
        no_conv.convection = false;
        FaceField w = solenoidal(g, rng, 1.0), f = random_faces(g, rng);
        CHECK(norm_l2(step_oseen(w, f, stokes) - step_ns(w, f, no_conv)) <= 1e-14);
        FaceField fwd = step_oseen(w, FaceField(g), stokes);
        FaceField bwd = step_oseen_adjoint(w, FaceField(g), stokes);
        CHECK(norm_l2(fwd - bwd) <= 1e-14 * norm_l2(w));
    }

    SUBCASE("adjoint pairing") {
        for (int trial = 0; trial < 10; ++trial) {
            FaceField w = leray(random_faces(g, rng)), q = leray(random_faces(g, rng));
            const double lhs = inner_l2(step_oseen(w, FaceField(g), ctx), q);
            const double rhs = inner_l2(w, step_oseen_adjoint(q, FaceField(g), ctx));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * norm_l2(w) * norm_l2(q));
        }
    }

    SUBCASE("backward Stokes steps do not grow") {
        OseenContext stokes(FaceField(g), p);
        FaceField q = leray(random_faces(g, rng));
        for (int k = 0; k < 20; ++k) {
            FaceField next = step_oseen_adjoint(q, FaceField(g), stokes);
            CHECK(norm_l2(next) <= norm_l2(q) * (1.0 + 1e-14));
            q = next;
        }
    }

    SUBCASE("rejects non-solenoidal base flow") {
        CHECK_THROWS_AS(OseenContext(random_faces(g, rng), p), std::invalid_argument);
    }
}

TEST_CASE("decay rate") {
    SUBCASE("Stokes bound and grid consistency") {
        const double mu = 0.05;
        double sig[2];
        int idx = 0;
        for (int n : {32, 64}) {
            FlowParams p = base_params(n, mu, 0.01);
            OseenContext ctx(FaceField(Grid(n)), p);
            DecayEstimate est = estimate_decay_rate(ctx, 4.0, 3, 7);
            CHECK(!est.unstable);
            CHECK(est.points >= 10);
            CHECK(est.sigma >= 0.9 * mu * kTwoPiSq);
            sig[idx++] = est.sigma;
        }
        MESSAGE("sigma n=32 " << sig[0] << " n=64 " << sig[1]);
        CHECK(std::abs(sig[0] - sig[1]) <= 0.05 * sig[1]);
    }

    SUBCASE("linear in mu") {
        Grid g(32);
        OseenContext a(FaceField(g), base_params(32, 0.05, 0.01));
        OseenContext b(FaceField(g), base_params(32, 0.1, 0.01));
        const double sa = estimate_decay_rate(a, 4.0, 2, 3).sigma;
        const double sb = estimate_decay_rate(b, 3.0, 2, 3).sigma;
        CHECK(std::abs(sb / sa - 2.0) <= 0.06);
    }

    SUBCASE("small base flow stays stable") {
        Rng rng(4);
        OseenContext ctx = small_base(rng, 1.0);
        DecayEstimate est = estimate_decay_rate(ctx, 4.0, 2, 5);
        CHECK(est.sigma > 0.0);
        CHECK(std::abs(norm_l2(est.slow_mode) - 1.0) <= 1e-12);
    }

    SUBCASE("too short a horizon is rejected") {
        Grid g(32);
        OseenContext ctx(FaceField(g), base_params(32, 0.05, 0.02));
        CHECK_THROWS_AS(estimate_decay_rate(ctx, 0.2, 1), std::invalid_argument);
    }
}

TEST_CASE("coercivity surrogate") {
    Rng rng(8);
    OseenContext ctx = small_base(rng, 1.0);
    CoercivityEstimate est = coercivity_surrogate(ctx, 20, 3);
    CHECK(est.xi > 0.0);
    CHECK(est.gamma >= 0.0);
    CHECK(est.min_margin >= -1e-12);
}

TEST_CASE("LQ optimality system") {
    Rng rng(11);
    const FlowParams p = base_params();
    Grid g(p.n);

    SUBCASE("zero data") {
        OseenContext ctx = small_base(rng, 0.5, 0.05);
        LqSolution sol = solve_lq_optimality(FaceField(g), FaceField(g), ctx, 1.0);
        for (const auto& s : sol.z.snapshots) CHECK(s.max_abs() == 0.0);
        for (const auto& s : sol.phi.snapshots) CHECK(s.max_abs() == 0.0);
    }

    SUBCASE("gradient matches central differences") {
        OseenContext ctx = small_base(rng, 0.5, 0.05);
        const double T = 0.4;
        const int nodes = 21;
        FaceField z0 = solenoidal(g, rng, 1.0), phi0 = solenoidal(g, rng, 0.3);
        std::vector<FaceField> v, dv;
        for (int k = 0; k < nodes; ++k) {
            v.push_back(0.3 * random_smooth_faces(g, rng));
            dv.push_back(random_smooth_faces(g, rng));
        }
        const auto grad = lq_gradient(v, z0, phi0, ctx, T);
        const double eps = 1e-4;
        auto shifted = [&](double s) {
            auto w = v;
            for (int k = 0; k < nodes; ++k) w[k].axpy(s, dv[k]);
            return lq_cost(w, z0, phi0, ctx, T);
        };
        const double fd = (shifted(eps) - shifted(-eps)) / (2 * eps);
        CHECK(std::abs(fd - dot(grad, dv)) <= 1e-7 * std::abs(fd));
    }

    SUBCASE("sweep agrees with direct minimisation") {
        const double T = 1.0;
        for (bool with_base : {false, true}) {
            OseenContext ctx = with_base ? small_base(rng, 0.5, 0.05) : OseenContext(FaceField(g), p);
            FaceField z0 = solenoidal(g, rng, 1.0), phi0 = solenoidal(g, rng, 0.2);
            LqSolution sol = solve_lq_optimality(z0, phi0, ctx, T);
            CHECK(sol.sweep_residual <= 1e-9);
            auto direct = direct_minimize(z0, phi0, ctx, T, static_cast<int>(sol.control.size()));
            double diff = 0.0, ref = 0.0;
            for (std::size_t k = 0; k < direct.size(); ++k) {
                diff += inner_l2(sol.control[k] - direct[k], sol.control[k] - direct[k]);
                ref += inner_l2(direct[k], direct[k]);
            }
            MESSAGE("sweeps " << sol.sweeps << " rel diff " << std::sqrt(diff / ref));
            CHECK(std::sqrt(diff / ref) <= 1e-6);
            // optimality: v = -phi
            for (std::size_t k = 0; k < direct.size(); ++k)
                CHECK(norm_l2(sol.control[k] + sol.phi.at(k)) <= 1e-8 * std::sqrt(ref));
        }
    }

    SUBCASE("turnpike shape and horizon stability") {
        OseenContext ctx = small_base(rng, 0.5, 0.05);
        FaceField z0 = solenoidal(g, rng, 1.0), phi0 = solenoidal(g, rng, 1.0);
        const double T = 4.0;
        LqSolution sol = solve_lq_optimality(z0, phi0, ctx, T);
        auto zn = sol.z.l2_norms(), pn = sol.phi.l2_norms();
        std::vector<double> d(zn.size());
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = zn[k] + pn[k];
        const auto t = sol.z.times();
        LogLinearFit left = fit_log_linear(t, d, 0.05 * T, 0.4 * T);
        std::vector<double> rev(d.rbegin(), d.rend());
        LogLinearFit right = fit_log_linear(t, rev, 0.05 * T, 0.4 * T);
        const double gamma = -std::max(left.slope, right.slope);
        MESSAGE("LQ gamma " << -left.slope << " / " << -right.slope);
        CHECK(gamma > 0.0);
        CHECK(d[d.size() / 2] < 1e-2 * d.front());

        LqSolution longer = solve_lq_optimality(z0, phi0, ctx, 2 * T);
        double change = 0.0;
        for (std::size_t k = 0; k <= d.size() / 2; ++k)
            change = std::max(change, norm_l2(sol.z.at(k) - longer.z.at(k)));
        const double c = std::exp(left.intercept);
        MESSAGE("change on [0,T/2] " << change << " bound " << c * std::exp(-gamma * T / 2));
        CHECK(change <= c * std::exp(-gamma * T / 2));
    }

    SUBCASE("sweep failure is reported") {
        OseenContext ctx(FaceField(g), p);
        LqOptions opts;
        opts.max_sweeps = 2;
        CHECK_THROWS_AS(solve_lq_optimality(solenoidal(g, rng, 1.0), FaceField(g), ctx, 1.0, opts),
                        SolverError);
    }
}

TEST_CASE("Riccati action") {
    Rng rng(17);
    const FlowParams p = base_params();
    Grid g(p.n);
    OseenContext ctx = small_base(rng, 0.5, 0.05);

    CHECK(riccati_action(FaceField(g), ctx, 1.0).max_abs() == 0.0);

    FaceField a = solenoidal(g, rng, 1.0), b = solenoidal(g, rng, 1.0);
    FaceField sum = riccati_action(a + b, ctx, 1.0);
    FaceField parts = riccati_action(a, ctx, 1.0) + riccati_action(b, ctx, 1.0);
    CHECK(norm_l2(sum - parts) <= 1e-8 * norm_l2(sum));

    FaceField r1 = riccati_action(a, ctx, 0.5), r2 = riccati_action(a, ctx, 1.0),
              r4 = riccati_action(a, ctx, 2.0), r8 = riccati_action(a, ctx, 4.0);
    const double d1 = norm_l2(r2 - r1), d2 = norm_l2(r4 - r2), d3 = norm_l2(r8 - r4);
    MESSAGE("horizon differences " << d1 << " " << d2 << " " << d3);
    CHECK(d2 <= d1);
    CHECK(d3 <= d2);
}

TEST_CASE("CSV output") {
    Grid g(32);
    OseenContext ctx(FaceField(g), base_params(32, 0.1, 0.02));
    DecayEstimate est = estimate_decay_rate(ctx, 2.0, 1, 1);
    const auto path = std::filesystem::temp_directory_path() / "nstp_decay_test.csv";
    write_decay_csv(path, est);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,l2,h1");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == static_cast<int>(est.times.size()));
    std::filesystem::remove(path);
}
