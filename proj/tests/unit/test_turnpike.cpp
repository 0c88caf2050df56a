#include "doctest.h"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/turnpike/turnpike.hpp"

using namespace nstp;

namespace {

struct Series {
    std::vector<double> t, d;
};

Series model_series(double C, double gamma, double T, double dt) {
    Series s;
    const int n = static_cast<int>(std::lround(T / dt));
    for (int k = 0; k <= n; ++k) {
        const double t = k * dt;
        s.t.push_back(t);
        s.d.push_back(C * (std::exp(-gamma * t) + std::exp(-gamma * (T - t))));
    }
    return s;
}

FlowParams turnpike_params() {
    FlowParams p;
    p.n = 32;
    p.mu = 0.07;
    p.dt = 0.02;
    p.t_final = 1.0;
    return p;
}

}  // namespace

TEST_CASE("fit_turnpike recovers noiseless model data") {
    for (double C : {1e-6, 1e-2, 1.0, 1e3, 1e6}) {
        for (double gamma : {0.1, 1.0, 7.5, 50.0}) {
            for (double T : {1.0, 4.0, 32.0}) {
                CAPTURE(C);
                CAPTURE(gamma);
                CAPTURE(T);
                const Series s = model_series(C, gamma, T, T / 400.0);
                const TurnpikeFit fit = fit_turnpike(s.t, s.d, T);
                REQUIRE(fit.ok);
                CHECK(std::abs(fit.gamma / gamma - 1.0) <= 1e-8);
                CHECK(std::abs(fit.C / C - 1.0) <= 1e-8);
                CHECK(fit.points >= 10);
                CHECK(fit.t_lo > 0.0);
                CHECK(fit.t_hi < T);
                CHECK(fit.envelope_ok);
            }
        }
    }
}

TEST_CASE("fit_turnpike under one percent noise") {
    Rng rng(11);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (double gamma : {0.5, 2.0, 6.0}) {
        const double T = 8.0, C = 0.3;
        Series s = model_series(C, gamma, T, 0.02);
        for (double& x : s.d) x *= 1.0 + noise(rng);
        const TurnpikeFit fit = fit_turnpike(s.t, s.d, T);
        REQUIRE(fit.ok);
        CHECK(std::abs(fit.gamma / gamma - 1.0) <= 0.05);
        CHECK(std::abs(fit.C / C - 1.0) <= 0.05);
        CHECK(fit.max_relative_fit_residual < 0.06);
    }
}

TEST_CASE("fit_turnpike rejects unusable series") {
    SUBCASE("constant") {
        const std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
        const std::vector<double> d(t.size(), 0.5);
        const TurnpikeFit fit = fit_turnpike(t, d, 20.0);
        CHECK_FALSE(fit.ok);
        CHECK_FALSE(fit.message.empty());
    }
    SUBCASE("growing in the middle") {
        Series s = model_series(1.0, 2.0, 4.0, 0.02);
        for (double& x : s.d) x = 1.0 / x;
        CHECK_FALSE(fit_turnpike(s.t, s.d, 4.0).ok);
    }
    SUBCASE("too few points") {
        const Series s = model_series(1.0, 2.0, 4.0, 0.5);
        const TurnpikeFit fit = fit_turnpike(s.t, s.d, 4.0);
        CHECK_FALSE(fit.ok);
        CHECK(fit.points < 10);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(fit_turnpike({0.0, 1.0}, {1.0}, 1.0), std::invalid_argument);
    }
}

TEST_CASE("turnpike_distance") {
    FlowParams p = turnpike_params();
    p.n = 16;
    p.t_final = 0.1;
    const Grid g(p.n);
    Rng rng(3);
    const FaceField ybar = leray(random_smooth_faces(g, rng));
    const FaceField qbar = leray(random_smooth_faces(g, rng));
    const FaceField shift = leray(random_smooth_faces(g, rng));

    Trajectory y, q;
    y.params = q.params = p;
    for (int k = 0; k <= p.steps(); ++k) {
        y.snapshots.push_back(ybar + static_cast<double>(k) * shift);
        q.snapshots.push_back(qbar);
    }
    const DistanceSeries s = turnpike_distance(y, q, ybar, qbar);
    REQUIRE(s.d.size() == y.size());
    CHECK(s.t.back() == doctest::Approx(p.t_final));
    const double unit = norm_l2(shift);
    for (std::size_t k = 0; k < s.d.size(); ++k) {
        CHECK(s.dq[k] == 0.0);
        CHECK(s.dy[k] == doctest::Approx(k * unit).epsilon(1e-12));
        CHECK(s.d[k] == s.dy[k] + s.dq[k]);
    }

    q.snapshots.pop_back();
    CHECK_THROWS_AS(turnpike_distance(y, q, ybar, qbar), DimensionError);
}

TEST_CASE("parallel_for") {
    std::vector<int> hits(37, 0);
    parallel_for(37, 4, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);

    std::atomic<int> ran{0};
    CHECK_THROWS_AS(parallel_for(8, 3,
                                 [&](int i) {
                                     ++ran;
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK(ran == 8);
}

TEST_CASE("nonlinear turnpike experiment") {
    TurnpikeSetup setup;
    setup.params = turnpike_params();
    setup.threads = 3;
    const TurnpikeReport r = turnpike_experiment(setup, {8, 2, 4});

    for (const Gate& g : r.gates) {
        CAPTURE(g.name);
        CHECK(g.passed);
    }
    REQUIRE(r.gates_passed);
    CHECK(r.m_hat < setup.params.mu);
    CHECK(r.sigma > 0.0);
    REQUIRE(r.horizons.size() == 3);
    CHECK(r.horizons[0].horizon == 2.0);
    for (const HorizonResult& h : r.horizons) {
        CAPTURE(h.horizon);
        CHECK(h.error.empty());
        CHECK(h.converged);
        CHECK(h.first_order_residual <= 1e-6);
        CHECK(h.fit.ok);
        CHECK(h.fit.gamma > 0.0);
        CHECK(h.fit.envelope_ok);
    }
    CHECK(r.d_mid_decreasing);
    CHECK(r.gamma_spread <= 0.15);
    CHECK(r.lq_gamma_agrees);
    CHECK(r.passed);
}

TEST_CASE("turnpike gates stop the sweep") {
    TurnpikeSetup setup;
    setup.params = turnpike_params();
    setup.params.n = 16;
    setup.tracking_gate = 1e-12;
    const TurnpikeReport r = turnpike_experiment(setup, {2});
    CHECK_FALSE(r.gates_passed);
    CHECK(r.horizons.empty());
    CHECK_FALSE(r.passed);

    CHECK_THROWS_AS(turnpike_experiment(setup, {}), std::invalid_argument);
}

TEST_CASE("Gamma convergence of time-independent controls") {
    GammaSetup setup;
    setup.params = turnpike_params();
    setup.threads = 3;

    SUBCASE("unconstrained") {
        const GammaConvergenceReport r = gamma_convergence_experiment(setup, {2, 4, 8});
        for (const auto& e : r.errors) CHECK(e.empty());
        CHECK(r.gaps_decreasing);
        CHECK(r.gap_ratio <= 0.3);
        CHECK(r.control_gaps_nonincreasing);
        CHECK(r.smallness_ok);
        CHECK(r.radius_excess == 0.0);
    }
    SUBCASE("active admissible radius") {
        setup.admissible_radius = 1.2e-3;
        const GammaConvergenceReport r = gamma_convergence_experiment(setup, {2, 4, 8});
        for (const auto& e : r.errors) CHECK(e.empty());
        CHECK(r.steady_control_norm == doctest::Approx(1.2e-3).epsilon(1e-12));
        CHECK(r.gaps_decreasing);
        CHECK(r.gap_ratio <= 0.3);
        CHECK(r.control_gaps_nonincreasing);
        CHECK(r.radius_excess <= 1e-12);
    }
}
