#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/krylov.hpp"
#include "nstp/mesh/operators.hpp"
#include "nstp/mesh/random_fields.hpp"
#include "nstp/mesh/snapshot_io.hpp"

using namespace nstp;

namespace {

constexpr double kPi = std::numbers::pi;

// Plain 5-point Neumann Laplacian written out from the stencil, independent
// of divergence()/gradient().
CellField neumann_five_point(const CellField& s) {
    const int n = s.grid().n();
    const double h2 = s.grid().h() * s.grid().h();
    CellField out(s.grid());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            if (i > 0) acc += s(i - 1, j) - s(i, j);
            if (i + 1 < n) acc += s(i + 1, j) - s(i, j);
            if (j > 0) acc += s(i, j - 1) - s(i, j);
            if (j + 1 < n) acc += s(i, j + 1) - s(i, j);
            out(i, j) = acc / h2;
        }
    }
    return out;
}

double max_abs_diff(const CellField& a, const CellField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k)
        m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

}  // namespace

TEST_CASE("grid rejects sizes that are not powers of two") {
    CHECK_THROWS_AS(Grid(12), DimensionError);
    CHECK_THROWS_AS(Grid(4), DimensionError);
    Grid g(16);
    CHECK(g.h() * g.n() == 1.0);
    CHECK(g.u_size() == 17u * 16u);
    CHECK(g.v_size() == 16u * 17u);
}

TEST_CASE("grid mismatch is a dimension error") {
    Grid a(8), b(16);
    CHECK_THROWS_AS(inner_l2(FaceField(a), FaceField(b)), DimensionError);
    CHECK_THROWS_AS(convection(FaceField(a), FaceField(b)), DimensionError);
}

TEST_CASE("divergence and gradient") {
    Grid g(32);
    Rng rng(7);

    SUBCASE("zero field") {
        CHECK(divergence(FaceField(g)).max_abs() == 0.0);
        CHECK(gradient(CellField(g)).max_abs() == 0.0);
    }

    SUBCASE("constant scalar has zero gradient") {
        CellField c(g);
        for (double& x : c.data()) x = 3.25;
        CHECK(gradient(c).max_abs() == 0.0);
    }

    SUBCASE("div grad is the 5-point Neumann Laplacian") {
        CellField phi = random_cells(g, rng);
        phi.remove_mean();
        const CellField a = divergence(gradient(phi));
        const CellField b = neumann_five_point(phi);
        CHECK(max_abs_diff(a, b) <= 1e-13 * b.max_abs());
    }

    SUBCASE("discrete integration by parts") {
        for (int trial = 0; trial < 10; ++trial) {
            CellField s = random_cells(g, rng);
            FaceField w = random_faces(g, rng);
            const double lhs = inner_l2(gradient(s), w);
            const double rhs = -inner_l2(s, divergence(w));
            const double scale = norm_l2(gradient(s)) * norm_l2(w);
            CHECK(std::abs(lhs - rhs) <= 1e-13 * scale);
        }
    }

    SUBCASE("gradient of x") {
        CellField s = CellField::sample(g, [](double x, double) { return x; });
        FaceField gr = gradient(s);
        for (int j = 0; j < g.n(); ++j)
            for (int i = 1; i < g.n(); ++i) CHECK(gr.u(i, j) == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 1; j < g.n(); ++j)
            for (int i = 0; i < g.n(); ++i) CHECK(std::abs(gr.v(i, j)) <= 1e-12);
    }
}

TEST_CASE("laplacian") {
    Grid g(32);
    Rng rng(11);

    CHECK(laplacian(FaceField(g)).max_abs() == 0.0);

    SUBCASE("symmetric and negative definite") {
        for (int trial = 0; trial < 5; ++trial) {
            FaceField a = random_faces(g, rng);
            FaceField b = random_faces(g, rng);
            const double ab = inner_l2(laplacian(a), b);
            const double ba = inner_l2(a, laplacian(b));
            CHECK(std::abs(ab - ba) <= 1e-12 * std::abs(ab) + 1e-12 * norm_l2(laplacian(a)) * norm_l2(b));
            CHECK(inner_l2(laplacian(a), a) < 0.0);
        }
    }

    SUBCASE("first sine mode eigenvalue converges like h^2") {
        double prev_err = 0.0;
        for (int n : {16, 32, 64}) {
            Grid gn(n);
            FaceField s = FaceField::sample(
                gn, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); },
                [](double, double) { return 0.0; });
            const double rq = inner_l2(laplacian(s), s) / inner_l2(s, s);
            const double err = std::abs(rq + 2.0 * kPi * kPi);
            // exact discrete value: 2 (2 cos(pi h) - 2)/h^2 = -2 pi^2 (1 - pi^2 h^2/12 + ...)
            const double h = gn.h();
            CHECK(err <= 2.0 * kPi * kPi * kPi * kPi / 12.0 * h * h * 1.01);
            if (prev_err > 0.0) CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.02));
            prev_err = err;
        }
    }

    SUBCASE("shifted solve inverts a I - b laplacian") {
        FaceField rhs = random_faces(g, rng);
        for (auto [a, b] : {std::pair{1.0, 0.01}, std::pair{0.0, 0.3}}) {
            FaceField x = solve_shifted_laplacian(rhs, a, b);
            FaceField back = a * x;
            back.axpy(-b, laplacian(x));
            CHECK(norm_l2(back - rhs) <= 1e-12 * norm_l2(rhs));
        }
    }
}

TEST_CASE("convection and the trilinear form") {
    Grid g(32);
    Rng rng(13);

    SUBCASE("zero advecting field") {
        FaceField v = random_faces(g, rng);
        CHECK(convection(FaceField(g), v).max_abs() == 0.0);
        CHECK(trilinear_b(FaceField(g), v, random_faces(g, rng)) == 0.0);
    }

    SUBCASE("b(a,v,v) = 0 and antisymmetry in (v,w)") {
        for (int trial = 0; trial < 20; ++trial) {
            FaceField a = leray(random_faces(g, rng));
            FaceField v = random_faces(g, rng);
            FaceField w = random_faces(g, rng);
            const double na = norm_l2(a), nv = norm_l2(v), nw = norm_l2(w);
            CHECK(std::abs(trilinear_b(a, v, v)) <= 1e-12 * na * nv * nv);
            CHECK(std::abs(trilinear_b(a, v, w) + trilinear_b(a, w, v)) <= 1e-12 * na * nv * nw);
        }
    }

    SUBCASE("skewness survives a non-solenoidal advecting field") {
        FaceField a = random_faces(g, rng);
        FaceField v = random_faces(g, rng);
        CHECK(std::abs(trilinear_b(a, v, v)) <= 1e-12 * norm_l2(a) * norm_l2(v) * norm_l2(v));
    }

    SUBCASE("transpose in the advecting slot") {
        for (int trial = 0; trial < 10; ++trial) {
            FaceField w = random_faces(g, rng);
            FaceField v = random_faces(g, rng);
            FaceField q = random_faces(g, rng);
            const double lhs = inner_l2(convection(w, v), q);
            const double rhs = inner_l2(w, convection_transpose(v, q));
            CHECK(std::abs(lhs - rhs) <= 1e-12 * norm_l2(convection(w, v)) * norm_l2(q));
        }
    }

    SUBCASE("Ladyzhenskaya-type bound holds with a finite constant") {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            FaceField a = leray(random_smooth_faces(g, rng, 6));
            FaceField v = leray(random_smooth_faces(g, rng, 6));
            FaceField w = leray(random_smooth_faces(g, rng, 6));
            auto h1 = [](const FaceField& f) { return std::hypot(norm_l2(f), norm_h1_semi(f)); };
            const double bound = std::sqrt(norm_l2(a) * h1(a) * norm_l2(v) * h1(v)) * h1(w);
            worst = std::max(worst, std::abs(trilinear_b(a, v, w)) / bound);
        }
        MESSAGE("measured constant C = " << worst);
        CHECK(std::isfinite(worst));
        CHECK(worst < 10.0);
    }

    SUBCASE("second-order consistency with (a.grad)v") {
        // a = curl of sin^2(pi x) sin^2(pi y); v smooth with zero walls
        auto au = [](double x, double y) { return kPi * std::pow(std::sin(kPi * x), 2) * std::sin(2 * kPi * y); };
        auto av = [](double x, double y) { return -kPi * std::sin(2 * kPi * x) * std::pow(std::sin(kPi * y), 2); };
        auto vu = [](double x, double y) { return std::sin(kPi * x) * std::sin(2 * kPi * y); };
        auto vv = [](double x, double y) { return std::sin(2 * kPi * x) * std::sin(kPi * y); };
        auto exact_u = [&](double x, double y) {
            const double dx = kPi * std::cos(kPi * x) * std::sin(2 * kPi * y);
            const double dy = 2 * kPi * std::sin(kPi * x) * std::cos(2 * kPi * y);
            return au(x, y) * dx + av(x, y) * dy;
        };
        auto exact_v = [&](double x, double y) {
            const double dx = 2 * kPi * std::cos(2 * kPi * x) * std::sin(kPi * y);
            const double dy = kPi * std::sin(2 * kPi * x) * std::cos(kPi * y);
            return au(x, y) * dx + av(x, y) * dy;
        };
        double prev = 0.0;
        for (int n : {16, 32, 64}) {
            Grid gn(n);
            FaceField a = FaceField::sample(gn, au, av);
            FaceField v = FaceField::sample(gn, vu, vv);
            FaceField err = convection(a, v) - FaceField::sample(gn, exact_u, exact_v);
            const double e = norm_l2(err);
            if (prev > 0.0) CHECK(prev / e > 3.0);
            prev = e;
        }
    }
}

TEST_CASE("Leray projector") {
    Grid g(32);
    Rng rng(17);

    SUBCASE("kills divergence and is idempotent") {
        FaceField v = random_faces(g, rng);
        Projection p = project_divergence_free(v);
        CHECK(divergence(p.field).max_abs() <= 1e-10);
        CHECK(std::abs(p.potential.integral()) <= 1e-12 * g.n());
        FaceField pp = leray(p.field);
        CHECK(norm_l2(pp - p.field) <= 1e-12 * norm_l2(p.field));
        CHECK(norm_l2(p.field) <= norm_l2(v));
    }

    SUBCASE("fixes divergence-free fields") {
        FaceField v = leray(random_faces(g, rng));
        FaceField pv = project_divergence_free(v).field;
        CHECK((pv - v).max_abs() <= 1e-12 * v.max_abs());
    }

    SUBCASE("kills gradients") {
        CellField phi = random_cells(g, rng);
        FaceField gr = gradient(phi);
        CHECK(project_divergence_free(gr).field.max_abs() <= 1e-10);
    }

    SUBCASE("orthogonal to gradients and self-adjoint") {
        FaceField v = random_faces(g, rng);
        FaceField w = random_faces(g, rng);
        FaceField pv = leray(v);
        CellField psi = random_cells(g, rng);
        CHECK(std::abs(inner_l2(pv, gradient(psi))) <= 1e-10);
        CHECK(std::abs(inner_l2(pv, w) - inner_l2(v, leray(w))) <= 1e-12 * norm_l2(v) * norm_l2(w));
    }
}

TEST_CASE("norms") {
    Grid g(32);
    Rng rng(19);
    CHECK(norm_l2(FaceField(g)) == 0.0);
    CHECK(norm_h1_semi(FaceField(g)) == 0.0);

    FaceField v = random_faces(g, rng);
    CHECK(norm_l2(2.0 * v) == doctest::Approx(2.0 * norm_l2(v)).epsilon(1e-15));
    CHECK(norm_h1_semi(2.0 * v) == doctest::Approx(2.0 * norm_h1_semi(v)).epsilon(1e-15));

    FaceField w = random_faces(g, rng);
    CHECK(std::abs(inner_l2(v, w)) <= norm_l2(v) * norm_l2(w));

    // Poincare with the first Dirichlet eigenvalue 2 pi^2 of the unit square
    for (int trial = 0; trial < 20; ++trial) {
        FaceField p = leray(trial % 2 ? random_faces(g, rng) : random_smooth_faces(g, rng));
        CHECK(norm_l2(p) <= norm_h1_semi(p) / std::sqrt(2.0 * kPi * kPi) * (1.0 + 5.0 * g.h()));
    }
}

TEST_CASE("krylov solvers on the Stokes operator") {
    Grid g(32);
    Rng rng(23);
    const double mu = 0.1;
    LinearMap stokes = [&](const FaceField& x) { return leray(-mu * laplacian(x)); };
    LinearMap pre = [&](const FaceField& r) { return leray(solve_shifted_laplacian(leray(r), 0.0, mu)); };
    FaceField rhs = leray(random_faces(g, rng));

    KrylovResult cg = solve_cg(stokes, rhs, pre);
    CHECK(norm_l2(stokes(cg.x) - rhs) <= 1e-11 * norm_l2(rhs));
    KrylovResult gm = solve_gmres(stokes, rhs, pre);
    CHECK(norm_l2(stokes(gm.x) - rhs) <= 1e-11 * norm_l2(rhs));
    CHECK(norm_l2(cg.x - gm.x) <= 1e-9 * norm_l2(cg.x));
    MESSAGE("CG iterations " << cg.iterations << ", GMRES iterations " << gm.iterations);

    KrylovOptions tight;
    tight.max_iter = 2;
    CHECK_THROWS_AS(solve_cg(stokes, rhs, pre, tight), SolverError);
}

TEST_CASE("snapshot round trip") {
    Grid g(16);
    Rng rng(29);
    FaceField f = random_faces(g, rng);
    const auto path = std::filesystem::temp_directory_path() / "nstp_snapshot_test.bin";
    write_snapshot(path, f, 0.625);
    Snapshot s = read_snapshot(path);
    CHECK(s.time == 0.625);
    CHECK(s.field == f);
    CHECK(std::filesystem::file_size(path) == 8 + 2 * (4 + 4 + 8) + 2 * 17 * 16 * 8);
    std::filesystem::remove(path);
}
