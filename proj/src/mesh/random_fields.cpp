#include "nstp/mesh/random_fields.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace nstp {

namespace {
// std::uniform_real_distribution is implementation-defined; this keeps
// sequences identical across standard libraries.
double uniform_pm1(Rng& rng) {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}
}  // namespace

FaceField random_faces(const Grid& grid, Rng& rng) {
    FaceField f(grid);
    const int n = grid.n();
    for (int j = 0; j < n; ++j)
        for (int i = 1; i < n; ++i) f.u(i, j) = uniform_pm1(rng);
    for (int j = 1; j < n; ++j)
        for (int i = 0; i < n; ++i) f.v(i, j) = uniform_pm1(rng);
    return f;
}

FaceField random_smooth_faces(const Grid& grid, Rng& rng, int max_mode) {
    const double pi = std::numbers::pi;
    std::vector<double> cu, cv;
    for (int k = 0; k < max_mode * max_mode; ++k) {
        cu.push_back(uniform_pm1(rng));
        cv.push_back(uniform_pm1(rng));
    }
    auto series = [&](const std::vector<double>& c) {
        return [&c, max_mode, pi](double x, double y) {
            double s = 0.0;
            for (int k = 1; k <= max_mode; ++k)
                for (int l = 1; l <= max_mode; ++l)
                    s += c[(k - 1) * max_mode + (l - 1)] * std::sin(k * pi * x) * std::sin(l * pi * y) /
                         (k * k + l * l);
            return s;
        };
    };
    return FaceField::sample(grid, series(cu), series(cv));
}

CellField random_cells(const Grid& grid, Rng& rng) {
    CellField c(grid);
    for (double& x : c.data()) x = uniform_pm1(rng);
    return c;
}

}  // namespace nstp
