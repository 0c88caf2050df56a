#include "nstp/mesh/grid.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "nstp/mesh/errors.hpp"
#include "spectral_plans.hpp"

namespace nstp {

namespace detail {

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

SpectralPlans::SpectralPlans(int n_) : n(n_) {
    const double pi = std::numbers::pi;
    dirichlet_nodes.resize(n - 1);
    for (int k = 0; k < n - 1; ++k) dirichlet_nodes[k] = 2.0 * std::cos(pi * (k + 1) / n) - 2.0;
    dirichlet_cells.resize(n);
    for (int k = 0; k < n; ++k) dirichlet_cells[k] = 2.0 * std::cos(pi * (k + 1) / n) - 2.0;
    neumann_cells.resize(n);
    for (int k = 0; k < n; ++k) neumann_cells[k] = 2.0 * std::cos(pi * k / n) - 2.0;

    u_norm = 4.0 * n * n;
    v_norm = 4.0 * n * n;
    cell_norm = 4.0 * n * n;

    std::vector<double> a(static_cast<std::size_t>(n) * n), b(a.size());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    u_forward = fftw_plan_r2r_2d(n, n - 1, a.data(), b.data(), FFTW_RODFT10, FFTW_RODFT00, flags);
    u_inverse = fftw_plan_r2r_2d(n, n - 1, a.data(), b.data(), FFTW_RODFT01, FFTW_RODFT00, flags);
    v_forward = fftw_plan_r2r_2d(n - 1, n, a.data(), b.data(), FFTW_RODFT00, FFTW_RODFT10, flags);
    v_inverse = fftw_plan_r2r_2d(n - 1, n, a.data(), b.data(), FFTW_RODFT00, FFTW_RODFT01, flags);
    cell_forward = fftw_plan_r2r_2d(n, n, a.data(), b.data(), FFTW_REDFT10, FFTW_REDFT10, flags);
    cell_inverse = fftw_plan_r2r_2d(n, n, a.data(), b.data(), FFTW_REDFT01, FFTW_REDFT01, flags);
}

SpectralPlans::~SpectralPlans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {u_forward, u_inverse, v_forward, v_inverse, cell_forward, cell_inverse})
        if (p) fftw_destroy_plan(p);
}

}  // namespace detail

Grid::Grid(int n) : n_(n), h_(1.0 / n) {
    if (n < 8 || (n & (n - 1)) != 0)
        throw DimensionError("grid size must be a power of two >= 8, got " + std::to_string(n));
    plans_ = std::make_shared<const detail::SpectralPlans>(n);
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (a != b)
        throw DimensionError(std::string(where) + ": grid mismatch (n=" + std::to_string(a.n()) +
                             " vs n=" + std::to_string(b.n()) + ")");
}

}  // namespace nstp
