#include "nstp/opt/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "nstp/mesh/errors.hpp"
#include "nstp/mesh/operators.hpp"

namespace nstp {

void ProblemSpec::validate() const {
    params.validate();
    if (!(k > 0.0)) throw std::invalid_argument("k must be > 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (admissible_radius && !(*admissible_radius > 0.0))
        throw std::invalid_argument("admissible_radius must be > 0");
    if (grid().n() != params.n) throw std::invalid_argument("target grid does not match params.n");
    require_same_grid(grid(), q0.grid(), "ProblemSpec q0");
    require_same_grid(grid(), y0.grid(), "ProblemSpec y0");
}

double trapezoid_weight(int j, int steps, double dt) {
    return (j == 0 || j == steps) ? 0.5 * dt : dt;
}

double control_inner(const ControlSignal& a, const ControlSignal& b, double dt) {
    if (a.kind() != b.kind() || a.size() != b.size())
        throw DimensionError("control_inner: incompatible controls");
    if (a.is_steady()) return inner_l2(a.field(0), b.field(0));
    const int steps = static_cast<int>(a.size()) - 1;
    double s = 0.0;
    for (int j = 0; j <= steps; ++j)
        s += trapezoid_weight(j, steps, dt) * inner_l2(a.field(j), b.field(j));
    return s;
}

double control_norm(const ControlSignal& a, double dt) { return std::sqrt(control_inner(a, a, dt)); }

ControlSignal project_admissible(const ControlSignal& u, std::optional<double> radius) {
    ControlSignal out = u;
    if (!radius) return out;
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double norm = norm_l2(out.field(j));
        if (norm > *radius) out.field(j) *= *radius / norm;
    }
    return out;
}

}  // namespace nstp
