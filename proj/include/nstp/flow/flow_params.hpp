#pragma once

#include <string>

namespace nstp {

struct FlowParams {
    double mu = 0.05;        ///< kinematic viscosity, > 0
    double dt = 0.01;        ///< time step
    double t_final = 1.0;    ///< horizon T
    int n = 32;              ///< cells per side
    bool convection = true;  ///< false gives the Stokes regime
    double cfl = 0.5;        ///< advective CFL target used by validation

    /// Number of steps T/dt; throws std::invalid_argument unless T/dt is
    /// integral to 1e-12 relative.
    int steps() const;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    FlowParams with_horizon(double t) const {
        FlowParams p = *this;
        p.t_final = t;
        return p;
    }
};

}  // namespace nstp
