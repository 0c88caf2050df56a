#pragma once

#include <functional>

#include "nstp/mesh/fields.hpp"

namespace nstp {

using LinearMap = std::function<FaceField(const FaceField&)>;

struct KrylovOptions {
    double rel_tol = 1e-12;
    int max_iter = 400;
    int restart = 60;  // GMRES only
};

struct KrylovResult {
    FaceField x;
    int iterations;
    double rel_residual;
};

/// Preconditioned conjugate gradients for an operator symmetric positive
/// definite in inner_l2 (on the subspace it is applied to). Throws
/// SolverError on non-convergence.
KrylovResult solve_cg(const LinearMap& op, const FaceField& rhs, const LinearMap& precond,
                      const KrylovOptions& opts = {});

/// Right-preconditioned restarted GMRES in the inner_l2 geometry.
/// Throws SolverError on non-convergence.
KrylovResult solve_gmres(const LinearMap& op, const FaceField& rhs, const LinearMap& precond,
                         const KrylovOptions& opts = {});

}  // namespace nstp
