#pragma once

#include "nstp/mesh/fields.hpp"

namespace nstp {

// Discrete inner products are h^2-weighted sums over faces (vectors) or
// cells (scalars). With these weights gradient = -divergence^T exactly.

double inner_l2(const FaceField& a, const FaceField& b);
double norm_l2(const FaceField& a);
/// H^1_0 seminorm, defined as sqrt(-<laplacian(a), a>): interior face
/// differences plus half-cell differences against the wall.
double norm_h1_semi(const FaceField& a);
double inner_l2(const CellField& a, const CellField& b);

/// Standard MAC divergence (u_E - u_W + v_N - v_S)/h at each cell.
CellField divergence(const FaceField& vel);

/// Face differences of a cell scalar; wall faces are zero.
FaceField gradient(const CellField& s);

/// Componentwise 5-point Laplacian. Tangential walls use the odd ghost
/// reflection, normal walls the exact Dirichlet face value.
FaceField laplacian(const FaceField& vel);

/// Skew-symmetric convection (a.grad)v + (div a) v / 2 on the MAC grid.
///
/// Each momentum control volume uses mass fluxes F interpolated from a on its
/// four edges; the row of face P is sum_e F_e v_nb(e) / (2h) with signs
/// (+E, -W, +N, -S). The flux on the shared edge of two neighbours enters
/// both rows with opposite signs, so v -> convection(a, v) is antisymmetric
/// for every a with zero wall normals, regardless of div a.
FaceField convection(const FaceField& a, const FaceField& v);

/// Transpose in the advecting slot: the unique field t with
/// <convection(w, v), q> = <w, t> for all w. Continuum analogue (grad v)^T q.
FaceField convection_transpose(const FaceField& v, const FaceField& q);

/// b(a, v, w) = <convection(a, v), w>.
double trilinear_b(const FaceField& a, const FaceField& v, const FaceField& w);

/// Result of the discrete Leray projection.
struct Projection {
    FaceField field;    ///< P v = v - gradient(potential)
    CellField potential;  ///< mean-zero solution of div grad phi = div v
};

/// Discrete Leray projector. Throws SolverError if the pressure Poisson
/// residual exceeds 1e-10 relative.
Projection project_divergence_free(const FaceField& vel);

/// P v without the potential.
FaceField leray(const FaceField& vel);

/// Solves div grad phi = rhs with homogeneous Neumann walls; the constant
/// mode of rhs is discarded and phi has zero mean.
CellField solve_pressure_poisson(const CellField& rhs);

/// Solves (a I - b laplacian) x = rhs on interior faces by sine transforms.
/// Requires a - b * lambda > 0 for every Laplacian eigenvalue lambda.
FaceField solve_shifted_laplacian(const FaceField& rhs, double a, double b);

/// Cell-centred 5-point Neumann Laplacian, div(grad(s)).
CellField pressure_laplacian(const CellField& s);

}  // namespace nstp
