#pragma once

#include <fftw3.h>

#include <vector>

namespace nstp::detail {

/// FFTW r2r plans diagonalising the MAC Laplacians.
///
/// u interior block: rows j = 0..n-1 (DST-II in y), cols i = 1..n-1 (DST-I in x).
/// v interior block: rows j = 1..n-1 (DST-I in y), cols i = 0..n-1 (DST-II in x).
/// cells:            n x n, DCT-II in both directions (homogeneous Neumann).
///
/// Plans are created with FFTW_ESTIMATE | FFTW_UNALIGNED and executed through
/// the new-array interface, which is safe to call concurrently.
struct SpectralPlans {
    explicit SpectralPlans(int n);
    ~SpectralPlans();
    SpectralPlans(const SpectralPlans&) = delete;
    SpectralPlans& operator=(const SpectralPlans&) = delete;

    int n;
    fftw_plan u_forward = nullptr;
    fftw_plan u_inverse = nullptr;
    fftw_plan v_forward = nullptr;
    fftw_plan v_inverse = nullptr;
    fftw_plan cell_forward = nullptr;
    fftw_plan cell_inverse = nullptr;

    // 1D eigenvalues times h^2 (all <= 0).
    std::vector<double> dirichlet_nodes;  // DST-I, n-1 modes
    std::vector<double> dirichlet_cells;  // DST-II, n modes
    std::vector<double> neumann_cells;    // DCT-II, n modes, first is 0

    double u_norm;     // inverse(forward(x)) = u_norm * x
    double v_norm;
    double cell_norm;
};

}  // namespace nstp::detail
