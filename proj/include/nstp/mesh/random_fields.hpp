#pragma once

#include <cstdint>
#include <random>

#include "nstp/mesh/fields.hpp"

namespace nstp {

/// Deterministic generator used throughout; seeded explicitly by callers.
using Rng = std::mt19937_64;

/// Independent uniform(-1,1) values on every interior face.
FaceField random_faces(const Grid& grid, Rng& rng);

/// Smooth field: sum of sin(k pi x) sin(l pi y) modes with k,l <= max_mode
/// and random coefficients, sampled on faces. Not divergence-free.
FaceField random_smooth_faces(const Grid& grid, Rng& rng, int max_mode = 4);

/// Uniform(-1,1) cell values.
CellField random_cells(const Grid& grid, Rng& rng);

}  // namespace nstp
