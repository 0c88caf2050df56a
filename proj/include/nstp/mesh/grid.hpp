#pragma once

#include <cstddef>
#include <memory>

namespace nstp {

namespace detail {
struct SpectralPlans;
}

/**
 * Uniform MAC grid on the unit square (0,1)^2 with n cells per side.
 *
 * Layout (index i runs in x, j in y, storage is row-major in j):
 *   - u-velocity on vertical faces:   (n+1) x n, face (i,j) at (i h, (j+1/2) h)
 *   - v-velocity on horizontal faces: n x (n+1), face (i,j) at ((i+1/2) h, j h)
 *   - scalars at cell centres:        n x n,     cell (i,j) at ((i+1/2) h, (j+1/2) h)
 *
 * Faces with i in {0,n} (u) or j in {0,n} (v) lie on the wall and always
 * carry the homogeneous Dirichlet value.
 *
 * A Grid is a cheap value: copies share the precomputed transform plans.
 */
class Grid {
public:
    /// n must be a power of two, at least 8.
    explicit Grid(int n);

    int n() const noexcept { return n_; }
    double h() const noexcept { return h_; }

    std::size_t u_size() const noexcept { return static_cast<std::size_t>(n_ + 1) * n_; }
    std::size_t v_size() const noexcept { return static_cast<std::size_t>(n_) * (n_ + 1); }
    std::size_t cell_size() const noexcept { return static_cast<std::size_t>(n_) * n_; }

    std::size_t u_index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_ + 1) * j;
    }
    std::size_t v_index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * j;
    }
    std::size_t cell_index(int i, int j) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_) * j;
    }

    const detail::SpectralPlans& plans() const noexcept { return *plans_; }

    friend bool operator==(const Grid& a, const Grid& b) noexcept { return a.n_ == b.n_; }
    friend bool operator!=(const Grid& a, const Grid& b) noexcept { return a.n_ != b.n_; }

private:
    int n_;
    double h_;
    std::shared_ptr<const detail::SpectralPlans> plans_;
};

/// Throws DimensionError unless a and b are the same grid.
void require_same_grid(const Grid& a, const Grid& b, const char* where);

}  // namespace nstp
