#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nstp/mesh/grid.hpp"

namespace nstp {

/**
 * Face-centred vector field on the MAC grid.
 *
 * Used for every velocity-valued quantity (state, linearized state, adjoint)
 * and for body forces, controls and targets sampled onto faces. Wall faces
 * are kept at zero by every operator in this library.
 */
class FaceField {
public:
    explicit FaceField(Grid grid);

    /// Samples fu at u-face positions and fv at v-face positions; wall faces stay zero.
    static FaceField sample(Grid grid, const std::function<double(double, double)>& fu,
                            const std::function<double(double, double)>& fv);

    const Grid& grid() const noexcept { return grid_; }
    int n() const noexcept { return grid_.n(); }

    double& u(int i, int j) { return u_[grid_.u_index(i, j)]; }
    double u(int i, int j) const { return u_[grid_.u_index(i, j)]; }
    double& v(int i, int j) { return v_[grid_.v_index(i, j)]; }
    double v(int i, int j) const { return v_[grid_.v_index(i, j)]; }

    std::span<double> u_data() noexcept { return u_; }
    std::span<const double> u_data() const noexcept { return u_; }
    std::span<double> v_data() noexcept { return v_; }
    std::span<const double> v_data() const noexcept { return v_; }

    void set_zero();
    void zero_walls();

    /// this += a * x
    FaceField& axpy(double a, const FaceField& x);
    FaceField& operator+=(const FaceField& x);
    FaceField& operator-=(const FaceField& x);
    FaceField& operator*=(double s);

    double max_abs() const;

    friend bool operator==(const FaceField& a, const FaceField& b) {
        return a.grid_ == b.grid_ && a.u_ == b.u_ && a.v_ == b.v_;
    }

private:
    Grid grid_;
    std::vector<double> u_;
    std::vector<double> v_;
};

FaceField operator+(FaceField a, const FaceField& b);
FaceField operator-(FaceField a, const FaceField& b);
FaceField operator*(double s, FaceField a);

/// Velocity-valued unknowns: y, w, z, q, phi and the steady pair.
using StaggeredVelocity = FaceField;
/// Body forces, controls and targets; same layout as velocities.
using ForceField = FaceField;

/// Cell-centred scalar (pressures, potentials, divergence).
class CellField {
public:
    explicit CellField(Grid grid, bool mean_zero = false);

    const Grid& grid() const noexcept { return grid_; }

    double& operator()(int i, int j) { return values_[grid_.cell_index(i, j)]; }
    double operator()(int i, int j) const { return values_[grid_.cell_index(i, j)]; }

    std::span<double> data() noexcept { return values_; }
    std::span<const double> data() const noexcept { return values_; }

    bool mean_zero() const noexcept { return mean_zero_; }
    /// Subtracts the mean and marks the field as a pressure-like scalar.
    void remove_mean();
    /// h^2-weighted sum of the values.
    double integral() const;
    double max_abs() const;

    static CellField sample(Grid grid, const std::function<double(double, double)>& f);

private:
    Grid grid_;
    std::vector<double> values_;
    bool mean_zero_;
};

}  // namespace nstp
