#include "nstp/mesh/fields.hpp"

#include <algorithm>
#include <cmath>

#include "nstp/mesh/errors.hpp"

namespace nstp {

FaceField::FaceField(Grid grid)
    : grid_(std::move(grid)), u_(grid_.u_size(), 0.0), v_(grid_.v_size(), 0.0) {}

FaceField FaceField::sample(Grid grid, const std::function<double(double, double)>& fu,
                            const std::function<double(double, double)>& fv) {
    FaceField f(std::move(grid));
    const int n = f.n();
    const double h = f.grid().h();
    for (int j = 0; j < n; ++j)
        for (int i = 1; i < n; ++i) f.u(i, j) = fu(i * h, (j + 0.5) * h);
    for (int j = 1; j < n; ++j)
        for (int i = 0; i < n; ++i) f.v(i, j) = fv((i + 0.5) * h, j * h);
    return f;
}

void FaceField::set_zero() {
    std::fill(u_.begin(), u_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
}

void FaceField::zero_walls() {
    const int n = grid_.n();
    for (int j = 0; j < n; ++j) {
        u(0, j) = 0.0;
        u(n, j) = 0.0;
    }
    for (int i = 0; i < n; ++i) {
        v(i, 0) = 0.0;
        v(i, n) = 0.0;
    }
}

FaceField& FaceField::axpy(double a, const FaceField& x) {
    require_same_grid(grid_, x.grid_, "FaceField::axpy");
    for (std::size_t k = 0; k < u_.size(); ++k) u_[k] += a * x.u_[k];
    for (std::size_t k = 0; k < v_.size(); ++k) v_[k] += a * x.v_[k];
    return *this;
}

FaceField& FaceField::operator+=(const FaceField& x) { return axpy(1.0, x); }
FaceField& FaceField::operator-=(const FaceField& x) { return axpy(-1.0, x); }

FaceField& FaceField::operator*=(double s) {
    for (double& x : u_) x *= s;
    for (double& x : v_) x *= s;
    return *this;
}

double FaceField::max_abs() const {
    double m = 0.0;
    for (double x : u_) m = std::max(m, std::abs(x));
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
}

FaceField operator+(FaceField a, const FaceField& b) { return a += b; }
FaceField operator-(FaceField a, const FaceField& b) { return a -= b; }
FaceField operator*(double s, FaceField a) { return a *= s; }

CellField::CellField(Grid grid, bool mean_zero)
    : grid_(std::move(grid)), values_(grid_.cell_size(), 0.0), mean_zero_(mean_zero) {}

void CellField::remove_mean() {
    double s = 0.0;
    for (double x : values_) s += x;
    const double mean = s / static_cast<double>(values_.size());
    for (double& x : values_) x -= mean;
    mean_zero_ = true;
}

double CellField::integral() const {
    double s = 0.0;
    for (double x : values_) s += x;
    return s * grid_.h() * grid_.h();
}

double CellField::max_abs() const {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
}

CellField CellField::sample(Grid grid, const std::function<double(double, double)>& f) {
    CellField c(std::move(grid));
    const int n = c.grid().n();
    const double h = c.grid().h();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) c(i, j) = f((i + 0.5) * h, (j + 0.5) * h);
    return c;
}

}  // namespace nstp
