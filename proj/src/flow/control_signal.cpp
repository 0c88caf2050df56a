#include "nstp/flow/control_signal.hpp"

#include <stdexcept>

#include "nstp/mesh/errors.hpp"

namespace nstp {

ControlSignal::ControlSignal(ForceField field) : kind_(Kind::steady) {
    field.zero_walls();
    fields_.push_back(std::move(field));
}

ControlSignal::ControlSignal(std::vector<ForceField> nodes)
    : kind_(Kind::time_varying), fields_(std::move(nodes)) {
    if (fields_.empty()) throw std::invalid_argument("ControlSignal: no time nodes");
    for (auto& f : fields_) {
        require_same_grid(fields_.front().grid(), f.grid(), "ControlSignal");
        f.zero_walls();
    }
}

ControlSignal ControlSignal::zeros(const Grid& grid, int steps) {
    return ControlSignal(std::vector<ForceField>(static_cast<std::size_t>(steps) + 1, ForceField(grid)));
}

ControlSignal& ControlSignal::axpy(double a, const ControlSignal& x) {
    if (kind_ != x.kind_ || fields_.size() != x.fields_.size())
        throw DimensionError("ControlSignal::axpy: incompatible signals");
    for (std::size_t k = 0; k < fields_.size(); ++k) fields_[k].axpy(a, x.fields_[k]);
    return *this;
}

ControlSignal& ControlSignal::operator*=(double s) {
    for (auto& f : fields_) f *= s;
    return *this;
}

ControlSignal operator+(ControlSignal a, const ControlSignal& b) { return a.axpy(1.0, b); }
ControlSignal operator-(ControlSignal a, const ControlSignal& b) { return a.axpy(-1.0, b); }
ControlSignal operator*(double s, ControlSignal a) { return a *= s; }

}  // namespace nstp
