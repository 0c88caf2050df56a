#pragma once

#include <vector>

#include "nstp/mesh/fields.hpp"

namespace nstp {

/// Distributed body force: one field per time node, or one field for all time.
class ControlSignal {
public:
    enum class Kind { time_varying, steady };

    /// Steady signal.
    explicit ControlSignal(ForceField field);
    /// Time-varying signal with nodes 0..steps.
    explicit ControlSignal(std::vector<ForceField> nodes);
    /// Zero time-varying signal with steps+1 nodes.
    static ControlSignal zeros(const Grid& grid, int steps);

    Kind kind() const noexcept { return kind_; }
    bool is_steady() const noexcept { return kind_ == Kind::steady; }
    const Grid& grid() const noexcept { return fields_.front().grid(); }

    /// Number of stored fields (1 when steady).
    std::size_t size() const noexcept { return fields_.size(); }
    /// Force at time node k (the single field when steady).
    const ForceField& at(int k) const { return is_steady() ? fields_.front() : fields_.at(k); }
    ForceField& field(std::size_t k) { return fields_.at(k); }
    const ForceField& field(std::size_t k) const { return fields_.at(k); }

    ControlSignal& axpy(double a, const ControlSignal& x);
    ControlSignal& operator*=(double s);

    friend bool operator==(const ControlSignal& a, const ControlSignal& b) {
        return a.kind_ == b.kind_ && a.fields_ == b.fields_;
    }

private:
    Kind kind_;
    std::vector<ForceField> fields_;
};

ControlSignal operator+(ControlSignal a, const ControlSignal& b);
ControlSignal operator-(ControlSignal a, const ControlSignal& b);
ControlSignal operator*(double s, ControlSignal a);

}  // namespace nstp
