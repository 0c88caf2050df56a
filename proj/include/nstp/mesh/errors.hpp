#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nstp {

/// Thrown when two fields built on different grids meet in one operation.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative or direct solve missed its tolerance. Carries the final
/// residual and, for nonlinear iterations, the residual history.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual,
                std::vector<double> history = {})
        : std::runtime_error(what), residual_(residual), history_(std::move(history)) {}

    double residual() const noexcept { return residual_; }
    const std::vector<double>& history() const noexcept { return history_; }

private:
    double residual_;
    std::vector<double> history_;
};

}  // namespace nstp
