#pragma once

#include <span>

namespace nstp {

/// Least-squares line through (t, log y) for t in [t_lo, t_hi] and y > 0.
struct LogLinearFit {
    double slope = 0.0;
    double intercept = 0.0;   ///< log y at t = 0
    double rms_residual = 0.0;  ///< in log units
    int points = 0;
};

LogLinearFit fit_log_linear(std::span<const double> t, std::span<const double> y, double t_lo,
                            double t_hi);

}  // namespace nstp
