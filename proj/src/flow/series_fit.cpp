#include "nstp/flow/series_fit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace nstp {

LogLinearFit fit_log_linear(std::span<const double> t, std::span<const double> y, double t_lo,
                            double t_hi) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_log_linear: size mismatch");
    std::vector<double> xs, ls;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] < t_lo || t[k] > t_hi || !(y[k] > 0.0) || !std::isfinite(y[k])) continue;
        xs.push_back(t[k]);
        ls.push_back(std::log(y[k]));
    }
    LogLinearFit fit;
    fit.points = static_cast<int>(xs.size());
    if (fit.points < 2) return fit;
    double mx = 0.0, ml = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        ml += ls[k];
    }
    mx /= fit.points;
    ml /= fit.points;
    double sxx = 0.0, sxl = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxx += (xs[k] - mx) * (xs[k] - mx);
        sxl += (xs[k] - mx) * (ls[k] - ml);
    }
    fit.slope = sxx > 0.0 ? sxl / sxx : 0.0;
    fit.intercept = ml - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double r = ls[k] - (fit.intercept + fit.slope * xs[k]);
        ss += r * r;
    }
    fit.rms_residual = std::sqrt(ss / fit.points);
    return fit;
}

}  // namespace nstp
