#pragma once

#include <cstddef>
#include <vector>

namespace bsee {

/// Least-squares line through (log tau, log err).
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::size_t points = 0;
};

/// Requires at least two points and strictly positive errors and step sizes.
RateFit fit_rate(const std::vector<double>& tau, const std::vector<double>& err);

/// Errors ordered by decreasing tau. Returns the first index of the longest
/// strictly decreasing suffix; those points are flagged asymptotic.
std::size_t asymptotic_start(const std::vector<double>& err);

}  // namespace bsee
