#include "bsee/rate_fit.hpp"

#include <cmath>

#include "bsee/errors.hpp"

namespace bsee {

RateFit fit_rate(const std::vector<double>& tau, const std::vector<double>& err) {
    if (tau.size() != err.size()) throw StructuralError("fit_rate: tau and error lists differ in length");
    if (tau.size() < 2) throw DomainError("fit_rate: insufficient points (need at least 2)");
    const std::size_t n = tau.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(tau[i] > 0.0) || !(err[i] > 0.0)) throw DomainError("fit_rate: step sizes and errors must be positive");
        x[i] = std::log(tau[i]);
        y[i] = std::log(err[i]);
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("fit_rate: step sizes must not all coincide");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.points = n;
    return fit;
}

std::size_t asymptotic_start(const std::vector<double>& err) {
    if (err.empty()) return 0;
    std::size_t start = err.size() - 1;
    while (start > 0 && err[start - 1] > err[start]) --start;
    return start;
}

}  // namespace bsee
