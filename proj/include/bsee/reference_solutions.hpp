#pragma once

// Manufactured test problems. Every case has terminal data p_T = phi(W(T)) v
// with the modal profile v_m = m^{-a}. Closed-form cases have separable
// solutions p(t) = phi_p(W(t)) c(t), z(t) = phi_z(W(t)) c(t) with
//   c(t) = e^{-rho (T-t)} e^{(T-t)A} v.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsee/backend.hpp"
#include "bsee/driver.hpp"
#include "bsee/field.hpp"
#include "bsee/spectral_space.hpp"

namespace bsee {

/// A scalar function of the Brownian coordinate whose Gaussian smoothing only rescales it:
/// E value(x + sqrt(s) xi) = e^{-heat_rate s} value(x) for a standard normal xi.
struct SpatialProfile {
    std::string name;
    std::function<double(double x)> value;
    double heat_rate = 0.0;
    /// E value(W(t))^2.
    std::function<double(double t)> second_moment;

    double heat(double x, double s) const { return std::exp(-heat_rate * s) * value(x); }

    static SpatialProfile zero();
    static SpatialProfile one();
    static SpatialProfile identity();
    static SpatialProfile sine();
    static SpatialProfile cosine();
};

struct SeparableSolution {
    SpatialProfile p;
    SpatialProfile z;
    double rho = 0.0;
};

struct ReferenceCase {
    std::string id;
    std::string description;
    /// v_m = m^{-a}.
    double decay = 2.0;
    SpatialProfile terminal_profile;
    Driver driver;
    std::optional<SeparableSolution> exact;
    /// For cases without a closed form: reference grid has factor * J_max steps.
    long reference_factor = 0;

    /// Largest gamma with p_T outside H^gamma for eigenvalues growing like m^2:
    /// p_T lies in H^gamma exactly for gamma < (2a - 1) / 4.
    double regularity_limit() const { return (2.0 * decay - 1.0) / 4.0; }
    /// Terminal data in H^{1/2}, as the convergence theory requires.
    bool terminal_in_h_half() const { return regularity_limit() > 0.5; }

    Vector profile(Eigen::Index modes) const;
    FieldMatrix terminal(const StochasticBackend& backend, double horizon, Eigen::Index modes) const;
    /// c(t) = e^{-rho (T-t)} e^{(T-t)A} v; requires a closed form.
    Vector modal(const Operator& op, double horizon, double t) const;
};

/// Ids in catalog order: L0, L1, L2, N1.
const std::vector<std::string>& case_ids();

/// Throws ConfigError for an unknown id.
ReferenceCase get_case(const std::string& id);

/// (p(t), z(t)) on the backend support at time t. Throws DomainError for cases without a closed form.
std::pair<AdaptedField, AdaptedField> exact_linear_solution(const ReferenceCase& reference, const Operator& op,
                                                            double horizon, double t,
                                                            const StochasticBackend& backend, long index = 0);

/// One-step residuals of the exact pair at a point (t, x):
///   r_p(h) = ||(E_t p(t+h) - p(t)) / h + A p(t)||,  r_z(h) = ||E_t[p(t+h) dW] / h - z(t)||,
/// with E_t by high-order Gauss-Hermite quadrature of the closed form. Both vanish like h.
struct CatalogResidual {
    std::vector<double> steps;
    std::vector<double> residual_p;
    std::vector<double> residual_z;
    double slope_p = 0.0;
    double slope_z = 0.0;
};
CatalogResidual catalog_residual(const ReferenceCase& reference, const Operator& op, double horizon, double t,
                                 double x, const std::vector<double>& steps);

}  // namespace bsee
