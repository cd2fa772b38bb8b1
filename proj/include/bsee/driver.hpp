#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "bsee/field.hpp"

namespace bsee {

enum class ZDependence { none, affine, general };

std::string to_string(ZDependence kind);

/// Semilinear term f(t, p, z). Evaluated on whole batches of branch rows:
/// row r of p and z is one outcome, w[r] its W coordinate at the left end of the step.
struct Driver {
    using Function = std::function<FieldMatrix(double t, const FieldMatrix& p, const FieldMatrix& z,
                                               const Eigen::VectorXd& w)>;

    std::string name = "zero";
    Function f;
    /// Declared Lipschitz constant in (p, z).
    double lipschitz = 0.0;
    ZDependence z_dependence = ZDependence::none;
    bool depends_on_p = false;

    bool is_zero() const noexcept { return !f; }

    /// Evaluates f, or returns zeros for the zero driver.
    FieldMatrix operator()(double t, const FieldMatrix& p, const FieldMatrix& z, const Eigen::VectorXd& w) const;

    static Driver zero();
    /// f = sin(p)/2 + cos(z)/2 coordinatewise, Lipschitz constant 1.
    static Driver sine_cosine();
    /// f = z, Lipschitz constant 1.
    static Driver identity_in_z();
    /// Forcing independent of (p, z): f = g(t, w) with one row per mode.
    static Driver forcing(std::string name, std::function<Eigen::RowVectorXd(double t, double w)> g);
};

/// Largest observed ratio ||f(t,p1,z1) - f(t,p2,z2)|| / (||p1-p2|| + ||z1-z2||) over random samples.
/// A value above the declared constant means the declaration is wrong.
double lipschitz_spot_check(const Driver& driver, Eigen::Index modes, int samples, std::uint64_t seed,
                            double horizon = 1.0);

}  // namespace bsee
