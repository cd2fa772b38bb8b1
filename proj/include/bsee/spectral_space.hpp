#pragma once

// Diagonal spectral realization of a self-adjoint, coercive operator A.
// Vectors are coordinate arrays in the eigenbasis of A; every operator
// below is a componentwise multiplier, so the free functions accept any
// Eigen expression whose size matches the mode count.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "bsee/errors.hpp"

namespace bsee {

template <typename Scalar>
using HVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Eigenvalues of -A, nondecreasing and bounded below by a coercivity constant delta > 0.
template <typename Scalar>
class SpectralOperator {
public:
    using Vector = HVector<Scalar>;

    SpectralOperator() = default;

    /// delta defaults to the smallest eigenvalue.
    explicit SpectralOperator(Vector eigenvalues, Scalar delta = Scalar(0))
        : eigenvalues_(std::move(eigenvalues)) {
        if (eigenvalues_.size() < 1) throw StructuralError("SpectralOperator: need at least one mode");
        for (Eigen::Index m = 0; m < eigenvalues_.size(); ++m) {
            if (!std::isfinite(static_cast<double>(eigenvalues_[m])))
                throw DomainError("SpectralOperator: non-finite eigenvalue");
            if (m > 0 && eigenvalues_[m] < eigenvalues_[m - 1])
                throw DomainError("SpectralOperator: eigenvalues must be nondecreasing");
        }
        delta_ = delta > Scalar(0) ? delta : eigenvalues_[0];
        if (!(delta_ > Scalar(0))) throw DomainError("SpectralOperator: coercivity constant must be positive");
        if (eigenvalues_[0] < delta_) throw DomainError("SpectralOperator: eigenvalue below coercivity constant");
    }

    /// Dirichlet Laplacian on (0,1) scaled by a diffusivity: lambda_m = kappa m^2 pi^2.
    static SpectralOperator laplacian_1d(std::size_t modes, Scalar diffusivity = Scalar(1)) {
        if (modes < 1) throw StructuralError("laplacian_1d: need at least one mode");
        if (!(diffusivity > Scalar(0))) throw DomainError("laplacian_1d: diffusivity must be positive");
        Vector lambda(static_cast<Eigen::Index>(modes));
        const Scalar pi = std::numbers::pi_v<Scalar>;
        for (Eigen::Index m = 0; m < lambda.size(); ++m) {
            const Scalar k = Scalar(m + 1);
            lambda[m] = diffusivity * k * k * pi * pi;
        }
        return SpectralOperator(std::move(lambda));
    }

    const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    Eigen::Index mode_count() const noexcept { return eigenvalues_.size(); }
    Scalar delta() const noexcept { return delta_; }

    /// exp(-lambda_m t), componentwise.
    Vector semigroup_multipliers(Scalar t) const {
        if (!(t >= Scalar(0))) throw DomainError("semigroup: time must be nonnegative");
        return (-t * eigenvalues_.array()).exp().matrix();
    }

    /// (1 + tau lambda_m)^(-power), evaluated in log space.
    Vector resolvent_multipliers(Scalar tau, long power = 1) const {
        if (!(tau > Scalar(0))) throw DomainError("resolvent: step must be positive");
        if (power < 0) throw DomainError("resolvent: power must be nonnegative");
        Vector out(eigenvalues_.size());
        for (Eigen::Index m = 0; m < out.size(); ++m)
            out[m] = std::exp(-Scalar(power) * std::log1p(tau * eigenvalues_[m]));
        return out;
    }

private:
    Vector eigenvalues_;
    Scalar delta_{};
};

namespace detail {
template <typename Derived, typename Scalar>
void check_modes(const Eigen::MatrixBase<Derived>& v, const SpectralOperator<Scalar>& op) {
    if (v.size() != op.mode_count())
        throw StructuralError("vector length " + std::to_string(v.size()) + " does not match mode count " +
                              std::to_string(op.mode_count()));
}
}  // namespace detail

/// ||(-A)^gamma v||_H.
template <typename Derived, typename Scalar>
Scalar norm_gamma(const Eigen::MatrixBase<Derived>& v, const SpectralOperator<Scalar>& op, Scalar gamma) {
    detail::check_modes(v, op);
    if (!(gamma >= Scalar(0) && gamma <= Scalar(1))) throw DomainError("norm_gamma: gamma must lie in [0,1]");
    if (gamma == Scalar(0)) return v.norm();
    return (op.eigenvalues().array().pow(gamma) * v.array()).matrix().norm();
}

/// e^{tA} v.
template <typename Derived, typename Scalar>
HVector<Scalar> apply_semigroup(Scalar t, const Eigen::MatrixBase<Derived>& v, const SpectralOperator<Scalar>& op) {
    detail::check_modes(v, op);
    return op.semigroup_multipliers(t).cwiseProduct(v);
}

/// (I - tau A)^{-1} v.
template <typename Derived, typename Scalar>
HVector<Scalar> resolvent_step(Scalar tau, const Eigen::MatrixBase<Derived>& v, const SpectralOperator<Scalar>& op) {
    detail::check_modes(v, op);
    return op.resolvent_multipliers(tau, 1).cwiseProduct(v);
}

/// (I - tau A)^{-m} v for m >= 1.
template <typename Derived, typename Scalar>
HVector<Scalar> resolvent_power(long m, Scalar tau, const Eigen::MatrixBase<Derived>& v,
                                const SpectralOperator<Scalar>& op) {
    detail::check_modes(v, op);
    if (m < 1) throw DomainError("resolvent_power: power must be at least 1");
    return op.resolvent_multipliers(tau, m).cwiseProduct(v);
}

/// Uniform grid t_j = j T / J on [0, T].
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double horizon, long steps) : horizon_(horizon), steps_(steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("TimeGrid: horizon must be positive");
        if (steps < 1) throw DomainError("TimeGrid: need at least one step");
    }

    double horizon() const noexcept { return horizon_; }
    long steps() const noexcept { return steps_; }
    double tau() const noexcept { return horizon_ / static_cast<double>(steps_); }

    /// t_0 = 0 and t_J = T hold exactly.
    double node(long j) const {
        if (j < 0 || j > steps_) throw StructuralError("TimeGrid: node index out of range");
        if (j == steps_) return horizon_;
        return static_cast<double>(j) * tau();
    }

    TimeGrid refined(long factor) const {
        if (factor < 1) throw DomainError("TimeGrid: refinement factor must be positive");
        return TimeGrid(horizon_, steps_ * factor);
    }

    bool operator==(const TimeGrid& other) const noexcept {
        return horizon_ == other.horizon_ && steps_ == other.steps_;
    }

private:
    double horizon_ = 1.0;
    long steps_ = 1;
};

using Operator = SpectralOperator<double>;
using Vector = HVector<double>;

}  // namespace bsee
