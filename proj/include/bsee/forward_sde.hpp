#pragma once

// Controlled forward state equation with zero initial state,
//   dy = (A y + alpha_0 y + alpha_1 u) dt + (alpha_2 y + alpha_3 u) dW,   y(0) = 0,
// its implicit Euler discretization U -> S_tau U, and the exact transpose of
// that map. Processes are piecewise constant on the grid: field j is the value
// on [t_j, t_{j+1}); the last field is carried along but enters no inner product.
//
// The inner product on processes is
//   <X, Y> = tau sum_{j<J} sum_i pi_j(i) <X_j(i), Y_j(i)>_H
// with pi_j the backend's transport measures, which makes push() an exact
// conditional expectation and S_tau^* an exact adjoint.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "bsee/backend.hpp"
#include "bsee/field.hpp"
#include "bsee/spectral_space.hpp"

namespace bsee {

/// A deterministic coefficient alpha(t) with a declared bound sup_t |alpha(t)|.
struct Coefficient {
    std::string name = "0";
    std::function<double(double)> value = [](double) { return 0.0; };
    double sup = 0.0;

    double operator()(double t) const { return value(t); }

    static Coefficient constant(double c);
    static Coefficient cosine(double scale = 1.0);
    static Coefficient sine(double scale = 1.0);
    /// "0.5", "cos", "sin", "0.3*cos" or "0.3*sin". Throws ConfigError otherwise.
    static Coefficient parse(const std::string& spec);
};

struct CoefficientSet {
    Coefficient alpha0, alpha1, alpha2, alpha3;

    static CoefficientSet constants(double a0, double a1, double a2, double a3);
    /// Throws DomainError when a declared bound is not finite.
    void validate() const;
};

/// Per-step data of the scheme: a0 = int alpha_0, a1 = int alpha_1 over the step
/// (Gauss-Legendre), b2 = alpha_2(t_j), b3 = alpha_3(t_j).
struct StepCoefficients {
    double a0 = 0.0, a1 = 0.0, b2 = 0.0, b3 = 0.0;
};
std::vector<StepCoefficients> step_coefficients(const CoefficientSet& coeffs, const TimeGrid& grid,
                                                int quadrature = 2);

/// Throws PreconditionError unless tau * sup|alpha_2|^2 < 1.
void require_noise_bound(const CoefficientSet& coeffs, double tau);

/// Transport measures pi_j of the grid; throws BackendError when a measure is signed
/// (cubic lattice interpolation), since the adjoint calculus needs a probability kernel.
std::vector<Eigen::VectorXd> state_measures(const StochasticBackend& backend, const TimeGrid& grid);

/// <X, Y> as above.
double process_inner(const PiecewiseProcess& x, const PiecewiseProcess& y, const std::vector<Eigen::VectorXd>& pi);

/// Y = S_tau U:  Y_0 = 0,
///   Y_{j+1} = (I - tau A)^{-1} E[(1 + a0) Y_j + a1 U_j + (b2 Y_j + b3 U_j) dW_j | W(t_{j+1})].
PiecewiseProcess solve_state(const PiecewiseProcess& U, const CoefficientSet& coeffs, const Operator& op,
                             const StochasticBackend& backend, int quadrature = 2);

/// S_tau^* R, the transpose of solve_state for process_inner. Field J of the result is zero.
PiecewiseProcess state_map_adjoint(const PiecewiseProcess& R, const CoefficientSet& coeffs, const Operator& op,
                                   const StochasticBackend& backend, int quadrature = 2);

}  // namespace bsee
