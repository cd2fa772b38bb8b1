#pragma once

// Temporally semi-discrete stochastic LQ problem
//   minimize  1/2 ||S_tau U - y_d||^2 + nu/2 ||U||^2
// over piecewise-constant adapted controls, with the inner product of
// forward_sde.hpp. The adjoint pair (P, Z) solves the backward equation with
// driver alpha_0 P + (S_tau U - y_d) + alpha_2 Z and zero terminal value; the
// bilinear form S(P, Z, g, v) turns it into the directional derivative of the
// tracking term. The reduced normal equations are solved matrix-free.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsee/backend.hpp"
#include "bsee/field.hpp"
#include "bsee/forward_sde.hpp"
#include "bsee/rate_fit.hpp"
#include "bsee/spectral_space.hpp"
#include "bsee/stochastic_grid.hpp"

namespace bsee {

struct LQProblem {
    Operator op;
    TimeGrid grid;
    CoefficientSet coeffs;
    double nu = 1.0;
    /// Target process on `grid`.
    PiecewiseProcess y_d;
    int quadrature = 2;

    /// Throws DomainError for nu <= 0, StructuralError for a misshapen target and
    /// PreconditionError when tau sup|alpha_2|^2 >= 1.
    void validate(const StochasticBackend& backend) const;
};

struct LQOptions {
    /// Stop when ||residual|| <= tol * min(||rhs||, 1 + ||U||).
    double tol = 1e-10;
    int max_iterations = 500;
    /// Stagnation: residual reduced by less than `stagnation_factor` over `stagnation_window` iterations.
    int stagnation_window = 20;
    double stagnation_factor = 1e-2;
};

struct LQSolution {
    PiecewiseProcess U, Y, P, Z;
    /// Normal-equation residual norm after each iteration; non-increasing.
    std::vector<double> residual_history;
    double cost = 0.0;
    /// max |nu <U, v> + S(P, Z, Y - y_d, v)| over unit random directions v.
    double optimality_residual = 0.0;
    /// ||U - u_pointwise|| / (1 + ||U||), u_pointwise = -(alpha_1 E P_{j+1} + alpha_3 Z_j) / nu.
    double pointwise_gap = 0.0;
};

/// 1/2 ||S_tau U - y_d||^2 + nu/2 ||U||^2.
double cost(const PiecewiseProcess& U, const LQProblem& problem, const StochasticBackend& backend);

/// Adjoint pair for the control U: P_J = 0 and, backwards in j,
///   Z_j = I_j((1 + a0) P_{j+1}),  P_j = (I - tau A)^{-1}((1 + a0) E_{t_j} P_{j+1} + tau g_j + tau b2 Z_j),
/// with g = S_tau U - y_d. The alpha_2 Z term drops out of Z_j because I_j annihilates F_{t_j} fields.
std::pair<PiecewiseProcess, PiecewiseProcess> solve_adjoint(const PiecewiseProcess& U, const LQProblem& problem,
                                                            const StochasticBackend& backend);

/// S(P, Z, g, v) = sum_j E<a1 P_{j+1} + tau b3 Z_j, v_j>
///                       - E<a0 P_{j+1} + tau g_j + tau b2 Z_j, (b2 (S_tau v)_j + b3 v_j) dW_j>.
double bilinear_S(const PiecewiseProcess& P, const PiecewiseProcess& Z, const PiecewiseProcess& g,
                  const PiecewiseProcess& v, const LQProblem& problem, const StochasticBackend& backend);

/// nu U + S_tau^*(S_tau U - y_d).
PiecewiseProcess cost_gradient(const PiecewiseProcess& U, const LQProblem& problem, const StochasticBackend& backend);

/// -(a1 / tau E_{t_j} P_{j+1} + b3 Z_j) / nu.
PiecewiseProcess pointwise_control(const PiecewiseProcess& P, const PiecewiseProcess& Z, const LQProblem& problem,
                                   const StochasticBackend& backend);

/// Conjugate residuals on nu U + S_tau^* S_tau U = S_tau^* y_d. Throws ConvergenceError on
/// stagnation or when the iteration budget runs out.
LQSolution solve_lq(const LQProblem& problem, const StochasticBackend& backend, const LQOptions& options = {},
                    int test_directions = 8);

/// Piecewise-constant projection of the Markovian target (t, x) -> f(t, x).
PiecewiseProcess target_from_function(const StochasticBackend& backend, const TimeGrid& grid,
                                      const MarkovFunction& f, long substeps = 8);

struct LQRateReport {
    std::vector<long> J;
    std::vector<double> errors;
    long reference_J = 0;
    std::optional<RateFit> fit;
    /// "ok" or "insufficient points".
    std::string status;
};

/// ||U_J - U_ref||_{L2} over the J list against J_ref = 4 max J, with a rate fit
/// over the asymptotic suffix. `make` builds the problem on a grid with J steps.
LQRateReport rate_study_lq(const std::function<LQProblem(long J)>& make, const std::vector<long>& J,
                           const StochasticBackend& backend, const LQOptions& options = {});

}  // namespace bsee
