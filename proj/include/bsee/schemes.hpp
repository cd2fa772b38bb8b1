#pragma once

// Backward Euler-type time stepping for
//   dp = -(A p + f(t, p, z)) dt + z dW,   p(T) = p_T,
// on a uniform grid. All three schemes share the implicit resolvent step
//   P_j = (I - tau A)^{-1} E_{t_j}[P_{j+1} + int_{t_j}^{t_{j+1}} f dt]
// and differ in how Z_j is obtained.

#include <vector>

#include "bsee/backend.hpp"
#include "bsee/driver.hpp"
#include "bsee/field.hpp"
#include "bsee/spectral_space.hpp"

namespace bsee {

struct BseeProblem {
    Operator op;
    TimeGrid grid;
    /// p_T as a field on the backend support at t = T.
    FieldMatrix terminal;
    Driver driver;
    /// Gauss-Legendre points used for the time integral of f on each step.
    int quadrature = 2;
};

struct SchemeOptions {
    /// Fixed-point stop: successive-iterate gap <= fp_tol * (1 + ||Z||).
    double fp_tol = 1e-11;
    int fp_max_iterations = 50;
};

struct BseeSolution {
    PiecewiseProcess P;
    /// On the solve grid for schemes 1 and 2, on the grid refined by the substep count for scheme 3.
    PiecewiseProcess Z;
    /// Fixed-point iterations per coarse step (the maximum over substeps for scheme 3).
    std::vector<int> fp_iterations;
    /// Successive-iterate gaps of every fixed-point solve, one entry per coarse step.
    std::vector<std::vector<double>> residual_log;
    /// Largest ratio of consecutive gaps seen in any fixed-point solve.
    double max_contraction = 0.0;

    int fp_iterations_max() const;
};

/// Z_j is the fixed point of Z = I_j(P_{j+1} + int f(t, P_{j+1}, Z) dt). Requires tau < 1 / C_L^2.
BseeSolution solve_scheme1(const BseeProblem& problem, const StochasticBackend& backend,
                           const SchemeOptions& options = {});

/// Z_j = I_j P_{j+1}; no restriction on tau.
BseeSolution solve_scheme2(const BseeProblem& problem, const StochasticBackend& backend,
                           const SchemeOptions& options = {});

/// Z kept piecewise constant on `substeps` sub-intervals per step, P on the coarse grid.
/// With one substep this is scheme 1.
BseeSolution solve_scheme3(const BseeProblem& problem, const StochasticBackend& backend, long substeps,
                           const SchemeOptions& options = {});

/// Dispatch on scheme id 1, 2 or 3.
BseeSolution solve_scheme(int scheme, const BseeProblem& problem, const StochasticBackend& backend,
                          long substeps = 1, const SchemeOptions& options = {});

/// Discrete mild form of the linear equation with forcing independent of (p, z):
///   P_j = E_{t_j}[(I - tau A)^{-(J-j)} p_T + sum_{k>=j} (I - tau A)^{-(k-j+1)} G_k],
/// where G_k (measurable at t_k) is the integral of the forcing over step k.
/// `step_integrals` is either empty (no forcing) or holds J fields.
PiecewiseProcess closed_form_linear(const FieldMatrix& terminal, const std::vector<FieldMatrix>& step_integrals,
                                    const Operator& op, const TimeGrid& grid, const StochasticBackend& backend);

/// Step integrals of a forcing driver by `quadrature`-point Gauss-Legendre on each step.
std::vector<FieldMatrix> step_integrals(const Driver& forcing, const TimeGrid& grid, int quadrature,
                                        const StochasticBackend& backend, Eigen::Index modes);

/// Step integrals tau * g_k of a piecewise-constant forcing process.
std::vector<FieldMatrix> step_integrals(const PiecewiseProcess& g);

}  // namespace bsee
