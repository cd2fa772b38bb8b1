#pragma once

// Grid-indexed operators of the discretization: E_{t_j}, the increment
// coefficient I_j v = (1/tau) E_{t_j}(v dW_j) and the projection onto
// processes that are piecewise constant in time.

#include <functional>

#include "bsee/backend.hpp"
#include "bsee/field.hpp"

namespace bsee {

/// E_{t_j} v for a field v at node j + 1.
AdaptedField cond_expect(const StochasticBackend& backend, const TimeGrid& grid, long j, const AdaptedField& v);

/// I_j v = (1/tau) E_{t_j}(v dW_j) for a field v at node j + 1.
AdaptedField ito_coefficient(const StochasticBackend& backend, const TimeGrid& grid, long j, const AdaptedField& v);

/// Orthogonal projection onto piecewise-constant adapted processes: the time
/// average over each step by the midpoint sub-grid, conditioned on F_{t_j}.
/// The last field of the result is zero.
PiecewiseProcess project_Ptau(const StochasticBackend& backend, const FineSampledProcess& v);

/// Samples a Markovian process x -> f(t, x) at the sub-interval midpoints of every step.
using MarkovFunction = std::function<Eigen::RowVectorXd(double t, double x)>;
FineSampledProcess sample_midpoints(const StochasticBackend& backend, const TimeGrid& grid, long substeps,
                                    const MarkovFunction& f);

/// Squared norms under the joint law of (W(t_j), dW_j):
/// a = ||v - dW I_j v||^2, b = ||dW I_j v||^2, c = ||v||^2.
struct PythagorasParts {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};
PythagorasParts pythagoras_check(const StochasticBackend& backend, const TimeGrid& grid, long j,
                                 const AdaptedField& v);

/// Weighted mean of one scalar per branch row of step j, with a standard error
/// based on the Kish effective sample size of the joint weights.
struct BranchStatistic {
    double mean = 0.0;
    double standard_error = 0.0;
};
BranchStatistic branch_statistic(const StochasticBackend& backend, const TimeGrid& grid, long j,
                                 const Eigen::VectorXd& values);

}  // namespace bsee
