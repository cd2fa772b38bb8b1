#pragma once

// Error functionals in L2(Omega; H), measured with the backend's law of W(t)
// (the Gaussian density on the lattice grid, the empirical path measure for
// regression). The L2(0,T) time norm is the exact integral against the
// continuous exact solution, not a sampled sum.

#include "bsee/backend.hpp"
#include "bsee/field.hpp"
#include "bsee/reference_solutions.hpp"

namespace bsee {

/// max_{0 <= j < J} ||p(t_j) - P_j||.
double error_p_max(const ReferenceCase& reference, const Operator& op, const PiecewiseProcess& P,
                   const StochasticBackend& backend);

/// ||z - Z||_{L2(0,T)} for Z piecewise constant on its own grid.
double error_z(const ReferenceCase& reference, const Operator& op, const PiecewiseProcess& Z,
               const StochasticBackend& backend);

/// ||(I - P_tau) z||_{L2(0,T)} of the exact z, under the exact Gaussian law.
double projection_gap(const ReferenceCase& reference, const Operator& op, const TimeGrid& grid);

/// max_{0 <= j < J} ||R(t_j) - P_j|| where R lives on a grid refining that of P.
double node_distance_max(const PiecewiseProcess& reference, const PiecewiseProcess& P,
                         const StochasticBackend& backend);

/// ||R - X||_{L2(0,T)} for piecewise-constant processes, R on a grid refining that of X.
double process_distance(const PiecewiseProcess& reference, const PiecewiseProcess& X,
                        const StochasticBackend& backend);

/// ||X||_{L2(0,T)} of a piecewise-constant process.
double process_norm(const PiecewiseProcess& X, const StochasticBackend& backend);

}  // namespace bsee
