#pragma once

// Conditional-expectation engine shared by the backward schemes, the
// forward state solver and the control layer.
//
// Every step [t0, t1] is realized on a "branch space": the rows of a
// branch matrix enumerate the joint outcomes of (W(t0), W(t1) - W(t0)).
// A field at t1 is lifted onto the branch space, combined pointwise with
// broadcast fields at t0 and the increments, then reduced back to t0 by
// conditional expectation. The lattice realizes a branch row as a
// (node, Gauss-Hermite point) pair, the regression backend as a path.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "bsee/field.hpp"
#include "bsee/spectral_space.hpp"

namespace bsee {

class StochasticBackend {
public:
    virtual ~StochasticBackend() = default;

    virtual std::string name() const = 0;

    /// Number of rows of a field (lattice nodes or paths).
    virtual Eigen::Index support_size() const = 0;

    /// W(t) at every support row.
    virtual Eigen::VectorXd coordinates(double t) const = 0;

    /// Probability weights of the support rows at time t (law of W(t)); sums to 1.
    virtual Eigen::VectorXd weights(double t) const = 0;

    /// Measures carried along the grid by the backend's own transition kernel.
    /// These make push() the exact conditional expectation of the discrete model.
    virtual std::vector<Eigen::VectorXd> transport_measures(const TimeGrid& grid) const = 0;

    // --- step primitives on [t0, t1] -------------------------------------

    virtual Eigen::Index branch_size(double t0, double t1) const = 0;
    /// Field at t1 evaluated at every branch row.
    virtual FieldMatrix lift(double t0, double t1, const FieldMatrix& next) const = 0;
    /// Field at t0 repeated over the branch rows it owns.
    virtual FieldMatrix broadcast(double t0, double t1, const FieldMatrix& current) const = 0;
    /// W(t1) - W(t0) per branch row.
    virtual Eigen::VectorXd increments(double t0, double t1) const = 0;
    /// W(t0) per branch row.
    virtual Eigen::VectorXd branch_coordinates(double t0, double t1) const = 0;
    /// Conditional expectation E_{t0} of a branch quantity.
    virtual FieldMatrix reduce(double t0, double t1, const FieldMatrix& branch) const = 0;
    /// Joint weight of each branch row given row weights of the t0 support.
    virtual Eigen::VectorXd joint_weights(double t0, double t1, const Eigen::VectorXd& outer) const = 0;
    /// Conditional expectation of a branch quantity given the t1 support row,
    /// under the joint law built from `measure0`; `measure1` is the induced law at t1.
    virtual FieldMatrix push(double t0, double t1, const FieldMatrix& branch, const Eigen::VectorXd& measure0,
                             const Eigen::VectorXd& measure1) const = 0;

    /// E <a(W(ta)), b(W(tb))>_H.
    virtual double cross_moment(double ta, const FieldMatrix& a, double tb, const FieldMatrix& b) const = 0;

    // --- conveniences built on the primitives ----------------------------

    /// E_{t0} v for v measurable at t1.
    FieldMatrix expect(double t0, double t1, const FieldMatrix& next) const;
    /// (1/(t1-t0)) E_{t0}(v (W(t1)-W(t0))).
    FieldMatrix ito(double t0, double t1, const FieldMatrix& next) const;
    /// E ||v(W(t))||_H^2.
    double mean_square(double t, const FieldMatrix& v) const;
    /// sum_rows measure(row) <a_row, b_row>.
    static double weighted_inner(const Eigen::VectorXd& measure, const FieldMatrix& a, const FieldMatrix& b);
};

}  // namespace bsee
