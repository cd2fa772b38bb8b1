#include "bsee/error_norms.hpp"

#include <algorithm>
#include <cmath>

#include "bsee/errors.hpp"
#include "bsee/quadrature.hpp"

namespace bsee {

namespace {

// Gauss-Legendre panels for integrands built from e^{-lambda (T-t)}: enough
// panels per step that each spans O(1) decay lengths of the stiffest mode.
template <typename F>
double integrate(double a, double b, double stiffness, F&& f) {
    static const QuadratureRule unit = gauss_legendre(10, 0.0, 1.0);
    const long panels = std::clamp<long>(static_cast<long>(std::ceil((b - a) * stiffness)), 2, 512);
    const double width = (b - a) / static_cast<double>(panels);
    double sum = 0.0;
    for (long k = 0; k < panels; ++k) {
        const double left = a + static_cast<double>(k) * width;
        for (Eigen::Index q = 0; q < unit.size(); ++q) sum += width * unit.weights[q] * f(left + width * unit.nodes[q]);
    }
    return sum;
}

long refinement_factor(const TimeGrid& fine, const TimeGrid& coarse) {
    if (fine.horizon() != coarse.horizon() || fine.steps() % coarse.steps() != 0)
        throw StructuralError("processes do not live on nested grids");
    return fine.steps() / coarse.steps();
}

const SeparableSolution& closed_form(const ReferenceCase& reference) {
    if (!reference.exact) throw DomainError("case " + reference.id + " has no closed-form solution");
    return *reference.exact;
}

double stiffness(const Operator& op, const SeparableSolution& sol) {
    return op.eigenvalues().maxCoeff() + sol.rho + sol.z.heat_rate;
}

}  // namespace

double error_p_max(const ReferenceCase& reference, const Operator& op, const PiecewiseProcess& P,
                   const StochasticBackend& backend) {
    closed_form(reference);
    const TimeGrid& grid = P.grid();
    double worst = 0.0;
    for (long j = 0; j < grid.steps(); ++j) {
        const double t = grid.node(j);
        const FieldMatrix p = exact_linear_solution(reference, op, grid.horizon(), t, backend).first.values;
        worst = std::max(worst, std::sqrt(backend.mean_square(t, p - P[j].values)));
    }
    return worst;
}

double error_z(const ReferenceCase& reference, const Operator& op, const PiecewiseProcess& Z,
               const StochasticBackend& backend) {
    const SeparableSolution& sol = closed_form(reference);
    const TimeGrid& grid = Z.grid();
    const double horizon = grid.horizon();
    const double stiff = stiffness(op, sol);
    double total = 0.0;
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const Eigen::VectorXd x = backend.coordinates(t0);
        const Eigen::VectorXd w = backend.weights(t0);
        const FieldMatrix& zj = Z[j].values;
        // E[phi(W(t0)) Z_j] per mode, and E||Z_j||^2.
        Eigen::VectorXd phi(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) phi[i] = sol.z.value(x[i]);
        const Vector a = zj.transpose() * w.cwiseProduct(phi);
        const double c = StochasticBackend::weighted_inner(w, zj, zj);
        // E<z(t), Z_j> = e^{-kappa (t - t0)} <a, c(t)> by the smoothing property of the profile.
        const double own = integrate(t0, t1, stiff, [&](double t) {
            return sol.z.second_moment(t) * reference.modal(op, horizon, t).squaredNorm();
        });
        const double cross = integrate(t0, t1, stiff, [&](double t) {
            return std::exp(-sol.z.heat_rate * (t - t0)) * a.dot(reference.modal(op, horizon, t));
        });
        total += own - 2.0 * cross + (t1 - t0) * c;
    }
    return std::sqrt(std::max(total, 0.0));
}

double projection_gap(const ReferenceCase& reference, const Operator& op, const TimeGrid& grid) {
    const SeparableSolution& sol = closed_form(reference);
    const double horizon = grid.horizon();
    const double stiff = stiffness(op, sol);
    double total = 0.0;
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const double own = integrate(t0, t1, stiff, [&](double t) {
            return sol.z.second_moment(t) * reference.modal(op, horizon, t).squaredNorm();
        });
        // (P_tau z)_j = phi(W(t0)) d_j with d_j the time average of e^{-kappa (t - t0)} c(t).
        Vector d = Vector::Zero(op.mode_count());
        for (Eigen::Index m = 0; m < d.size(); ++m)
            d[m] = integrate(t0, t1, stiff, [&](double t) {
                       return std::exp(-sol.z.heat_rate * (t - t0)) * reference.modal(op, horizon, t)[m];
                   }) /
                   (t1 - t0);
        total += own - (t1 - t0) * sol.z.second_moment(t0) * d.squaredNorm();
    }
    return std::sqrt(std::max(total, 0.0));
}

double node_distance_max(const PiecewiseProcess& reference, const PiecewiseProcess& P,
                         const StochasticBackend& backend) {
    const long factor = refinement_factor(reference.grid(), P.grid());
    double worst = 0.0;
    for (long j = 0; j < P.steps(); ++j) {
        const FieldMatrix diff = reference[j * factor].values - P[j].values;
        worst = std::max(worst, std::sqrt(backend.mean_square(P.grid().node(j), diff)));
    }
    return worst;
}

double process_distance(const PiecewiseProcess& reference, const PiecewiseProcess& X,
                        const StochasticBackend& backend) {
    const long factor = refinement_factor(reference.grid(), X.grid());
    const TimeGrid& fine = reference.grid();
    const double h = fine.tau();
    double total = 0.0;
    for (long j = 0; j < X.steps(); ++j) {
        const double t0 = X.grid().node(j);
        const double own = backend.mean_square(t0, X[j].values);
        for (long r = 0; r < factor; ++r) {
            const long l = j * factor + r;
            const double u = fine.node(l);
            const FieldMatrix& f = reference[l].values;
            if (r == 0) {
                total += h * backend.mean_square(t0, f - X[j].values);
                continue;
            }
            total += h * (backend.mean_square(u, f) - 2.0 * backend.cross_moment(t0, X[j].values, u, f) + own);
        }
    }
    return std::sqrt(std::max(total, 0.0));
}

double process_norm(const PiecewiseProcess& X, const StochasticBackend& backend) {
    double total = 0.0;
    for (long j = 0; j < X.steps(); ++j) total += X.grid().tau() * backend.mean_square(X.grid().node(j), X[j].values);
    return std::sqrt(total);
}

}  // namespace bsee
