#include "bsee/lq_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>
#include <sstream>

#include "bsee/error_norms.hpp"
#include "bsee/errors.hpp"

namespace bsee {

namespace {

void scale_modes(FieldMatrix& values, const Vector& multipliers) {
    values.array().rowwise() *= multipliers.transpose().array();
}

// Zeroes rows the transport measure never reaches, and the unpaired last field.
void mask(PiecewiseProcess& x, const std::vector<Eigen::VectorXd>& pi) {
    for (long j = 0; j < x.steps(); ++j) {
        const Eigen::VectorXd& m = pi[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (m[i] == 0.0) x[j].values.row(i).setZero();
    }
    x[x.steps()].values.setZero();
}

PiecewiseProcess axpy(double a, const PiecewiseProcess& x, PiecewiseProcess y) {
    y += a * PiecewiseProcess(x);
    return y;
}

}  // namespace

void LQProblem::validate(const StochasticBackend& backend) const {
    if (!(nu > 0.0)) throw DomainError("LQ problem requires nu > 0");
    if (y_d.fields().empty() || y_d.steps() != grid.steps() || y_d.grid().horizon() != grid.horizon())
        throw StructuralError("target process does not live on the problem grid");
    if (y_d.support() != backend.support_size() || y_d.modes() != op.mode_count())
        throw StructuralError("target process shape does not match backend and operator");
    require_noise_bound(coeffs, grid.tau());
}

double cost(const PiecewiseProcess& U, const LQProblem& problem, const StochasticBackend& backend) {
    problem.validate(backend);
    const auto pi = state_measures(backend, problem.grid);
    const PiecewiseProcess miss = solve_state(U, problem.coeffs, problem.op, backend, problem.quadrature) - problem.y_d;
    return 0.5 * process_inner(miss, miss, pi) + 0.5 * problem.nu * process_inner(U, U, pi);
}

std::pair<PiecewiseProcess, PiecewiseProcess> solve_adjoint(const PiecewiseProcess& U, const LQProblem& problem,
                                                            const StochasticBackend& backend) {
    problem.validate(backend);
    const TimeGrid& grid = problem.grid;
    const double tau = grid.tau();
    const auto steps = step_coefficients(problem.coeffs, grid, problem.quadrature);
    const Vector resolvent = problem.op.resolvent_multipliers(tau);
    const PiecewiseProcess g = solve_state(U, problem.coeffs, problem.op, backend, problem.quadrature) - problem.y_d;

    PiecewiseProcess P = PiecewiseProcess::zeros(grid, backend.support_size(), problem.op.mode_count());
    PiecewiseProcess Z = P;
    for (long j = grid.steps() - 1; j >= 0; --j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const StepCoefficients& c = steps[static_cast<std::size_t>(j)];
        const FieldMatrix lifted = backend.lift(t0, t1, P[j + 1].values);
        FieldMatrix weighted = lifted;
        weighted.array().colwise() *= backend.increments(t0, t1).array();
        Z[j].values = (1.0 + c.a0) / tau * backend.reduce(t0, t1, weighted);
        FieldMatrix pj = (1.0 + c.a0) * backend.reduce(t0, t1, lifted) + tau * g[j].values + tau * c.b2 * Z[j].values;
        scale_modes(pj, resolvent);
        P[j].values = std::move(pj);
    }
    return {std::move(P), std::move(Z)};
}

double bilinear_S(const PiecewiseProcess& P, const PiecewiseProcess& Z, const PiecewiseProcess& g,
                  const PiecewiseProcess& v, const LQProblem& problem, const StochasticBackend& backend) {
    problem.validate(backend);
    const TimeGrid& grid = problem.grid;
    for (const PiecewiseProcess* x : {&P, &Z, &g, &v})
        if (x->steps() != grid.steps() || x->support() != backend.support_size() ||
            x->modes() != problem.op.mode_count())
            throw StructuralError("bilinear_S: process shapes are not aligned");
    const double tau = grid.tau();
    const auto steps = step_coefficients(problem.coeffs, grid, problem.quadrature);
    const auto pi = state_measures(backend, grid);
    const PiecewiseProcess y = solve_state(v, problem.coeffs, problem.op, backend, problem.quadrature);

    double total = 0.0;
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const StepCoefficients& c = steps[static_cast<std::size_t>(j)];
        const Eigen::VectorXd omega = backend.joint_weights(t0, t1, pi[static_cast<std::size_t>(j)]);
        const FieldMatrix next = backend.lift(t0, t1, P[j + 1].values);
        const FieldMatrix zb = backend.broadcast(t0, t1, Z[j].values);
        const FieldMatrix vb = backend.broadcast(t0, t1, v[j].values);
        const FieldMatrix first = c.a1 * next + tau * c.b3 * zb;
        const FieldMatrix adjoint_drift = c.a0 * next + tau * backend.broadcast(t0, t1, g[j].values) + tau * c.b2 * zb;
        FieldMatrix noise = backend.broadcast(t0, t1, c.b2 * y[j].values + c.b3 * v[j].values);
        noise.array().colwise() *= backend.increments(t0, t1).array();
        total += StochasticBackend::weighted_inner(omega, first, vb) -
                 StochasticBackend::weighted_inner(omega, adjoint_drift, noise);
    }
    return total;
}

PiecewiseProcess cost_gradient(const PiecewiseProcess& U, const LQProblem& problem, const StochasticBackend& backend) {
    problem.validate(backend);
    const PiecewiseProcess miss = solve_state(U, problem.coeffs, problem.op, backend, problem.quadrature) - problem.y_d;
    return axpy(problem.nu, U, state_map_adjoint(miss, problem.coeffs, problem.op, backend, problem.quadrature));
}

PiecewiseProcess pointwise_control(const PiecewiseProcess& P, const PiecewiseProcess& Z, const LQProblem& problem,
                                   const StochasticBackend& backend) {
    const TimeGrid& grid = problem.grid;
    const auto steps = step_coefficients(problem.coeffs, grid, problem.quadrature);
    PiecewiseProcess u = PiecewiseProcess::zeros(grid, backend.support_size(), problem.op.mode_count());
    for (long j = 0; j < grid.steps(); ++j) {
        const StepCoefficients& c = steps[static_cast<std::size_t>(j)];
        const FieldMatrix mean = backend.expect(grid.node(j), grid.node(j + 1), P[j + 1].values);
        u[j].values = -(c.a1 / grid.tau() * mean + c.b3 * Z[j].values) / problem.nu;
    }
    return u;
}

LQSolution solve_lq(const LQProblem& problem, const StochasticBackend& backend, const LQOptions& options,
                    int test_directions) {
    problem.validate(backend);
    const auto& coeffs = problem.coeffs;
    const auto pi = state_measures(backend, problem.grid);
    const auto normal = [&](const PiecewiseProcess& x) {
        PiecewiseProcess out = axpy(problem.nu, x,
                                    state_map_adjoint(solve_state(x, coeffs, problem.op, backend, problem.quadrature),
                                                      coeffs, problem.op, backend, problem.quadrature));
        mask(out, pi);
        return out;
    };
    const auto inner = [&](const PiecewiseProcess& a, const PiecewiseProcess& b) { return process_inner(a, b, pi); };

    PiecewiseProcess rhs = state_map_adjoint(problem.y_d, coeffs, problem.op, backend, problem.quadrature);
    mask(rhs, pi);
    const double rhs_norm = std::sqrt(inner(rhs, rhs));

    LQSolution sol;
    PiecewiseProcess x = PiecewiseProcess::zeros(problem.grid, backend.support_size(), problem.op.mode_count());
    PiecewiseProcess r = rhs;
    PiecewiseProcess p = r;
    PiecewiseProcess Ar = normal(r);
    PiecewiseProcess Ap = Ar;
    double rAr = inner(r, Ar);
    double rayleigh_min = std::numeric_limits<double>::infinity(), rayleigh_max = 0.0;
    double res = rhs_norm;
    sol.residual_history.push_back(res);

    const auto converged = [&] { return res <= options.tol * std::min(rhs_norm, 1.0 + std::sqrt(inner(x, x))); };
    int it = 0;
    while (!converged()) {
        if (it >= options.max_iterations)
            throw ConvergenceError("conjugate residuals hit the iteration limit", sol.residual_history);
        const double pp = inner(p, p);
        const double pAp = inner(p, Ap);
        if (pp > 0.0) {
            rayleigh_min = std::min(rayleigh_min, pAp / pp);
            rayleigh_max = std::max(rayleigh_max, pAp / pp);
        }
        const double alpha = rAr / inner(Ap, Ap);
        x = axpy(alpha, p, std::move(x));
        r = axpy(-alpha, Ap, std::move(r));
        Ar = normal(r);
        const double rAr_next = inner(r, Ar);
        const double beta = rAr_next / rAr;
        rAr = rAr_next;
        p = axpy(beta, p, PiecewiseProcess(r));
        Ap = axpy(beta, Ap, PiecewiseProcess(Ar));
        res = std::sqrt(inner(r, r));
        sol.residual_history.push_back(res);
        ++it;
        const std::size_t w = static_cast<std::size_t>(options.stagnation_window);
        if (sol.residual_history.size() > w &&
            res > options.stagnation_factor * sol.residual_history[sol.residual_history.size() - 1 - w] &&
            !converged()) {
            std::ostringstream msg;
            msg << "conjugate residuals stagnated at " << res << " after " << it
                << " iterations; Rayleigh quotients of the normal operator span [" << rayleigh_min << ", "
                << rayleigh_max << "] with nu = " << problem.nu;
            throw ConvergenceError(msg.str(), sol.residual_history);
        }
    }

    sol.U = std::move(x);
    sol.Y = solve_state(sol.U, coeffs, problem.op, backend, problem.quadrature);
    std::tie(sol.P, sol.Z) = solve_adjoint(sol.U, problem, backend);
    sol.cost = 0.5 * inner(sol.Y - problem.y_d, sol.Y - problem.y_d) + 0.5 * problem.nu * inner(sol.U, sol.U);

    // Optimality through the bilinear form, a code path independent of the normal operator.
    const PiecewiseProcess g = sol.Y - problem.y_d;
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> normal_dist;
    for (int d = 0; d < test_directions; ++d) {
        PiecewiseProcess v = PiecewiseProcess::zeros(problem.grid, backend.support_size(), problem.op.mode_count());
        for (long j = 0; j < v.steps(); ++j)
            for (Eigen::Index i = 0; i < v.support(); ++i)
                for (Eigen::Index m = 0; m < v.modes(); ++m) v[j].values(i, m) = normal_dist(rng);
        mask(v, pi);
        v *= 1.0 / std::sqrt(inner(v, v));
        const double value = problem.nu * inner(sol.U, v) + bilinear_S(sol.P, sol.Z, g, v, problem, backend);
        sol.optimality_residual = std::max(sol.optimality_residual, std::abs(value));
    }

    PiecewiseProcess gap = sol.U - pointwise_control(sol.P, sol.Z, problem, backend);
    sol.pointwise_gap = std::sqrt(inner(gap, gap)) / (1.0 + std::sqrt(inner(sol.U, sol.U)));
    return sol;
}

PiecewiseProcess target_from_function(const StochasticBackend& backend, const TimeGrid& grid, const MarkovFunction& f,
                                      long substeps) {
    return project_Ptau(backend, sample_midpoints(backend, grid, substeps, f));
}

LQRateReport rate_study_lq(const std::function<LQProblem(long J)>& make, const std::vector<long>& J,
                           const StochasticBackend& backend, const LQOptions& options) {
    if (J.empty()) throw ConfigError("rate study needs at least one J");
    for (std::size_t i = 1; i < J.size(); ++i)
        if (J[i] <= J[i - 1] || J[i] % J[i - 1] != 0)
            throw ConfigError("J list must be strictly increasing with each entry a multiple of the previous");
    LQRateReport report;
    report.J = J;
    report.reference_J = 4 * J.back();
    const LQSolution reference = solve_lq(make(report.reference_J), backend, options);
    std::vector<double> tau;
    for (long j : J) {
        const LQSolution s = solve_lq(make(j), backend, options);
        report.errors.push_back(process_distance(reference.U, s.U, backend));
        tau.push_back(s.U.grid().tau());
    }
    if (J.size() < 2) {
        report.status = "insufficient points";
        return report;
    }
    const std::size_t start = asymptotic_start(report.errors);
    if (report.errors.size() - start < 2) {
        report.status = "insufficient points";
        return report;
    }
    report.fit = fit_rate({tau.begin() + static_cast<long>(start), tau.end()},
                          {report.errors.begin() + static_cast<long>(start), report.errors.end()});
    report.status = "ok";
    return report;
}

}  // namespace bsee
