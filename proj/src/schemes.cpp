#include "bsee/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsee/errors.hpp"
#include "bsee/quadrature.hpp"

namespace bsee {

namespace {

double max_row_norm(const FieldMatrix& m) {
    return m.rows() == 0 ? 0.0 : m.rowwise().norm().maxCoeff();
}

void scale_modes(FieldMatrix& values, const Vector& multipliers) {
    values.array().rowwise() *= multipliers.transpose().array();
}

void validate(const BseeProblem& problem, const StochasticBackend& backend) {
    if (problem.terminal.rows() != backend.support_size())
        throw StructuralError("terminal field has " + std::to_string(problem.terminal.rows()) +
                              " rows, backend support is " + std::to_string(backend.support_size()));
    if (problem.terminal.cols() != problem.op.mode_count())
        throw StructuralError("terminal field has " + std::to_string(problem.terminal.cols()) +
                              " modes, operator has " + std::to_string(problem.op.mode_count()));
    if (!problem.terminal.allFinite()) throw DomainError("terminal field is not finite");
    if (problem.quadrature < 1) throw DomainError("time quadrature needs at least one point");
}

void require_step_bound(const BseeProblem& problem, double tau, const char* scheme) {
    const double cl = problem.driver.lipschitz;
    if (cl > 0.0 && tau * cl * cl >= 1.0) {
        std::ostringstream msg;
        msg << scheme << " requires tau < 1/C_L^2, got tau=" << tau << " with C_L=" << cl;
        throw PreconditionError(msg.str());
    }
}

// One implicit step on [t0, t1]: computes Z and E_{t0}[Y + int f(t, V, Z) dt],
// where Y is the field carried to t1 and V the field fed to the driver.
struct StepOutcome {
    FieldMatrix z;
    FieldMatrix expected;
    int iterations = 0;
    std::vector<double> gaps;
    double contraction = 0.0;
};

enum class ZRule { fixed_point, explicit_ito };

StepOutcome implicit_step(const StochasticBackend& backend, const Driver& driver, int quadrature, double t0,
                          double t1, const FieldMatrix& carried, const FieldMatrix* driver_input, ZRule rule,
                          const SchemeOptions& options) {
    const double h = t1 - t0;
    StepOutcome out;
    const FieldMatrix y = backend.lift(t0, t1, carried);
    const Eigen::VectorXd dw = backend.increments(t0, t1);

    const auto ito_of = [&](const FieldMatrix& branch) {
        FieldMatrix weighted = branch;
        weighted.array().colwise() *= dw.array();
        FieldMatrix r = backend.reduce(t0, t1, weighted);
        r /= h;
        return r;
    };

    out.z = ito_of(y);
    if (driver.is_zero()) {
        out.expected = backend.reduce(t0, t1, y);
        return out;
    }

    const FieldMatrix p = driver_input ? backend.lift(t0, t1, *driver_input) : y;
    const Eigen::VectorXd w = backend.branch_coordinates(t0, t1);
    const QuadratureRule rule_t = gauss_legendre(quadrature, t0, t1);
    const auto integral = [&](const FieldMatrix& z_current) {
        const FieldMatrix zb = backend.broadcast(t0, t1, z_current);
        FieldMatrix acc = rule_t.weights[0] * driver(rule_t.nodes[0], p, zb, w);
        for (Eigen::Index q = 1; q < rule_t.size(); ++q) acc += rule_t.weights[q] * driver(rule_t.nodes[q], p, zb, w);
        return acc;
    };

    if (rule == ZRule::fixed_point) {
        if (driver.z_dependence == ZDependence::none) {
            out.z = ito_of(y + integral(out.z));
            out.iterations = 1;
        } else {
            double previous = 0.0;
            bool converged = false;
            for (int k = 1; k <= options.fp_max_iterations; ++k) {
                FieldMatrix next = ito_of(y + integral(out.z));
                const double gap = max_row_norm(next - out.z);
                out.gaps.push_back(gap);
                if (k > 1 && previous > 1e-13 * (1.0 + max_row_norm(next)))
                    out.contraction = std::max(out.contraction, gap / previous);
                previous = gap;
                out.z = std::move(next);
                out.iterations = k;
                if (gap <= options.fp_tol * (1.0 + max_row_norm(out.z))) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                std::ostringstream msg;
                msg << "fixed point for Z on [" << t0 << ", " << t1 << "] did not converge in "
                    << options.fp_max_iterations << " iterations (last gap " << out.gaps.back() << ")";
                throw ConvergenceError(msg.str(), out.gaps);
            }
        }
    }
    out.expected = backend.reduce(t0, t1, y + integral(out.z));
    return out;
}

BseeSolution make_solution(const BseeProblem& problem, const StochasticBackend& backend, long z_refinement) {
    const Eigen::Index n = backend.support_size();
    const Eigen::Index m = problem.op.mode_count();
    BseeSolution sol{PiecewiseProcess::zeros(problem.grid, n, m),
                     PiecewiseProcess::zeros(problem.grid.refined(z_refinement), n, m),
                     std::vector<int>(static_cast<std::size_t>(problem.grid.steps()), 0),
                     std::vector<std::vector<double>>(static_cast<std::size_t>(problem.grid.steps())),
                     0.0};
    sol.P[problem.grid.steps()].values = problem.terminal;
    return sol;
}

BseeSolution coarse_sweep(const BseeProblem& problem, const StochasticBackend& backend, ZRule rule,
                          const SchemeOptions& options) {
    validate(problem, backend);
    const TimeGrid& grid = problem.grid;
    const Vector resolvent = problem.op.resolvent_multipliers(grid.tau());
    BseeSolution sol = make_solution(problem, backend, 1);
    for (long j = grid.steps() - 1; j >= 0; --j) {
        StepOutcome step = implicit_step(backend, problem.driver, problem.quadrature, grid.node(j), grid.node(j + 1),
                                         sol.P[j + 1].values, nullptr, rule, options);
        scale_modes(step.expected, resolvent);
        sol.P[j].values = std::move(step.expected);
        sol.Z[j].values = std::move(step.z);
        sol.fp_iterations[static_cast<std::size_t>(j)] = step.iterations;
        sol.residual_log[static_cast<std::size_t>(j)] = std::move(step.gaps);
        sol.max_contraction = std::max(sol.max_contraction, step.contraction);
    }
    return sol;
}

}  // namespace

int BseeSolution::fp_iterations_max() const {
    return fp_iterations.empty() ? 0 : *std::max_element(fp_iterations.begin(), fp_iterations.end());
}

BseeSolution solve_scheme1(const BseeProblem& problem, const StochasticBackend& backend,
                           const SchemeOptions& options) {
    require_step_bound(problem, problem.grid.tau(), "scheme 1");
    return coarse_sweep(problem, backend, ZRule::fixed_point, options);
}

BseeSolution solve_scheme2(const BseeProblem& problem, const StochasticBackend& backend,
                           const SchemeOptions& options) {
    return coarse_sweep(problem, backend, ZRule::explicit_ito, options);
}

BseeSolution solve_scheme3(const BseeProblem& problem, const StochasticBackend& backend, long substeps,
                           const SchemeOptions& options) {
    if (substeps < 1) throw DomainError("scheme 3 needs at least one substep");
    if (substeps == 1) return solve_scheme1(problem, backend, options);
    if (problem.driver.z_dependence == ZDependence::general)
        require_step_bound(problem, problem.grid.tau(), "scheme 3");
    validate(problem, backend);

    // Within step j the sub-sweep carries Y = E_u[P_{j+1} + int_u^{t_{j+1}} f] and the
    // Markov proxy V = E_u P_{j+1}, which stands in for P_{j+1} inside the driver.
    // P_j is the coarse expectation of P_{j+1} plus the accumulated driver integral Y - V,
    // so P coincides with schemes 1 and 2 whenever f = 0.
    const TimeGrid& grid = problem.grid;
    const Vector resolvent = problem.op.resolvent_multipliers(grid.tau());
    BseeSolution sol = make_solution(problem, backend, substeps);
    const double h = grid.tau() / static_cast<double>(substeps);
    for (long j = grid.steps() - 1; j >= 0; --j) {
        const FieldMatrix& next = sol.P[j + 1].values;
        FieldMatrix carried = next;
        FieldMatrix proxy = next;
        int iterations = 0;
        auto& log = sol.residual_log[static_cast<std::size_t>(j)];
        for (long r = substeps - 1; r >= 0; --r) {
            const double u0 = grid.node(j) + static_cast<double>(r) * h;
            const double u1 = r + 1 == substeps ? grid.node(j + 1) : grid.node(j) + static_cast<double>(r + 1) * h;
            StepOutcome step = implicit_step(backend, problem.driver, problem.quadrature, u0, u1, carried, &proxy,
                                             ZRule::fixed_point, options);
            sol.Z[j * substeps + r].values = std::move(step.z);
            carried = std::move(step.expected);
            if (!problem.driver.is_zero()) proxy = backend.expect(u0, u1, proxy);
            else proxy = carried;
            iterations = std::max(iterations, step.iterations);
            log.insert(log.end(), step.gaps.begin(), step.gaps.end());
            sol.max_contraction = std::max(sol.max_contraction, step.contraction);
        }
        FieldMatrix pj = backend.expect(grid.node(j), grid.node(j + 1), next);
        if (!problem.driver.is_zero()) pj += carried - proxy;
        scale_modes(pj, resolvent);
        sol.P[j].values = std::move(pj);
        sol.fp_iterations[static_cast<std::size_t>(j)] = iterations;
    }
    return sol;
}

BseeSolution solve_scheme(int scheme, const BseeProblem& problem, const StochasticBackend& backend, long substeps,
                          const SchemeOptions& options) {
    switch (scheme) {
        case 1: return solve_scheme1(problem, backend, options);
        case 2: return solve_scheme2(problem, backend, options);
        case 3: return solve_scheme3(problem, backend, substeps, options);
        default: throw DomainError("unknown scheme " + std::to_string(scheme) + " (expected 1, 2 or 3)");
    }
}

PiecewiseProcess closed_form_linear(const FieldMatrix& terminal, const std::vector<FieldMatrix>& step_integrals,
                                    const Operator& op, const TimeGrid& grid, const StochasticBackend& backend) {
    const long J = grid.steps();
    if (!step_integrals.empty() && static_cast<long>(step_integrals.size()) != J)
        throw StructuralError("closed_form_linear: expected one step integral per step");
    if (terminal.cols() != op.mode_count() || terminal.rows() != backend.support_size())
        throw StructuralError("closed_form_linear: terminal field has the wrong shape");
    PiecewiseProcess out = PiecewiseProcess::zeros(grid, terminal.rows(), terminal.cols());
    out[J].values = terminal;

    // Terminal part: chain of one-step expectations, then the resolvent power in one go.
    FieldMatrix chain = terminal;
    for (long j = J - 1; j >= 0; --j) {
        chain = backend.expect(grid.node(j), grid.node(j + 1), chain);
        FieldMatrix term = chain;
        scale_modes(term, op.resolvent_multipliers(grid.tau(), J - j));
        out[j].values = std::move(term);
    }

    // Forcing part: each G_k is carried back separately.
    for (long k = 0; k < static_cast<long>(step_integrals.size()); ++k) {
        const FieldMatrix& g = step_integrals[static_cast<std::size_t>(k)];
        if (g.rows() != terminal.rows() || g.cols() != terminal.cols())
            throw StructuralError("closed_form_linear: step integral has the wrong shape");
        FieldMatrix carried = g;
        for (long j = k; j >= 0; --j) {
            if (j < k) carried = backend.expect(grid.node(j), grid.node(j + 1), carried);
            FieldMatrix term = carried;
            scale_modes(term, op.resolvent_multipliers(grid.tau(), k - j + 1));
            out[j].values += term;
        }
    }
    return out;
}

std::vector<FieldMatrix> step_integrals(const Driver& forcing, const TimeGrid& grid, int quadrature,
                                        const StochasticBackend& backend, Eigen::Index modes) {
    if (forcing.z_dependence != ZDependence::none || forcing.depends_on_p)
        throw DomainError("step_integrals: driver must not depend on (p, z)");
    std::vector<FieldMatrix> out;
    if (forcing.is_zero()) return out;
    for (long k = 0; k < grid.steps(); ++k) {
        const double t0 = grid.node(k);
        const Eigen::VectorXd x = backend.coordinates(t0);
        const FieldMatrix dummy = FieldMatrix::Zero(x.size(), modes);
        const QuadratureRule rule = gauss_legendre(quadrature, t0, grid.node(k + 1));
        FieldMatrix acc = FieldMatrix::Zero(x.size(), modes);
        for (Eigen::Index q = 0; q < rule.size(); ++q) acc += rule.weights[q] * forcing(rule.nodes[q], dummy, dummy, x);
        out.push_back(std::move(acc));
    }
    return out;
}

std::vector<FieldMatrix> step_integrals(const PiecewiseProcess& g) {
    std::vector<FieldMatrix> out;
    const double tau = g.grid().tau();
    for (long k = 0; k < g.steps(); ++k) out.push_back(tau * g[k].values);
    return out;
}

}  // namespace bsee
