#include "bsee/forward_sde.hpp"

#include <cmath>
#include <sstream>

#include "bsee/errors.hpp"
#include "bsee/quadrature.hpp"

namespace bsee {

namespace {

double parse_number(const std::string& text, const std::string& spec) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty()) throw ConfigError("cannot parse coefficient '" + spec + "'");
    return v;
}

void scale_modes(FieldMatrix& values, const Vector& multipliers) {
    values.array().rowwise() *= multipliers.transpose().array();
}

void check_process(const PiecewiseProcess& x, const Operator& op, const StochasticBackend& backend,
                   const char* what) {
    if (x.fields().empty()) throw StructuralError(std::string(what) + ": empty process");
    if (x.support() != backend.support_size() || x.modes() != op.mode_count())
        throw StructuralError(std::string(what) + ": process shape does not match backend and operator");
}

}  // namespace

Coefficient Coefficient::constant(double c) {
    std::ostringstream name;
    name << c;
    return {name.str(), [c](double) { return c; }, std::abs(c)};
}

Coefficient Coefficient::cosine(double scale) {
    return {scale == 1.0 ? "cos" : std::to_string(scale) + "*cos", [scale](double t) { return scale * std::cos(t); },
            std::abs(scale)};
}

Coefficient Coefficient::sine(double scale) {
    return {scale == 1.0 ? "sin" : std::to_string(scale) + "*sin", [scale](double t) { return scale * std::sin(t); },
            std::abs(scale)};
}

Coefficient Coefficient::parse(const std::string& spec) {
    const auto star = spec.find('*');
    const std::string head = star == std::string::npos ? spec : spec.substr(star + 1);
    const double scale = star == std::string::npos ? 1.0 : parse_number(spec.substr(0, star), spec);
    if (head == "cos") return cosine(scale);
    if (head == "sin") return sine(scale);
    if (star != std::string::npos) throw ConfigError("unknown coefficient preset in '" + spec + "'");
    return constant(parse_number(spec, spec));
}

CoefficientSet CoefficientSet::constants(double a0, double a1, double a2, double a3) {
    return {Coefficient::constant(a0), Coefficient::constant(a1), Coefficient::constant(a2),
            Coefficient::constant(a3)};
}

void CoefficientSet::validate() const {
    for (const Coefficient* c : {&alpha0, &alpha1, &alpha2, &alpha3})
        if (!std::isfinite(c->sup) || !c->value) throw DomainError("coefficient '" + c->name + "' has no finite bound");
}

std::vector<StepCoefficients> step_coefficients(const CoefficientSet& coeffs, const TimeGrid& grid, int quadrature) {
    coeffs.validate();
    if (quadrature < 1) throw DomainError("time quadrature needs at least one point");
    std::vector<StepCoefficients> out(static_cast<std::size_t>(grid.steps()));
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j);
        const QuadratureRule gl = gauss_legendre(quadrature, t0, grid.node(j + 1));
        StepCoefficients& s = out[static_cast<std::size_t>(j)];
        for (Eigen::Index q = 0; q < gl.size(); ++q) {
            s.a0 += gl.weights[q] * coeffs.alpha0(gl.nodes[q]);
            s.a1 += gl.weights[q] * coeffs.alpha1(gl.nodes[q]);
        }
        s.b2 = coeffs.alpha2(t0);
        s.b3 = coeffs.alpha3(t0);
    }
    return out;
}

void require_noise_bound(const CoefficientSet& coeffs, double tau) {
    coeffs.validate();
    const double bound = tau * coeffs.alpha2.sup * coeffs.alpha2.sup;
    if (bound >= 1.0) {
        std::ostringstream msg;
        msg << "state equation requires tau * sup|alpha_2|^2 < 1, got " << bound << " (tau=" << tau
            << ", sup|alpha_2|=" << coeffs.alpha2.sup << ")";
        throw PreconditionError(msg.str());
    }
}

std::vector<Eigen::VectorXd> state_measures(const StochasticBackend& backend, const TimeGrid& grid) {
    std::vector<Eigen::VectorXd> pi = backend.transport_measures(grid);
    for (const Eigen::VectorXd& m : pi)
        if (m.minCoeff() < 0.0)
            throw BackendError(backend.name() +
                               " transport measure has negative mass; use linear interpolation for the state equation");
    return pi;
}

double process_inner(const PiecewiseProcess& x, const PiecewiseProcess& y, const std::vector<Eigen::VectorXd>& pi) {
    if (x.steps() != y.steps() || static_cast<long>(pi.size()) != x.steps() + 1)
        throw StructuralError("process_inner: grids or measures do not match");
    double total = 0.0;
    for (long j = 0; j < x.steps(); ++j)
        total += StochasticBackend::weighted_inner(pi[static_cast<std::size_t>(j)], x[j].values, y[j].values);
    return x.grid().tau() * total;
}

PiecewiseProcess solve_state(const PiecewiseProcess& U, const CoefficientSet& coeffs, const Operator& op,
                             const StochasticBackend& backend, int quadrature) {
    check_process(U, op, backend, "solve_state");
    const TimeGrid& grid = U.grid();
    require_noise_bound(coeffs, grid.tau());
    const auto steps = step_coefficients(coeffs, grid, quadrature);
    const auto pi = state_measures(backend, grid);
    const Vector resolvent = op.resolvent_multipliers(grid.tau());

    PiecewiseProcess Y = PiecewiseProcess::zeros(grid, backend.support_size(), op.mode_count());
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const StepCoefficients& c = steps[static_cast<std::size_t>(j)];
        const FieldMatrix drift = (1.0 + c.a0) * Y[j].values + c.a1 * U[j].values;
        const FieldMatrix noise = c.b2 * Y[j].values + c.b3 * U[j].values;
        FieldMatrix branch = backend.broadcast(t0, t1, noise);
        branch.array().colwise() *= backend.increments(t0, t1).array();
        branch += backend.broadcast(t0, t1, drift);
        FieldMatrix next = backend.push(t0, t1, branch, pi[static_cast<std::size_t>(j)],
                                        pi[static_cast<std::size_t>(j + 1)]);
        scale_modes(next, resolvent);
        Y[j + 1].values = std::move(next);
    }
    return Y;
}

PiecewiseProcess state_map_adjoint(const PiecewiseProcess& R, const CoefficientSet& coeffs, const Operator& op,
                                   const StochasticBackend& backend, int quadrature) {
    check_process(R, op, backend, "state_map_adjoint");
    const TimeGrid& grid = R.grid();
    const double tau = grid.tau();
    require_noise_bound(coeffs, tau);
    const auto steps = step_coefficients(coeffs, grid, quadrature);
    const Vector resolvent = op.resolvent_multipliers(tau);

    // mu_j is the sensitivity of the functional <Y, R> to Y_j; mu_J = 0 since Y_J is never paired.
    PiecewiseProcess out = PiecewiseProcess::zeros(grid, backend.support_size(), op.mode_count());
    FieldMatrix mu = FieldMatrix::Zero(backend.support_size(), op.mode_count());
    for (long j = grid.steps() - 1; j >= 0; --j) {
        const double t0 = grid.node(j), t1 = grid.node(j + 1);
        const StepCoefficients& c = steps[static_cast<std::size_t>(j)];
        scale_modes(mu, resolvent);
        const FieldMatrix lifted = backend.lift(t0, t1, mu);
        const FieldMatrix mean = backend.reduce(t0, t1, lifted);
        FieldMatrix weighted = lifted;
        weighted.array().colwise() *= backend.increments(t0, t1).array();
        const FieldMatrix noise = backend.reduce(t0, t1, weighted);
        out[j].values = (c.a1 * mean + c.b3 * noise) / tau;
        mu = tau * R[j].values + (1.0 + c.a0) * mean + c.b2 * noise;
    }
    return out;
}

}  // namespace bsee
