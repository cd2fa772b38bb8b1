#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "bsee/lattice_backend.hpp"
#include "bsee/lq_control.hpp"
#include "bsee/schemes.hpp"

using namespace bsee;

namespace {

const LatticeBackend& lattice() {
    static const LatticeBackend lat({.nodes = 129, .interpolation = Interpolation::linear, .horizon = 1.0});
    return lat;
}

PiecewiseProcess random_process(const TimeGrid& grid, Eigen::Index modes, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    PiecewiseProcess x = PiecewiseProcess::zeros(grid, lattice().support_size(), modes);
    for (long j = 0; j < grid.steps(); ++j)
        for (Eigen::Index i = 0; i < x.support(); ++i)
            for (Eigen::Index m = 0; m < modes; ++m) x[j].values(i, m) = n(rng);
    return x;
}

Eigen::RowVectorXd weights_row(Eigen::Index modes) {
    Eigen::RowVectorXd w(modes);
    for (Eigen::Index m = 0; m < modes; ++m) w[m] = 1.0 / static_cast<double>(m + 1);
    return w;
}

LQProblem markov_problem(long J, Eigen::Index modes = 3, CoefficientSet coeffs = CoefficientSet::constants(0.2, 1.0, 0.5, 0.3)) {
    const TimeGrid grid(1.0, J);
    const Eigen::RowVectorXd w = weights_row(modes);
    return {Operator::laplacian_1d(static_cast<std::size_t>(modes)), grid, coeffs, 1.0,
            target_from_function(lattice(), grid, [w](double t, double x) -> Eigen::RowVectorXd {
                return (1.0 + t) * std::cos(x) * w;
            })};
}

double norm(const PiecewiseProcess& x, const std::vector<Eigen::VectorXd>& pi) {
    return std::sqrt(process_inner(x, x, pi));
}

}  // namespace

TEST_CASE("cost of trivial controls") {
    LQProblem prob = markov_problem(8);
    const auto pi = state_measures(lattice(), prob.grid);
    const PiecewiseProcess zero = PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3);
    CHECK(cost(zero, prob, lattice()) == doctest::Approx(0.5 * process_inner(prob.y_d, prob.y_d, pi)).epsilon(1e-14));
    CHECK(process_inner(prob.y_d, prob.y_d, pi) > 0.0);
    prob.y_d = zero;
    CHECK(cost(zero, prob, lattice()) == 0.0);
}

TEST_CASE("cost is convex") {
    const LQProblem prob = markov_problem(8);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const PiecewiseProcess a = random_process(prob.grid, 3, rng);
        const PiecewiseProcess b = random_process(prob.grid, 3, rng);
        const double mid = cost(0.5 * (a + b), prob, lattice());
        CHECK(mid <= 0.5 * cost(a, prob, lattice()) + 0.5 * cost(b, prob, lattice()) + 1e-12);
    }
}

TEST_CASE("gradient matches central differences") {
    const LQProblem prob = markov_problem(16);
    const auto pi = state_measures(lattice(), prob.grid);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        const PiecewiseProcess U = random_process(prob.grid, 3, rng);
        const PiecewiseProcess v = random_process(prob.grid, 3, rng);
        const double h = 1e-3;
        const double fd = (cost(U + h * PiecewiseProcess(v), prob, lattice()) -
                           cost(U - h * PiecewiseProcess(v), prob, lattice())) /
                          (2.0 * h);
        const double exact = process_inner(cost_gradient(U, prob, lattice()), v, pi);
        CHECK(std::abs(fd - exact) <= 1e-6 * std::abs(exact));
    }
}

TEST_CASE("adjoint vanishes when the target is reached") {
    LQProblem prob = markov_problem(8);
    std::mt19937_64 rng(23);
    const PiecewiseProcess U = random_process(prob.grid, 3, rng);
    prob.y_d = solve_state(U, prob.coeffs, prob.op, lattice());
    const auto [P, Z] = solve_adjoint(U, prob, lattice());
    for (long j = 0; j <= 8; ++j) {
        CHECK(P[j].values.cwiseAbs().maxCoeff() == 0.0);
        CHECK(Z[j].values.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("adjoint with vanishing coefficients is the linear closed form") {
    const LQProblem prob = markov_problem(16, 3, CoefficientSet::constants(0, 0, 0, 0));
    const PiecewiseProcess U = PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3);
    const auto [P, Z] = solve_adjoint(U, prob, lattice());
    const PiecewiseProcess g = -1.0 * PiecewiseProcess(prob.y_d);
    const PiecewiseProcess oracle =
        closed_form_linear(FieldMatrix::Zero(lattice().support_size(), 3), step_integrals(g), prob.op, prob.grid,
                           lattice());
    for (long j = 0; j <= 16; ++j) CHECK((P[j].values - oracle[j].values).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("deterministic target and zero control give a deterministic adjoint") {
    LQProblem prob = markov_problem(8);
    const Eigen::RowVectorXd w = weights_row(3);
    prob.y_d = target_from_function(lattice(), prob.grid,
                                    [w](double t, double) -> Eigen::RowVectorXd { return std::sin(3.0 * t) * w; });
    const auto [P, Z] = solve_adjoint(PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3), prob, lattice());
    for (long j = 0; j <= 8; ++j) {
        CHECK(Z[j].values.cwiseAbs().maxCoeff() <= 1e-15);
        FieldMatrix spread = P[j].values;
        spread.rowwise() -= P[j].values.row(lattice().center());
        CHECK(spread.cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("bilinear form: zero direction, linearity and duality") {
    const LQProblem prob = markov_problem(16);
    const auto pi = state_measures(lattice(), prob.grid);
    std::mt19937_64 rng(31);
    const PiecewiseProcess U = random_process(prob.grid, 3, rng);
    const auto [P, Z] = solve_adjoint(U, prob, lattice());
    const PiecewiseProcess g = solve_state(U, prob.coeffs, prob.op, lattice()) - prob.y_d;
    const PiecewiseProcess zero = PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3);
    CHECK(bilinear_S(P, Z, g, zero, prob, lattice()) == 0.0);

    for (int trial = 0; trial < 5; ++trial) {
        const PiecewiseProcess v1 = random_process(prob.grid, 3, rng);
        const PiecewiseProcess v2 = random_process(prob.grid, 3, rng);
        const double s1 = bilinear_S(P, Z, g, v1, prob, lattice());
        const double s2 = bilinear_S(P, Z, g, v2, prob, lattice());
        const double combo = bilinear_S(P, Z, g, 2.0 * PiecewiseProcess(v1) - 0.5 * PiecewiseProcess(v2), prob,
                                        lattice());
        CHECK(std::abs(combo - (2.0 * s1 - 0.5 * s2)) <= 1e-12 * (std::abs(s1) + std::abs(s2)));

        const double tracking = process_inner(g, solve_state(v1, prob.coeffs, prob.op, lattice()), pi);
        const double scale = norm(g, pi) * norm(v1, pi);
        CHECK(std::abs(tracking - s1) <= 1e-9 * scale);
    }
}

TEST_CASE("optimal control: trivial cases") {
    LQProblem prob = markov_problem(8);
    const PiecewiseProcess zero = PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3);
    LQProblem no_target = prob;
    no_target.y_d = zero;
    const LQSolution a = solve_lq(no_target, lattice());
    CHECK(a.cost == 0.0);
    for (long j = 0; j <= 8; ++j) CHECK(a.U[j].values.cwiseAbs().maxCoeff() == 0.0);

    LQProblem idle = prob;
    idle.coeffs.alpha1 = Coefficient::constant(0.0);
    idle.coeffs.alpha3 = Coefficient::constant(0.0);
    const LQSolution b = solve_lq(idle, lattice());
    for (long j = 0; j <= 8; ++j) CHECK(b.U[j].values.cwiseAbs().maxCoeff() == 0.0);

    prob.nu = 0.0;
    CHECK_THROWS_AS(solve_lq(prob, lattice()), DomainError);
}

TEST_CASE("optimal control satisfies the optimality system") {
    const LQProblem prob = markov_problem(16);
    const auto pi = state_measures(lattice(), prob.grid);
    const LQOptions options;
    const LQSolution sol = solve_lq(prob, lattice(), options);
    for (std::size_t k = 1; k < sol.residual_history.size(); ++k)
        CHECK(sol.residual_history[k] <= sol.residual_history[k - 1]);
    CHECK(sol.optimality_residual <= 10.0 * options.tol * (1.0 + norm(sol.U, pi)));
    // The last control value only moves Y_J, which the cost never sees.
    CHECK(sol.U[15].values.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(sol.cost < cost(PiecewiseProcess::zeros(prob.grid, lattice().support_size(), 3), prob, lattice()));
    CHECK(std::isfinite(sol.pointwise_gap));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 3; ++trial) {
        const PiecewiseProcess v = random_process(prob.grid, 3, rng);
        CHECK(cost(sol.U + 1e-2 * PiecewiseProcess(v), prob, lattice()) >= sol.cost);
    }
}

TEST_CASE("deterministic problem matches a dense per-mode solve") {
    const long J = 12;
    const Eigen::Index modes = 3;
    LQProblem prob = markov_problem(J, modes, CoefficientSet::constants(0, 1, 0, 0));
    prob.nu = 0.5;
    const Eigen::RowVectorXd w = weights_row(modes);
    const auto target = [w](double t, double) -> Eigen::RowVectorXd { return std::cos(2.0 * t) * w; };
    prob.y_d = target_from_function(lattice(), prob.grid, target);
    const LQSolution sol = solve_lq(prob, lattice());
    const auto pi = state_measures(lattice(), prob.grid);

    // Y_j = sum_{k<j} r^{j-k} tau U_k per mode; minimize 1/2|L U - d|^2 + nu/2 |U|^2.
    const double tau = prob.grid.tau();
    for (Eigen::Index m = 0; m < modes; ++m) {
        const double r = 1.0 / (1.0 + tau * prob.op.eigenvalues()[m]);
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(J, J);
        for (long j = 0; j < J; ++j)
            for (long k = 0; k < j; ++k) L(j, k) = std::pow(r, static_cast<double>(j - k)) * tau;
        Eigen::VectorXd d(J);
        for (long j = 0; j < J; ++j) d[j] = prob.y_d[j].values(lattice().center(), m);
        const Eigen::MatrixXd normal = prob.nu * Eigen::MatrixXd::Identity(J, J) + L.transpose() * L;
        const Eigen::VectorXd u = normal.ldlt().solve(L.transpose() * d);
        // Compare on the heaviest node of each step; the center can carry no mass.
        for (long j = 0; j < J; ++j) {
            Eigen::Index live = 0;
            pi[static_cast<std::size_t>(j)].maxCoeff(&live);
            CHECK(std::abs(sol.U[j].values(live, m) - u[j]) <= 1e-8);
        }
    }
}

TEST_CASE("large penalty shrinks the control like 1/nu") {
    LQProblem prob = markov_problem(8);
    const auto pi = state_measures(lattice(), prob.grid);
    prob.nu = 1e3;
    const double a = norm(solve_lq(prob, lattice()).U, pi);
    prob.nu = 1e4;
    const double b = norm(solve_lq(prob, lattice()).U, pi);
    CHECK(a > 0.0);
    CHECK(a / b == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("solver failures are typed") {
    const LQProblem prob = markov_problem(8);
    LQOptions starved;
    starved.max_iterations = 1;
    CHECK_THROWS_AS(solve_lq(prob, lattice(), starved), ConvergenceError);

    LQProblem loud = prob;
    loud.coeffs.alpha2 = Coefficient::constant(3.0);
    CHECK_THROWS_AS(solve_lq(loud, lattice()), PreconditionError);
    CHECK_THROWS_AS(solve_adjoint(prob.y_d, loud, lattice()), PreconditionError);

    const LatticeBackend cubic({.nodes = 129, .interpolation = Interpolation::cubic, .horizon = 1.0});
    CHECK_THROWS_AS(solve_lq(prob, cubic), BackendError);
}

TEST_CASE("rate study bookkeeping") {
    const auto make = [](long J) { return markov_problem(J, 2); };
    const LQRateReport one = rate_study_lq(make, {4}, lattice());
    CHECK(one.status == "insufficient points");
    CHECK_FALSE(one.fit.has_value());
    CHECK(one.reference_J == 16);
    CHECK_THROWS_AS(rate_study_lq(make, {4, 6}, lattice()), ConfigError);
}
