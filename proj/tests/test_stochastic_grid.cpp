#include "doctest.h"

#include <cmath>
#include <random>

#include "bsee/lattice_backend.hpp"
#include "bsee/quadrature.hpp"
#include "bsee/regression_backend.hpp"
#include "bsee/stochastic_grid.hpp"

using namespace bsee;

namespace {

template <typename F>
AdaptedField field_of(const StochasticBackend& b, const TimeGrid& g, long j, long modes, F f) {
    const Eigen::VectorXd x = b.coordinates(g.node(j));
    FieldMatrix v(x.size(), modes);
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (long m = 0; m < modes; ++m) v(i, m) = f(x[i], m);
    return {j, g.node(j), v};
}

// Rows whose Gauss-Hermite branches stay well inside the grid.
Eigen::Index interior_margin(const LatticeBackend& b, double tau) {
    return static_cast<Eigen::Index>(std::ceil(4.0 * std::sqrt(tau) / b.spacing())) + 3;
}

FieldMatrix random_polynomial_field(const Eigen::VectorXd& x, long modes, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> normal;
    FieldMatrix v(x.size(), modes);
    for (long m = 0; m < modes; ++m) {
        const double c0 = normal(rng), c1 = normal(rng), c2 = normal(rng), c3 = normal(rng);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double y = x[i] / scale;
            v(i, m) = c0 + c1 * y + c2 * y * y + c3 * std::sin(3.0 * y);
        }
    }
    return v;
}

}  // namespace

TEST_CASE("Gauss-Hermite moments") {
    for (int order : {2, 5, 8, 16, 40}) {
        const QuadratureRule q = gauss_hermite(order);
        CHECK(std::abs(q.weights.sum() - 1.0) <= 1e-12);
        CHECK(std::abs(q.weights.dot(q.nodes)) <= 1e-12);
        CHECK(std::abs(q.weights.dot(q.nodes.cwiseAbs2()) - 1.0) <= 1e-12);
        if (order >= 3) CHECK(std::abs(q.weights.dot(q.nodes.array().pow(4).matrix()) - 3.0) <= 1e-10);
    }
    const QuadratureRule gl = gauss_legendre(5, 0.0, 2.0);
    CHECK(gl.weights.sum() == doctest::Approx(2.0));
    CHECK(gl.weights.dot(gl.nodes.array().pow(9).matrix()) == doctest::Approx(std::pow(2.0, 10) / 10.0));
}

TEST_CASE("lattice conditional expectation of polynomials") {
    const LatticeBackend lat({.horizon = 1.0});
    const TimeGrid g(1.0, 16);
    const long j = 5;
    const double tau = g.tau();
    const Eigen::Index lo = interior_margin(lat, tau);
    const Eigen::Index hi = lat.support_size() - lo;

    const AdaptedField one = field_of(lat, g, j + 1, 2, [](double, long) { return 3.5; });
    const AdaptedField x = field_of(lat, g, j + 1, 2, [](double y, long) { return y; });
    const AdaptedField x2 = field_of(lat, g, j + 1, 2, [](double y, long) { return y * y; });

    const FieldMatrix e1 = cond_expect(lat, g, j, one).values;
    CHECK((e1.array() - 3.5).abs().maxCoeff() <= 1e-13);

    const FieldMatrix ex = cond_expect(lat, g, j, x).values;
    const FieldMatrix ex2 = cond_expect(lat, g, j, x2).values;
    const FieldMatrix ix = ito_coefficient(lat, g, j, x).values;
    const FieldMatrix ix2 = ito_coefficient(lat, g, j, x2).values;
    const Eigen::VectorXd grid = lat.grid();
    double err = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) {
        err = std::max(err, std::abs(ex(i, 0) - grid[i]));
        err = std::max(err, std::abs(ex2(i, 1) - grid[i] * grid[i] - tau));
        err = std::max(err, std::abs(ix(i, 0) - 1.0));
        err = std::max(err, std::abs(ix2(i, 1) - 2.0 * grid[i]));
    }
    CHECK(err <= 1e-11);

    CHECK_THROWS_AS(cond_expect(lat, g, j, AdaptedField{j, 0.0, one.values}), StructuralError);
    CHECK_THROWS_AS(cond_expect(lat, g, 16, AdaptedField{17, 0.0, one.values}), StructuralError);
}

TEST_CASE("increment coefficient annihilates fields measurable at the left endpoint") {
    const LatticeBackend lat({.horizon = 1.0});
    const TimeGrid g(1.0, 8);
    std::mt19937_64 rng(1);
    const double t0 = g.node(3), t1 = g.node(4);
    const FieldMatrix w = random_polynomial_field(lat.grid(), 3, rng, 2.0);
    const FieldMatrix lifted_w = lat.broadcast(t0, t1, w);
    FieldMatrix with_increment = lifted_w;
    with_increment.array().colwise() *= lat.increments(t0, t1).array();
    const FieldMatrix iw = lat.reduce(t0, t1, with_increment) / (t1 - t0);
    CHECK(iw.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + w.cwiseAbs().maxCoeff()));
}

TEST_CASE("Pythagoras on the lattice") {
    const LatticeBackend lat({.horizon = 1.0});
    const TimeGrid g(1.0, 32);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const long j = trial % 32;
        const AdaptedField v{j + 1, g.node(j + 1), random_polynomial_field(lat.grid(), 4, rng, 1.5)};
        const PythagorasParts parts = pythagoras_check(lat, g, j, v);
        CHECK(std::abs(parts.a + parts.b - parts.c) <= 1e-10 * (1.0 + parts.c));
        // ||I v|| <= tau^{-1/2} ||v|| under the same law.
        const FieldMatrix iv = ito_coefficient(lat, g, j, v).values;
        const double lhs = std::sqrt(StochasticBackend::weighted_inner(lat.weights(g.node(j)), iv, iv));
        CHECK(lhs <= std::sqrt(parts.c / g.tau()) * (1.0 + 1e-12));
    }
    // v measurable at t_j gives b = 0.
    const AdaptedField flat = field_of(lat, g, 4, 2, [](double, long m) { return 1.0 + m; });
    CHECK(pythagoras_check(lat, g, 3, flat).b <= 1e-24);
}

TEST_CASE("tower property and positivity with linear interpolation") {
    const LatticeBackend lat({.nodes = 201, .interpolation = Interpolation::linear, .horizon = 1.0});
    const TimeGrid g(1.0, 10);
    std::mt19937_64 rng(4);
    const FieldMatrix v = random_polynomial_field(lat.grid(), 3, rng, 2.0);
    // Tower: the two-step expectation equals the composition of one-step expectations.
    const FieldMatrix two = lat.expect(g.node(2), g.node(3), lat.expect(g.node(3), g.node(4), v));
    const FieldMatrix again = cond_expect(lat, g, 2, cond_expect(lat, g, 3, AdaptedField{4, g.node(4), v})).values;
    CHECK((two - again).cwiseAbs().maxCoeff() == 0.0);

    const FieldMatrix positive = v.cwiseAbs();
    const FieldMatrix ep = lat.expect(g.node(0), g.node(1), positive);
    CHECK(ep.minCoeff() >= 0.0);
    for (Eigen::Index m = 0; m < v.cols(); ++m)
        CHECK(lat.expect(g.node(0), g.node(1), v).col(m).cwiseAbs().maxCoeff() <=
              v.col(m).cwiseAbs().maxCoeff() * (1.0 + 1e-12));
}

TEST_CASE("projection onto piecewise-constant processes") {
    const LatticeBackend lat({.horizon = 1.0});
    const TimeGrid g(1.0, 4);
    const long s = 4;

    // Deterministic and linear in t: the step average is the midpoint value.
    const FineSampledProcess lin = sample_midpoints(lat, g, s, [](double t, double) {
        Eigen::RowVectorXd r(2);
        r << 2.0 * t + 1.0, -t;
        return r;
    });
    const PiecewiseProcess pl = project_Ptau(lat, lin);
    for (long j = 0; j < g.steps(); ++j) {
        const double mid = g.node(j) + 0.5 * g.tau();
        CHECK((pl[j].values.col(0).array() - (2.0 * mid + 1.0)).abs().maxCoeff() <= 1e-12);
        CHECK((pl[j].values.col(1).array() + mid).abs().maxCoeff() <= 1e-12);
    }

    // Idempotence: samples already measurable at t_j.
    std::mt19937_64 rng(8);
    FineSampledProcess flat{g, s, {}};
    std::vector<FieldMatrix> level;
    for (long j = 0; j < g.steps(); ++j) level.push_back(random_polynomial_field(lat.grid(), 2, rng, 2.0));
    for (long j = 0; j < g.steps(); ++j)
        for (long r = 0; r < s; ++r) flat.samples.push_back({j * s + r, g.node(j), level[j]});
    const PiecewiseProcess pf = project_Ptau(lat, flat);
    for (long j = 0; j < g.steps(); ++j) CHECK((pf[j].values - level[j]).cwiseAbs().maxCoeff() <= 1e-13);

    // Residual is orthogonal to every piecewise-constant adapted process.
    const FineSampledProcess wavy = sample_midpoints(lat, g, s, [](double t, double x) {
        Eigen::RowVectorXd r(2);
        r << std::sin(x + t), std::cos(2.0 * x) * t;
        return r;
    });
    const PiecewiseProcess pw = project_Ptau(lat, wavy);
    const double h = g.tau() / s;
    for (int trial = 0; trial < 3; ++trial) {
        double inner = 0.0;
        for (long j = 0; j < g.steps(); ++j) {
            const FieldMatrix x = random_polynomial_field(lat.grid(), 2, rng, 2.0);
            for (long r = 0; r < s; ++r) {
                const AdaptedField& sample = wavy.samples[static_cast<std::size_t>(j * s + r)];
                inner += h * lat.cross_moment(g.node(j), x, sample.time, sample.values);
            }
            inner -= g.tau() * lat.cross_moment(g.node(j), x, g.node(j), pw[j].values);
        }
        CHECK(std::abs(inner) <= 1e-10);
    }

    FineSampledProcess broken = wavy;
    broken.samples.pop_back();
    CHECK_THROWS_AS(project_Ptau(lat, broken), StructuralError);
    broken = wavy;
    broken.samples[1].time = 0.9;
    CHECK_THROWS_AS(project_Ptau(lat, broken), StructuralError);
}

TEST_CASE("regression backend") {
    const RegressionBackend reg({.paths = 20000, .seed = 99, .degree = 4, .horizon = 1.0, .time_steps = 16});
    const TimeGrid g(1.0, 8);
    const long j = 3;
    const AdaptedField x = field_of(reg, g, j + 1, 1, [](double y, long) { return y; });
    const AdaptedField x2 = field_of(reg, g, j + 1, 1, [](double y, long) { return y * y; });
    const Eigen::VectorXd w = reg.coordinates(g.node(j));

    // Polynomials of W(t_{j+1}) have conditional expectations in the basis span,
    // so the least-squares fit recovers them up to Monte-Carlo error.
    const FieldMatrix ex = cond_expect(reg, g, j, x).values;
    CHECK(std::sqrt((ex.col(0) - w).squaredNorm() / static_cast<double>(w.size())) <= 0.02);
    const FieldMatrix ix = ito_coefficient(reg, g, j, x).values;
    CHECK(std::abs(ix.col(0).mean() - 1.0) <= 0.05);
    const FieldMatrix ex2 = cond_expect(reg, g, j, x2).values;
    CHECK(((ex2.col(0).array() - w.array().square() - g.tau()).abs()).mean() <= 0.05);

    // Orthogonality of v - dW I v against dW w, within three standard errors.
    const double t0 = g.node(j), t1 = g.node(j + 1);
    const FieldMatrix iv = reg.broadcast(t0, t1, reg.ito(t0, t1, x2.values));
    const Eigen::VectorXd dw = reg.increments(t0, t1);
    const Eigen::VectorXd residual = x2.values.col(0) - (dw.array() * iv.col(0).array()).matrix();
    const Eigen::VectorXd sample = residual.array() * dw.array() * (w.array().cos());
    const BranchStatistic stat = branch_statistic(reg, g, j, sample);
    CHECK(std::abs(stat.mean) <= 3.0 * stat.standard_error + 1e-12);

    CHECK_THROWS_AS(reg.coordinates(0.03), BackendError);
    const RegressionBackend tiny({.paths = 3, .seed = 1, .degree = 4, .horizon = 1.0, .time_steps = 4});
    CHECK_THROWS_AS(tiny.expect(0.25, 0.5, FieldMatrix::Ones(3, 1)), BackendError);
}

TEST_CASE("regression backend is deterministic for a fixed seed") {
    const RegressionBackend a({.paths = 500, .seed = 5, .degree = 3, .horizon = 1.0, .time_steps = 8});
    const RegressionBackend b({.paths = 500, .seed = 5, .degree = 3, .horizon = 1.0, .time_steps = 8});
    const RegressionBackend c({.paths = 500, .seed = 6, .degree = 3, .horizon = 1.0, .time_steps = 8});
    CHECK((a.coordinates(1.0) - b.coordinates(1.0)).norm() == 0.0);
    CHECK((a.coordinates(1.0) - c.coordinates(1.0)).norm() > 0.0);
}
