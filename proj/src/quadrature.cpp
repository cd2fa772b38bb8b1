#include "bsee/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

#include "bsee/errors.hpp"

namespace bsee {

namespace {

// Golub-Welsch: eigenvalues of the symmetric Jacobi matrix are the nodes,
// squared first eigenvector components times mu0 are the weights.
QuadratureRule golub_welsch(const Eigen::VectorXd& off_diagonal, int order, double mu0) {
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 0; k + 1 < order; ++k) {
        jacobi(k, k + 1) = off_diagonal[k];
        jacobi(k + 1, k) = off_diagonal[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    QuadratureRule rule;
    rule.nodes = solver.eigenvalues();
    rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square().matrix();

    // Both weight functions are even: enforce exact symmetry of the rule.
    for (int k = 0; k < order / 2; ++k) {
        const int l = order - 1 - k;
        const double x = 0.5 * (rule.nodes[l] - rule.nodes[k]);
        const double w = 0.5 * (rule.weights[l] + rule.weights[k]);
        rule.nodes[k] = -x;
        rule.nodes[l] = x;
        rule.weights[k] = w;
        rule.weights[l] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    rule.weights *= mu0 / rule.weights.sum();
    return rule;
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
    if (order < 2) throw DomainError("gauss_hermite: order must be at least 2");
    Eigen::VectorXd beta(order - 1);
    for (int k = 0; k + 1 < order; ++k) beta[k] = std::sqrt(static_cast<double>(k + 1));
    QuadratureRule rule = golub_welsch(beta, order, 1.0);

    // Rescale nodes so the second moment is 1 to machine precision.
    const double second = rule.weights.dot(rule.nodes.cwiseAbs2());
    rule.nodes /= std::sqrt(second);
    return rule;
}

QuadratureRule gauss_legendre(int order, double a, double b) {
    if (order < 1) throw DomainError("gauss_legendre: order must be at least 1");
    if (!(b > a)) throw DomainError("gauss_legendre: empty interval");
    QuadratureRule rule;
    if (order == 1) {
        rule.nodes = Eigen::VectorXd::Constant(1, 0.0);
        rule.weights = Eigen::VectorXd::Constant(1, 2.0);
    } else {
        Eigen::VectorXd beta(order - 1);
        for (int k = 1; k < order; ++k) beta[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
        rule = golub_welsch(beta, order, 2.0);
    }
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    rule.nodes = (mid + half * rule.nodes.array()).matrix();
    rule.weights *= half;
    return rule;
}

}  // namespace bsee
