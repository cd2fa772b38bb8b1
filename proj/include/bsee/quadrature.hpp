#pragma once

#include <Eigen/Core>

namespace bsee {

/// Nodes and weights of a one-dimensional quadrature rule.
struct QuadratureRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const noexcept { return nodes.size(); }
};

/// Gauss-Hermite rule for the standard normal law: sum w = 1, sum w x = 0, sum w x^2 = 1.
/// Computed by Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
QuadratureRule gauss_hermite(int order);

/// Gauss-Legendre rule on [a, b]; the weights sum to b - a.
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

}  // namespace bsee
