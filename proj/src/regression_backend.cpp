#include "bsee/regression_backend.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

#include "bsee/errors.hpp"

namespace bsee {

RegressionBackend::RegressionBackend(RegressionOptions options) : options_(options) {
    if (options_.paths < 1) throw DomainError("RegressionBackend: need at least one path");
    if (options_.degree < 0) throw DomainError("RegressionBackend: degree must be nonnegative");
    if (options_.time_steps < 1) throw DomainError("RegressionBackend: need at least one time step");
    if (!(options_.horizon > 0.0)) throw DomainError("RegressionBackend: horizon must be positive");

    const double dt = options_.horizon / static_cast<double>(options_.time_steps);
    const double sd = std::sqrt(dt);
    paths_.resize(options_.paths, options_.time_steps + 1);
    std::mt19937_64 rng(options_.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (long n = 0; n < options_.paths; ++n) {
        paths_(n, 0) = 0.0;
        for (long l = 0; l < options_.time_steps; ++l) paths_(n, l + 1) = paths_(n, l) + sd * normal(rng);
    }
}

long RegressionBackend::time_index(double t) const {
    const double dt = options_.horizon / static_cast<double>(options_.time_steps);
    const long idx = std::lround(t / dt);
    if (idx < 0 || idx > options_.time_steps || std::abs(static_cast<double>(idx) * dt - t) > 1e-9 * options_.horizon) {
        std::ostringstream msg;
        msg << "regression backend: time " << t << " is not on its path grid (" << options_.time_steps
            << " steps over " << options_.horizon << ")";
        throw BackendError(msg.str());
    }
    return idx;
}

void RegressionBackend::check_rows(const FieldMatrix& m, const char* what) const {
    if (m.rows() != options_.paths)
        throw StructuralError(std::string("regression ") + what + ": expected " + std::to_string(options_.paths) +
                              " rows, got " + std::to_string(m.rows()));
}

Eigen::VectorXd RegressionBackend::coordinates(double t) const { return paths_.col(time_index(t)); }

Eigen::VectorXd RegressionBackend::weights(double) const {
    return Eigen::VectorXd::Constant(options_.paths, 1.0 / static_cast<double>(options_.paths));
}

std::vector<Eigen::VectorXd> RegressionBackend::transport_measures(const TimeGrid& grid) const {
    return std::vector<Eigen::VectorXd>(static_cast<std::size_t>(grid.steps() + 1), weights(0.0));
}

Eigen::MatrixXd RegressionBackend::basis(double t) const {
    const long idx = time_index(t);
    if (idx == 0) return Eigen::MatrixXd::Ones(options_.paths, 1);
    const double scale = 1.0 / std::sqrt(t);
    const int size = options_.degree + 1;
    Eigen::MatrixXd b(options_.paths, size);
    const Eigen::ArrayXd x = paths_.col(idx).array() * scale;
    b.col(0).setOnes();
    if (size > 1) b.col(1) = x.matrix();
    for (int k = 1; k + 1 < size; ++k)
        b.col(k + 1) = (x * b.col(k).array() - static_cast<double>(k) * b.col(k - 1).array()).matrix();
    return b;
}

FieldMatrix RegressionBackend::project(double t, const FieldMatrix& values) const {
    check_rows(values, "project");
    const Eigen::MatrixXd b = basis(t);
    const double n = static_cast<double>(options_.paths);
    const Eigen::MatrixXd gram = (b.transpose() * b) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spectrum(gram, Eigen::EigenvaluesOnly);
    const double lo = spectrum.eigenvalues().minCoeff();
    const double hi = spectrum.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        std::ostringstream msg;
        msg << "regression backend: singular normal equations at t=" << t << " (eigenvalues in [" << lo << ", " << hi
            << "], condition " << (lo > 0.0 ? hi / lo : INFINITY) << ", paths=" << options_.paths
            << ", basis size=" << b.cols() << ")";
        throw BackendError(msg.str());
    }
    const Eigen::MatrixXd rhs = (b.transpose() * values) / n;
    const Eigen::MatrixXd coef = gram.ldlt().solve(rhs);
    return b * coef;
}

Eigen::Index RegressionBackend::branch_size(double t0, double t1) const {
    time_index(t0);
    time_index(t1);
    return options_.paths;
}

FieldMatrix RegressionBackend::lift(double t0, double t1, const FieldMatrix& next) const {
    branch_size(t0, t1);
    check_rows(next, "lift");
    return next;
}

FieldMatrix RegressionBackend::broadcast(double t0, double t1, const FieldMatrix& current) const {
    branch_size(t0, t1);
    check_rows(current, "broadcast");
    return current;
}

Eigen::VectorXd RegressionBackend::increments(double t0, double t1) const {
    return paths_.col(time_index(t1)) - paths_.col(time_index(t0));
}

Eigen::VectorXd RegressionBackend::branch_coordinates(double t0, double t1) const {
    time_index(t1);
    return paths_.col(time_index(t0));
}

FieldMatrix RegressionBackend::reduce(double t0, double t1, const FieldMatrix& branch) const {
    time_index(t1);
    return project(t0, branch);
}

Eigen::VectorXd RegressionBackend::joint_weights(double t0, double t1, const Eigen::VectorXd& outer) const {
    branch_size(t0, t1);
    if (outer.size() != options_.paths) throw StructuralError("joint_weights: measure has wrong length");
    return outer;
}

FieldMatrix RegressionBackend::push(double t0, double t1, const FieldMatrix& branch, const Eigen::VectorXd&,
                                    const Eigen::VectorXd&) const {
    time_index(t0);
    return project(t1, branch);
}

double RegressionBackend::cross_moment(double ta, const FieldMatrix& a, double tb, const FieldMatrix& b) const {
    time_index(ta);
    time_index(tb);
    check_rows(a, "cross_moment");
    check_rows(b, "cross_moment");
    return a.cwiseProduct(b).sum() / static_cast<double>(options_.paths);
}

}  // namespace bsee
