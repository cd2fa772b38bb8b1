#pragma once

#include <cstdint>
#include <string>

#include "bsee/backend.hpp"

namespace bsee {

struct RegressionOptions {
    long paths = 100000;
    std::uint64_t seed = 20240601;
    /// Degree of the Hermite basis in W(t)/sqrt(t).
    int degree = 4;
    double horizon = 1.0;
    /// Resolution of the simulated Brownian paths; every time queried must be a multiple of horizon / time_steps.
    long time_steps = 128;
};

/// Least-squares Monte Carlo realization. One ensemble of Brownian paths is
/// simulated at construction and reused by every step of every solve.
/// E_{t} is the empirical L2 projection onto Hermite polynomials in W(t).
class RegressionBackend final : public StochasticBackend {
public:
    explicit RegressionBackend(RegressionOptions options = {});

    std::string name() const override { return "regression"; }
    Eigen::Index support_size() const override { return options_.paths; }
    Eigen::VectorXd coordinates(double t) const override;
    Eigen::VectorXd weights(double t) const override;
    std::vector<Eigen::VectorXd> transport_measures(const TimeGrid& grid) const override;

    Eigen::Index branch_size(double t0, double t1) const override;
    FieldMatrix lift(double t0, double t1, const FieldMatrix& next) const override;
    FieldMatrix broadcast(double t0, double t1, const FieldMatrix& current) const override;
    Eigen::VectorXd increments(double t0, double t1) const override;
    Eigen::VectorXd branch_coordinates(double t0, double t1) const override;
    FieldMatrix reduce(double t0, double t1, const FieldMatrix& branch) const override;
    Eigen::VectorXd joint_weights(double t0, double t1, const Eigen::VectorXd& outer) const override;
    FieldMatrix push(double t0, double t1, const FieldMatrix& branch, const Eigen::VectorXd& measure0,
                     const Eigen::VectorXd& measure1) const override;
    double cross_moment(double ta, const FieldMatrix& a, double tb, const FieldMatrix& b) const override;

    const RegressionOptions& options() const noexcept { return options_; }

    /// Regression basis evaluated on the paths at time t (paths x basis size).
    Eigen::MatrixXd basis(double t) const;
    /// Least-squares projection of path values onto the basis at time t.
    FieldMatrix project(double t, const FieldMatrix& values) const;

private:
    long time_index(double t) const;
    void check_rows(const FieldMatrix& m, const char* what) const;

    RegressionOptions options_;
    Eigen::MatrixXd paths_;  // paths x (time_steps + 1)
};

}  // namespace bsee
