#pragma once

#include <string>

#include "bsee/backend.hpp"
#include "bsee/quadrature.hpp"

namespace bsee {

enum class Interpolation { linear, cubic };

Interpolation parse_interpolation(const std::string& name);
std::string to_string(Interpolation kind);

struct LatticeOptions {
    int gh_order = 8;
    /// Half-width of the W grid in units of sqrt(horizon).
    double extent = 6.0;
    /// Odd, so that W = 0 is a node.
    long nodes = 257;
    Interpolation interpolation = Interpolation::cubic;
    double horizon = 1.0;
};

/// Markovian realization: fields are functions of W(t) on a fixed spatial grid;
/// E_{t0} is Gauss-Hermite quadrature over the increment with off-grid values
/// interpolated and clamped to the edge values outside the grid.
class LatticeBackend final : public StochasticBackend {
public:
    explicit LatticeBackend(LatticeOptions options = {});

    std::string name() const override { return "lattice"; }
    Eigen::Index support_size() const override { return options_.nodes; }
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

    const LatticeOptions& options() const noexcept { return options_; }
    const QuadratureRule& hermite() const noexcept { return hermite_; }
    const Eigen::VectorXd& grid() const noexcept { return grid_; }
    double spacing() const noexcept { return spacing_; }
    Eigen::Index center() const noexcept { return options_.nodes / 2; }

    /// Interpolation weights at an arbitrary point: first node index and up to four weights.
    struct Stencil {
        Eigen::Index first = 0;
        int width = 0;
        double w[4] = {0.0, 0.0, 0.0, 0.0};
    };
    Stencil stencil_at(double y) const;

    /// Value of a grid field at an arbitrary point (one row per mode).
    Eigen::RowVectorXd interpolate(const FieldMatrix& field, double y) const;

    /// One-step transition of a measure on the grid.
    Eigen::VectorXd transport(double dt, const Eigen::VectorXd& measure) const;

private:
    std::vector<Stencil> branch_stencils(double dt) const;
    void check_step(double t0, double t1) const;
    void check_rows(const FieldMatrix& m, Eigen::Index rows, const char* what) const;

    LatticeOptions options_;
    QuadratureRule hermite_;
    Eigen::VectorXd grid_;
    double spacing_ = 0.0;
};

}  // namespace bsee
