#pragma once

#include <Eigen/Core>

#include <vector>

#include "bsee/spectral_space.hpp"

namespace bsee {

/// Values of an H-valued random variable: one row per support point of the
/// backend (lattice node or Monte-Carlo path), one column per mode.
using FieldMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// An F_{t}-measurable H-valued random variable at node `index` of some time grid.
struct AdaptedField {
    long index = 0;
    double time = 0.0;
    FieldMatrix values;

    Eigen::Index support() const noexcept { return values.rows(); }
    Eigen::Index modes() const noexcept { return values.cols(); }
};

/// A process that is constant on [t_j, t_{j+1}) with value fields[j]; holds J + 1 fields.
class PiecewiseProcess {
public:
    PiecewiseProcess() = default;
    PiecewiseProcess(TimeGrid grid, std::vector<AdaptedField> fields);

    /// All-zero process on `grid` with the given field shape.
    static PiecewiseProcess zeros(const TimeGrid& grid, Eigen::Index support, Eigen::Index modes);

    const TimeGrid& grid() const noexcept { return grid_; }
    long steps() const noexcept { return grid_.steps(); }
    const AdaptedField& operator[](long j) const { return fields_.at(static_cast<std::size_t>(j)); }
    AdaptedField& operator[](long j) { return fields_.at(static_cast<std::size_t>(j)); }
    const std::vector<AdaptedField>& fields() const noexcept { return fields_; }

    Eigen::Index support() const { return fields_.front().values.rows(); }
    Eigen::Index modes() const { return fields_.front().values.cols(); }

    PiecewiseProcess& operator+=(const PiecewiseProcess& other);
    PiecewiseProcess& operator-=(const PiecewiseProcess& other);
    PiecewiseProcess& operator*=(double scale);

    friend PiecewiseProcess operator+(PiecewiseProcess a, const PiecewiseProcess& b) { return a += b; }
    friend PiecewiseProcess operator-(PiecewiseProcess a, const PiecewiseProcess& b) { return a -= b; }
    friend PiecewiseProcess operator*(double s, PiecewiseProcess a) { return a *= s; }

private:
    void check_compatible(const PiecewiseProcess& other) const;

    TimeGrid grid_;
    std::vector<AdaptedField> fields_;
};

/// A process sampled at the midpoints of s sub-intervals of every step of a coarse grid.
/// samples[j * s + r] is the value at t_j + (r + 1/2) tau / s. Its `time` member is the
/// time whose W coordinate the values are a function of: anything in [t_j, sample_time].
struct FineSampledProcess {
    TimeGrid grid;
    long substeps = 1;
    std::vector<AdaptedField> samples;

    double sample_time(long j, long r) const {
        return grid.node(j) + (static_cast<double>(r) + 0.5) * grid.tau() / static_cast<double>(substeps);
    }
};

}  // namespace bsee
