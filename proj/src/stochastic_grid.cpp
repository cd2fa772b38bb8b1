#include "bsee/stochastic_grid.hpp"

#include <cmath>
#include <string>

#include "bsee/errors.hpp"

namespace bsee {

namespace {

void check_step_field(const TimeGrid& grid, long j, const AdaptedField& v, const char* what) {
    if (j < 0 || j >= grid.steps())
        throw StructuralError(std::string(what) + ": step index " + std::to_string(j) + " out of range");
    if (v.index != j + 1)
        throw StructuralError(std::string(what) + ": field carries index " + std::to_string(v.index) + ", expected " +
                              std::to_string(j + 1));
}

}  // namespace

AdaptedField cond_expect(const StochasticBackend& backend, const TimeGrid& grid, long j, const AdaptedField& v) {
    check_step_field(grid, j, v, "cond_expect");
    const double t0 = grid.node(j);
    return {j, t0, backend.expect(t0, grid.node(j + 1), v.values)};
}

AdaptedField ito_coefficient(const StochasticBackend& backend, const TimeGrid& grid, long j, const AdaptedField& v) {
    check_step_field(grid, j, v, "ito_coefficient");
    const double t0 = grid.node(j);
    return {j, t0, backend.ito(t0, grid.node(j + 1), v.values)};
}

PiecewiseProcess project_Ptau(const StochasticBackend& backend, const FineSampledProcess& v) {
    const TimeGrid& grid = v.grid;
    const long s = v.substeps;
    if (s < 1) throw StructuralError("project_Ptau: substeps must be positive");
    if (static_cast<long>(v.samples.size()) != grid.steps() * s)
        throw StructuralError("project_Ptau: expected " + std::to_string(grid.steps() * s) + " samples, got " +
                              std::to_string(v.samples.size()));
    const Eigen::Index modes = v.samples.front().values.cols();
    PiecewiseProcess out = PiecewiseProcess::zeros(grid, backend.support_size(), modes);
    const double slack = 1e-12 * grid.horizon();
    for (long j = 0; j < grid.steps(); ++j) {
        const double t0 = grid.node(j);
        FieldMatrix acc = FieldMatrix::Zero(backend.support_size(), modes);
        for (long r = 0; r < s; ++r) {
            const AdaptedField& sample = v.samples[static_cast<std::size_t>(j * s + r)];
            if (sample.index != j * s + r || sample.time < t0 - slack || sample.time > v.sample_time(j, r) + slack)
                throw StructuralError("project_Ptau: sample " + std::to_string(j * s + r) +
                                      " is not aligned with its sub-interval");
            if (sample.values.rows() != backend.support_size() || sample.values.cols() != modes)
                throw StructuralError("project_Ptau: sample shape mismatch");
            if (sample.time - t0 <= slack)
                acc += sample.values;
            else
                acc += backend.expect(t0, sample.time, sample.values);
        }
        out[j].values = acc / static_cast<double>(s);
    }
    return out;
}

FineSampledProcess sample_midpoints(const StochasticBackend& backend, const TimeGrid& grid, long substeps,
                                    const MarkovFunction& f) {
    if (substeps < 1) throw StructuralError("sample_midpoints: substeps must be positive");
    FineSampledProcess out{grid, substeps, {}};
    out.samples.reserve(static_cast<std::size_t>(grid.steps() * substeps));
    for (long j = 0; j < grid.steps(); ++j) {
        for (long r = 0; r < substeps; ++r) {
            const double t = out.sample_time(j, r);
            const Eigen::VectorXd x = backend.coordinates(t);
            FieldMatrix values;
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const Eigen::RowVectorXd row = f(t, x[i]);
                if (i == 0) values.resize(x.size(), row.size());
                values.row(i) = row;
            }
            out.samples.push_back({j * substeps + r, t, std::move(values)});
        }
    }
    return out;
}

PythagorasParts pythagoras_check(const StochasticBackend& backend, const TimeGrid& grid, long j,
                                 const AdaptedField& v) {
    check_step_field(grid, j, v, "pythagoras_check");
    const double t0 = grid.node(j);
    const double t1 = grid.node(j + 1);
    const FieldMatrix lifted = backend.lift(t0, t1, v.values);
    FieldMatrix coefficient = backend.broadcast(t0, t1, backend.ito(t0, t1, v.values));
    coefficient.array().colwise() *= backend.increments(t0, t1).array();
    const Eigen::VectorXd joint = backend.joint_weights(t0, t1, backend.weights(t0));
    const FieldMatrix remainder = lifted - coefficient;
    return {StochasticBackend::weighted_inner(joint, remainder, remainder),
            StochasticBackend::weighted_inner(joint, coefficient, coefficient),
            StochasticBackend::weighted_inner(joint, lifted, lifted)};
}

BranchStatistic branch_statistic(const StochasticBackend& backend, const TimeGrid& grid, long j,
                                 const Eigen::VectorXd& values) {
    const double t0 = grid.node(j);
    const Eigen::VectorXd joint = backend.joint_weights(t0, grid.node(j + 1), backend.weights(t0));
    if (joint.size() != values.size()) throw StructuralError("branch_statistic: length mismatch");
    const double total = joint.sum();
    const double mean = joint.dot(values) / total;
    const double variance = joint.dot((values.array() - mean).square().matrix()) / total;
    const double effective = total * total / joint.squaredNorm();
    return {mean, std::sqrt(variance / effective)};
}

}  // namespace bsee
