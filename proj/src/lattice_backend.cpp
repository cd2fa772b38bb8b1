#include "bsee/lattice_backend.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsee/errors.hpp"

namespace bsee {

Interpolation parse_interpolation(const std::string& name) {
    if (name == "linear") return Interpolation::linear;
    if (name == "cubic") return Interpolation::cubic;
    throw ConfigError("unknown interpolation '" + name + "' (expected linear or cubic)");
}

std::string to_string(Interpolation kind) { return kind == Interpolation::linear ? "linear" : "cubic"; }

LatticeBackend::LatticeBackend(LatticeOptions options) : options_(options) {
    if (options_.nodes < 5 || options_.nodes % 2 == 0)
        throw DomainError("LatticeBackend: node count must be odd and at least 5");
    if (!(options_.extent > 0.0)) throw DomainError("LatticeBackend: extent must be positive");
    if (!(options_.horizon > 0.0)) throw DomainError("LatticeBackend: horizon must be positive");
    hermite_ = gauss_hermite(options_.gh_order);
    const double half_width = options_.extent * std::sqrt(options_.horizon);
    spacing_ = 2.0 * half_width / static_cast<double>(options_.nodes - 1);
    grid_.resize(options_.nodes);
    for (Eigen::Index i = 0; i < options_.nodes; ++i)
        grid_[i] = static_cast<double>(i - center()) * spacing_;
}

Eigen::VectorXd LatticeBackend::coordinates(double) const { return grid_; }

Eigen::VectorXd LatticeBackend::weights(double t) const {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(options_.nodes);
    if (t <= 1e-14 * options_.horizon) {
        w[center()] = 1.0;
        return w;
    }
    w = (-grid_.array().square() / (2.0 * t)).exp().matrix();
    return w / w.sum();
}

LatticeBackend::Stencil LatticeBackend::stencil_at(double y) const {
    const Eigen::Index n = options_.nodes;
    const double lo = grid_[0];
    const double hi = grid_[n - 1];
    y = std::clamp(y, lo, hi);
    const double u = (y - lo) / spacing_;
    Eigen::Index a = static_cast<Eigen::Index>(std::floor(u));
    a = std::clamp<Eigen::Index>(a, 0, n - 2);
    Stencil s;
    if (options_.interpolation == Interpolation::linear) {
        const double frac = u - static_cast<double>(a);
        s.first = a;
        s.width = 2;
        s.w[0] = 1.0 - frac;
        s.w[1] = frac;
        return s;
    }
    const Eigen::Index b = std::clamp<Eigen::Index>(a - 1, 0, n - 4);
    const double local = u - static_cast<double>(b);
    s.first = b;
    s.width = 4;
    for (int q = 0; q < 4; ++q) {
        double l = 1.0;
        for (int r = 0; r < 4; ++r)
            if (r != q) l *= (local - r) / static_cast<double>(q - r);
        s.w[q] = l;
    }
    return s;
}

Eigen::RowVectorXd LatticeBackend::interpolate(const FieldMatrix& field, double y) const {
    check_rows(field, options_.nodes, "interpolate");
    const Stencil s = stencil_at(y);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(field.cols());
    for (int q = 0; q < s.width; ++q) out += s.w[q] * field.row(s.first + q);
    return out;
}

std::vector<LatticeBackend::Stencil> LatticeBackend::branch_stencils(double dt) const {
    const Eigen::Index n = options_.nodes;
    const Eigen::Index k = hermite_.size();
    const double scale = std::sqrt(dt);
    std::vector<Stencil> out(static_cast<std::size_t>(n * k));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index b = 0; b < k; ++b)
            out[static_cast<std::size_t>(i * k + b)] = stencil_at(grid_[i] + scale * hermite_.nodes[b]);
    return out;
}

void LatticeBackend::check_step(double t0, double t1) const {
    if (!(t1 > t0)) throw DomainError("lattice step requires t1 > t0");
}

void LatticeBackend::check_rows(const FieldMatrix& m, Eigen::Index rows, const char* what) const {
    if (m.rows() != rows)
        throw StructuralError(std::string("lattice ") + what + ": expected " + std::to_string(rows) + " rows, got " +
                              std::to_string(m.rows()));
}

std::vector<Eigen::VectorXd> LatticeBackend::transport_measures(const TimeGrid& grid) const {
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(grid.steps() + 1));
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(options_.nodes);
    pi[center()] = 1.0;
    out.push_back(pi);
    for (long j = 0; j < grid.steps(); ++j) {
        pi = transport(grid.node(j + 1) - grid.node(j), pi);
        out.push_back(pi);
    }
    return out;
}

Eigen::VectorXd LatticeBackend::transport(double dt, const Eigen::VectorXd& measure) const {
    if (!(dt > 0.0)) throw DomainError("transport: step must be positive");
    const auto stencils = branch_stencils(dt);
    const Eigen::Index k = hermite_.size();
    Eigen::VectorXd next = Eigen::VectorXd::Zero(options_.nodes);
    for (Eigen::Index i = 0; i < options_.nodes; ++i) {
        if (measure[i] == 0.0) continue;
        for (Eigen::Index b = 0; b < k; ++b) {
            const Stencil& s = stencils[static_cast<std::size_t>(i * k + b)];
            const double mass = measure[i] * hermite_.weights[b];
            for (int q = 0; q < s.width; ++q) next[s.first + q] += mass * s.w[q];
        }
    }
    return next;
}

Eigen::Index LatticeBackend::branch_size(double, double) const { return options_.nodes * hermite_.size(); }

FieldMatrix LatticeBackend::lift(double t0, double t1, const FieldMatrix& next) const {
    check_step(t0, t1);
    check_rows(next, options_.nodes, "lift");
    const auto stencils = branch_stencils(t1 - t0);
    FieldMatrix out(static_cast<Eigen::Index>(stencils.size()), next.cols());
    for (std::size_t r = 0; r < stencils.size(); ++r) {
        const Stencil& s = stencils[r];
        auto row = out.row(static_cast<Eigen::Index>(r));
        row.noalias() = s.w[0] * next.row(s.first);
        for (int q = 1; q < s.width; ++q) row.noalias() += s.w[q] * next.row(s.first + q);
    }
    return out;
}

FieldMatrix LatticeBackend::broadcast(double t0, double t1, const FieldMatrix& current) const {
    check_step(t0, t1);
    check_rows(current, options_.nodes, "broadcast");
    const Eigen::Index k = hermite_.size();
    FieldMatrix out(options_.nodes * k, current.cols());
    for (Eigen::Index i = 0; i < options_.nodes; ++i)
        for (Eigen::Index b = 0; b < k; ++b) out.row(i * k + b) = current.row(i);
    return out;
}

Eigen::VectorXd LatticeBackend::increments(double t0, double t1) const {
    check_step(t0, t1);
    const Eigen::Index k = hermite_.size();
    const double scale = std::sqrt(t1 - t0);
    Eigen::VectorXd out(options_.nodes * k);
    for (Eigen::Index i = 0; i < options_.nodes; ++i) out.segment(i * k, k) = scale * hermite_.nodes;
    return out;
}

Eigen::VectorXd LatticeBackend::branch_coordinates(double t0, double t1) const {
    check_step(t0, t1);
    const Eigen::Index k = hermite_.size();
    Eigen::VectorXd out(options_.nodes * k);
    for (Eigen::Index i = 0; i < options_.nodes; ++i) out.segment(i * k, k).setConstant(grid_[i]);
    return out;
}

FieldMatrix LatticeBackend::reduce(double t0, double t1, const FieldMatrix& branch) const {
    check_step(t0, t1);
    const Eigen::Index k = hermite_.size();
    check_rows(branch, options_.nodes * k, "reduce");
    FieldMatrix out(options_.nodes, branch.cols());
    for (Eigen::Index i = 0; i < options_.nodes; ++i) {
        auto row = out.row(i);
        row.noalias() = hermite_.weights[0] * branch.row(i * k);
        for (Eigen::Index b = 1; b < k; ++b) row.noalias() += hermite_.weights[b] * branch.row(i * k + b);
    }
    return out;
}

Eigen::VectorXd LatticeBackend::joint_weights(double t0, double t1, const Eigen::VectorXd& outer) const {
    check_step(t0, t1);
    if (outer.size() != options_.nodes) throw StructuralError("joint_weights: measure has wrong length");
    const Eigen::Index k = hermite_.size();
    Eigen::VectorXd out(options_.nodes * k);
    for (Eigen::Index i = 0; i < options_.nodes; ++i) out.segment(i * k, k) = outer[i] * hermite_.weights;
    return out;
}

FieldMatrix LatticeBackend::push(double t0, double t1, const FieldMatrix& branch, const Eigen::VectorXd& measure0,
                                 const Eigen::VectorXd& measure1) const {
    check_step(t0, t1);
    const Eigen::Index k = hermite_.size();
    check_rows(branch, options_.nodes * k, "push");
    if (measure0.size() != options_.nodes || measure1.size() != options_.nodes)
        throw StructuralError("push: measure has wrong length");
    const auto stencils = branch_stencils(t1 - t0);
    FieldMatrix out = FieldMatrix::Zero(options_.nodes, branch.cols());
    for (Eigen::Index i = 0; i < options_.nodes; ++i) {
        if (measure0[i] == 0.0) continue;
        for (Eigen::Index b = 0; b < k; ++b) {
            const Eigen::Index r = i * k + b;
            const Stencil& s = stencils[static_cast<std::size_t>(r)];
            const double mass = measure0[i] * hermite_.weights[b];
            for (int q = 0; q < s.width; ++q) out.row(s.first + q).noalias() += (mass * s.w[q]) * branch.row(r);
        }
    }
    for (Eigen::Index i = 0; i < options_.nodes; ++i) {
        if (std::abs(measure1[i]) > std::numeric_limits<double>::min())
            out.row(i) /= measure1[i];
        else
            out.row(i).setZero();
    }
    return out;
}

double LatticeBackend::cross_moment(double ta, const FieldMatrix& a, double tb, const FieldMatrix& b) const {
    if (ta > tb) return cross_moment(tb, b, ta, a);
    check_rows(a, options_.nodes, "cross_moment");
    check_rows(b, options_.nodes, "cross_moment");
    const Eigen::VectorXd w = weights(ta);
    if (tb - ta <= 1e-14 * options_.horizon) return weighted_inner(w, a, b);
    return weighted_inner(w, a, expect(ta, tb, b));
}

}  // namespace bsee
