#include "bsee/driver.hpp"

#include <algorithm>
#include <random>

#include "bsee/errors.hpp"

namespace bsee {

std::string to_string(ZDependence kind) {
    switch (kind) {
        case ZDependence::none: return "none";
        case ZDependence::affine: return "affine";
        case ZDependence::general: return "general";
    }
    return "unknown";
}

FieldMatrix Driver::operator()(double t, const FieldMatrix& p, const FieldMatrix& z, const Eigen::VectorXd& w) const {
    if (!f) return FieldMatrix::Zero(p.rows(), p.cols());
    FieldMatrix out = f(t, p, z, w);
    if (out.rows() != p.rows() || out.cols() != p.cols())
        throw StructuralError("driver '" + name + "' returned a field of the wrong shape");
    return out;
}

Driver Driver::zero() { return {}; }

Driver Driver::sine_cosine() {
    Driver d;
    d.name = "sine_cosine";
    d.f = [](double, const FieldMatrix& p, const FieldMatrix& z, const Eigen::VectorXd&) {
        FieldMatrix out = 0.5 * p.array().sin() + 0.5 * z.array().cos();
        return out;
    };
    d.lipschitz = 1.0;
    d.z_dependence = ZDependence::general;
    d.depends_on_p = true;
    return d;
}

Driver Driver::identity_in_z() {
    Driver d;
    d.name = "identity_in_z";
    d.f = [](double, const FieldMatrix&, const FieldMatrix& z, const Eigen::VectorXd&) { return z; };
    d.lipschitz = 1.0;
    d.z_dependence = ZDependence::affine;
    return d;
}

Driver Driver::forcing(std::string name, std::function<Eigen::RowVectorXd(double t, double w)> g) {
    Driver d;
    d.name = std::move(name);
    d.f = [g = std::move(g)](double t, const FieldMatrix& p, const FieldMatrix&, const Eigen::VectorXd& w) {
        FieldMatrix out(p.rows(), p.cols());
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const Eigen::RowVectorXd row = g(t, w[r]);
            if (row.size() != p.cols()) throw StructuralError("forcing returned the wrong number of modes");
            out.row(r) = row;
        }
        return out;
    };
    return d;
}

double lipschitz_spot_check(const Driver& driver, Eigen::Index modes, int samples, std::uint64_t seed,
                            double horizon) {
    if (driver.is_zero()) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, horizon);
    const auto draw = [&](double scale) {
        FieldMatrix m(1, modes);
        for (Eigen::Index k = 0; k < modes; ++k) m(0, k) = scale * normal(rng);
        return m;
    };
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double t = uniform(rng);
        const Eigen::VectorXd w = Eigen::VectorXd::Constant(1, normal(rng));
        const double scale = std::pow(10.0, (s % 5) - 2);
        const FieldMatrix p1 = draw(3.0), z1 = draw(3.0);
        const FieldMatrix p2 = p1 + draw(scale), z2 = z1 + draw(scale);
        const double gap = (p1 - p2).norm() + (z1 - z2).norm();
        const double diff = (driver(t, p1, z1, w) - driver(t, p2, z2, w)).norm();
        worst = std::max(worst, diff / gap);
    }
    return worst;
}

}  // namespace bsee
