#include "bsee/backend.hpp"

#include "bsee/errors.hpp"

namespace bsee {

FieldMatrix StochasticBackend::expect(double t0, double t1, const FieldMatrix& next) const {
    return reduce(t0, t1, lift(t0, t1, next));
}

FieldMatrix StochasticBackend::ito(double t0, double t1, const FieldMatrix& next) const {
    FieldMatrix branch = lift(t0, t1, next);
    branch.array().colwise() *= increments(t0, t1).array();
    FieldMatrix out = reduce(t0, t1, branch);
    out /= (t1 - t0);
    return out;
}

double StochasticBackend::mean_square(double t, const FieldMatrix& v) const {
    return weighted_inner(weights(t), v, v);
}

double StochasticBackend::weighted_inner(const Eigen::VectorXd& measure, const FieldMatrix& a, const FieldMatrix& b) {
    if (a.rows() != measure.size() || b.rows() != measure.size() || a.cols() != b.cols())
        throw StructuralError("weighted_inner: shape mismatch");
    return measure.dot(a.cwiseProduct(b).rowwise().sum());
}

}  // namespace bsee
