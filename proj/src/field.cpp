#include "bsee/field.hpp"

#include <string>

#include "bsee/errors.hpp"

namespace bsee {

PiecewiseProcess::PiecewiseProcess(TimeGrid grid, std::vector<AdaptedField> fields)
    : grid_(grid), fields_(std::move(fields)) {
    if (static_cast<long>(fields_.size()) != grid_.steps() + 1)
        throw StructuralError("PiecewiseProcess: expected " + std::to_string(grid_.steps() + 1) + " fields, got " +
                              std::to_string(fields_.size()));
    for (std::size_t j = 0; j < fields_.size(); ++j) {
        if (fields_[j].index != static_cast<long>(j))
            throw StructuralError("PiecewiseProcess: field " + std::to_string(j) + " carries time index " +
                                  std::to_string(fields_[j].index));
        if (fields_[j].values.rows() != fields_[0].values.rows() || fields_[j].values.cols() != fields_[0].values.cols())
            throw StructuralError("PiecewiseProcess: fields differ in shape");
    }
}

PiecewiseProcess PiecewiseProcess::zeros(const TimeGrid& grid, Eigen::Index support, Eigen::Index modes) {
    std::vector<AdaptedField> fields;
    fields.reserve(static_cast<std::size_t>(grid.steps() + 1));
    for (long j = 0; j <= grid.steps(); ++j)
        fields.push_back({j, grid.node(j), FieldMatrix::Zero(support, modes)});
    return PiecewiseProcess(grid, std::move(fields));
}

void PiecewiseProcess::check_compatible(const PiecewiseProcess& other) const {
    if (!(grid_ == other.grid_)) throw StructuralError("PiecewiseProcess: grids differ");
    if (support() != other.support() || modes() != other.modes())
        throw StructuralError("PiecewiseProcess: field shapes differ");
}

PiecewiseProcess& PiecewiseProcess::operator+=(const PiecewiseProcess& other) {
    check_compatible(other);
    for (std::size_t j = 0; j < fields_.size(); ++j) fields_[j].values += other.fields_[j].values;
    return *this;
}

PiecewiseProcess& PiecewiseProcess::operator-=(const PiecewiseProcess& other) {
    check_compatible(other);
    for (std::size_t j = 0; j < fields_.size(); ++j) fields_[j].values -= other.fields_[j].values;
    return *this;
}

PiecewiseProcess& PiecewiseProcess::operator*=(double scale) {
    for (auto& f : fields_) f.values *= scale;
    return *this;
}

}  // namespace bsee
