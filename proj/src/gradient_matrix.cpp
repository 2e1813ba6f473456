#include "gml2o/gradient_matrix.hpp"

#include <cmath>
#include <string>

#include "gml2o/errors.hpp"
#include "gml2o/tensor.hpp"

namespace gml2o {

GradientMatrix::GradientMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("gradient matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) + " given " +
                         std::to_string(data_.size()) + " entries");
    }
}

GradientMatrix GradientMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    const std::size_t cols = rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
        if (r.size() != cols) throw ShapeError("gradient matrix rows have different lengths");
        data.insert(data.end(), r.begin(), r.end());
    }
    return GradientMatrix(rows.size(), cols, std::move(data));
}

void GradientMatrix::validate() const {
    if (rows_ < 2) throw ShapeError("gradient matrix needs at least 2 objectives, got " + std::to_string(rows_));
    if (cols_ < 1) throw ShapeError("gradient matrix needs at least 1 column");
    if (!all_finite(data_)) throw ShapeError("gradient matrix contains non-finite entries");
}

double GradientMatrix::norm() const { return gml2o::norm(data_); }

GradientMatrix& GradientMatrix::operator+=(const GradientMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ShapeError("gradient matrix += shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

GradientMatrix& GradientMatrix::operator*=(double factor) noexcept {
    for (double& v : data_) v *= factor;
    return *this;
}

}  // namespace gml2o
