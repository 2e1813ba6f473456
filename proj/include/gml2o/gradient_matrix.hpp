#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gml2o {

/// M x N row-major stack of per-objective gradients: row i is the
/// gradient (or averaged sample gradient) of objective i.
class GradientMatrix {
public:
    GradientMatrix() = default;
    GradientMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    GradientMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static GradientMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
    double& at(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    /// Throws ShapeError unless M >= 2, N >= 1 and every entry is finite.
    void validate() const;

    /// Frobenius norm.
    double norm() const;

    GradientMatrix& operator+=(const GradientMatrix& other);
    GradientMatrix& operator*=(double factor) noexcept;

    friend bool operator==(const GradientMatrix&, const GradientMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace gml2o
