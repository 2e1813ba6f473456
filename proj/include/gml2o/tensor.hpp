#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gml2o {

/// Dense row-major array of doubles with rank 0, 1 or 2.
///
/// Rank 0 is a scalar (shape `{}`, one element). Vectors have shape `{n}`
/// and matrices `{rows, cols}`. The element count always equals the
/// product of the shape.
class Tensor {
public:
    using Shape = std::vector<std::size_t>;

    Tensor() : data_(1, 0.0) {}
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double value);
    static Tensor scalar(double value);
    static Tensor vector(std::vector<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    static Tensor identity(std::size_t n);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    /// Leading dimension (1 for scalars).
    std::size_t rows() const noexcept { return shape_.empty() ? 1 : shape_[0]; }
    /// Trailing dimension of a matrix (1 for vectors and scalars).
    std::size_t cols() const noexcept { return shape_.size() == 2 ? shape_[1] : 1; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    /// Value of a single-element tensor.
    double item() const;

    bool all_finite() const noexcept;
    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double factor) noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::string shape_string(const Tensor::Shape& shape);

/// C = A * B. A is (m x k); B is (k x n) or a length-k vector.
Tensor matmul(const Tensor& a, const Tensor& b);
/// C = A^T * B for matrices A (k x m) and B (k x n).
Tensor matmul_tn(const Tensor& a, const Tensor& b);
/// C = A * B^T for matrices A (m x k) and B (n x k).
Tensor matmul_nt(const Tensor& a, const Tensor& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);
bool all_finite(std::span<const double> a) noexcept;

}  // namespace gml2o
