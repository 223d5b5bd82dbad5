#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace physgrid {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Heap storage aligned for the widest SIMD registers. Eigen picks its
/// reduction order from pointer alignment, so a fixed alignment keeps results
/// bit-reproducible from one allocation to the next.
using Buffer = std::vector<double, Eigen::aligned_allocator<double>>;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

/// Dense row-major array of doubles.
///
/// Rank 0 is a scalar, rank 1 a row vector, rank 2 a matrix. Higher ranks are
/// storable but only viewed as matrices (first extent x product of the rest).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);
    Tensor(Shape shape, Buffer data);

    static Tensor scalar(double value);
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    // Matrix view extents.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    Buffer& storage() { return data_; }
    const Buffer& storage() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    /// Value of a single-element tensor.
    double item() const;

    MatrixMap mat() { return MatrixMap(data_.data(), rows(), cols()); }
    ConstMatrixMap mat() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

    bool all_finite() const;
    bool bit_equal(const Tensor& other) const;

private:
    Shape shape_;
    Buffer data_;
};

}  // namespace physgrid
