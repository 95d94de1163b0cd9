#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace tweetstock {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// y = A x
inline void matvec(const Matrix& a, std::span<const double> x, std::span<double> y) {
    assert(x.size() == a.cols() && y.size() == a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

/// x += A^T y
inline void matvec_transpose_add(const Matrix& a, std::span<const double> y,
                                 std::span<double> x) {
    assert(y.size() == a.rows() && x.size() == a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const auto row = a.row(r);
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (std::size_t c = 0; c < a.cols(); ++c) x[c] += row[c] * yr;
    }
}

/// A += u v^T
inline void outer_add(Matrix& a, std::span<const double> u, std::span<const double> v) {
    assert(u.size() == a.rows() && v.size() == a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r);
        const double ur = u[r];
        if (ur == 0.0) continue;
        for (std::size_t c = 0; c < a.cols(); ++c) row[c] += ur * v[c];
    }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

/// y += s x
inline void axpy(double s, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

} // namespace tweetstock
