#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace kgcn {

/// Row-major dense matrix of doubles. Also serves as the node-attribute
/// matrix (one row per node, one column per attribute).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
    }
};

/// Dense rank-3 tensor, row-major over (d0, d1, d2).
struct Tensor3 {
    std::size_t d0 = 0;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
        : d0(a), d1(b), d2(c), data(a * b * c, fill) {}

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * d1 + j) * d2 + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * d1 + j) * d2 + k];
    }

    bool same_shape(const Tensor3& o) const {
        return d0 == o.d0 && d1 == o.d1 && d2 == o.d2;
    }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.d0 == b.d0 && a.d1 == b.d1 && a.d2 == b.d2 && a.data == b.data;
    }
};

inline void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

}  // namespace kgcn
