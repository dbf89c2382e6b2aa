#pragma once

#include <cstdint>
#include <vector>

#include "commdrop/errors.hpp"

namespace commdrop {

// Dense row-major matrix of doubles. Kept dependency-free so the public API
// does not force Eigen on consumers; numerical kernels map into Eigen
// internally.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // rows * cols, row-major

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), data(size_t(r) * c, fill) {
        if (r < 0 || c < 0) throw ContractError("matrix dimensions must be non-negative");
    }

    double& operator()(int r, int c) { return data[size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return data[size_t(r) * cols + c]; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

struct BoolMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> data;

    BoolMatrix() = default;
    BoolMatrix(int r, int c, bool fill = false)
        : rows(r), cols(c), data(size_t(r) * c, fill ? 1 : 0) {
        if (r < 0 || c < 0) throw ContractError("matrix dimensions must be non-negative");
    }

    void set(int r, int c, bool v) { data[size_t(r) * cols + c] = v ? 1 : 0; }
    bool operator()(int r, int c) const { return data[size_t(r) * cols + c] != 0; }

    int count() const {
        int n = 0;
        for (uint8_t v : data) n += v != 0;
        return n;
    }
};

} // namespace commdrop
