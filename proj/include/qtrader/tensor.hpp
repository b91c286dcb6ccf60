#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qtrader {

// Dense real tensor, at most rank 2. Vectors are stored as (n, 1) columns.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor vec(int n) { return Tensor(n, 1); }
    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.v[0] = x;
        return t;
    }
    static Tensor from(std::vector<double> values) {
        Tensor t;
        t.rows = static_cast<int>(values.size());
        t.cols = 1;
        t.v = std::move(values);
        return t;
    }

    int numel() const { return rows * cols; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double& operator[](int i) { return v[i]; }
    double operator[](int i) const { return v[i]; }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

}  // namespace qtrader
