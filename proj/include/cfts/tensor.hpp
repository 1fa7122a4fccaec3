#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "cfts/errors.hpp"

namespace cfts {

// Dense row-major array of doubles.  Rank is arbitrary but nearly all ops in
// the toolkit work on rank-2 (matrix), rank-1 (vector) or rank-0 (scalar)
// views.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> s, double fill = 0.0) : shape(std::move(s)) {
        data.assign(numel_of(shape), fill);
    }
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel_of(shape)) throw ShapeError("tensor data/shape mismatch");
    }

    static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
    static Tensor zeros(int r, int c) { return Tensor({r, c}); }
    static Tensor row_vector(std::vector<double> d) {
        const int n = static_cast<int>(d.size());
        return Tensor({1, n}, std::move(d));
    }

    static std::size_t numel_of(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1 && shape.empty(); }
    int rank() const { return static_cast<int>(shape.size()); }

    int rows() const {
        if (rank() != 2) throw ShapeError("rows() on non-matrix");
        return shape[0];
    }
    int cols() const {
        if (rank() != 2) throw ShapeError("cols() on non-matrix");
        return shape[1];
    }

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * shape[1] + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

}  // namespace cfts
