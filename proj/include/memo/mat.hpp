#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace memo {

// Dense row-major matrix of doubles. Value semantics, no views.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(size_t(r) * size_t(c), 0.0) {}

    double* row(int i) { return v.data() + size_t(i) * cols; }
    const double* row(int i) const { return v.data() + size_t(i) * cols; }

    double& at(int i, int j) { return v[size_t(i) * cols + j]; }
    double at(int i, int j) const { return v[size_t(i) * cols + j]; }

    size_t size() const { return v.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

}  // namespace memo
