#include "memo/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include <omp.h>

namespace memo::kernels {

namespace {
// Work below this is cheaper than spawning a team; and with a single
// hardware thread the region is pure overhead.
constexpr size_t kMinWork = 16 * 1024;
const bool kHaveThreads = omp_get_max_threads() > 1;
inline bool par(size_t work) { return kHaveThreads && work > kMinWork; }
}  // namespace

void linear_forward(const Mat& x, const Mat& w, const std::vector<double>& b, Mat& y) {
    assert(x.cols == w.rows && int(b.size()) == w.cols);
    y = Mat(x.rows, w.cols);
    const int B = x.rows, in = x.cols, out = w.cols;
    const size_t work = size_t(B) * in * out;
#pragma omp parallel for schedule(static) if (par(work))
    for (int i = 0; i < B; ++i) {
        double* yi = y.row(i);
        const double* xi = x.row(i);
        for (int j = 0; j < out; ++j) yi[j] = b[j];
        for (int k = 0; k < in; ++k) {
            const double xv = xi[k];
            const double* wk = w.row(k);
            for (int j = 0; j < out; ++j) yi[j] += xv * wk[j];
        }
    }
}

void linear_backward_input(const Mat& dy, const Mat& w, Mat& dx) {
    assert(dy.cols == w.cols);
    dx = Mat(dy.rows, w.rows);
    const int B = dy.rows, out = dy.cols, in = w.rows;
    const size_t work = size_t(B) * in * out;
#pragma omp parallel for schedule(static) if (par(work))
    for (int i = 0; i < B; ++i) {
        double* dxi = dx.row(i);
        const double* dyi = dy.row(i);
        for (int k = 0; k < in; ++k) {
            const double* wk = w.row(k);
            double acc = 0.0;
            for (int j = 0; j < out; ++j) acc += dyi[j] * wk[j];
            dxi[k] = acc;
        }
    }
}

void linear_backward_params(const Mat& x, const Mat& dy, Mat& dw, std::vector<double>& db) {
    assert(x.rows == dy.rows);
    const int B = x.rows, in = x.cols, out = dy.cols;
    dw = Mat(in, out);
    db.assign(size_t(out), 0.0);
    const size_t work = size_t(B) * in * out;
#pragma omp parallel for schedule(static) if (par(work))
    for (int k = 0; k < in; ++k) {
        double* dwk = dw.row(k);
        for (int i = 0; i < B; ++i) {
            const double xv = x.at(i, k);
            const double* dyi = dy.row(i);
            for (int j = 0; j < out; ++j) dwk[j] += xv * dyi[j];
        }
    }
    for (int i = 0; i < B; ++i) {
        const double* dyi = dy.row(i);
        for (int j = 0; j < out; ++j) db[j] += dyi[j];
    }
}

void relu(const Mat& x, Mat& y) {
    y = Mat(x.rows, x.cols);
    const size_t n = x.size();
#pragma omp parallel for schedule(static) if (par(n))
    for (long long i = 0; i < (long long)n; ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
}

void relu_backward(const Mat& y_fwd, const Mat& dy, Mat& dx) {
    assert(y_fwd.same_shape(dy));
    dx = Mat(dy.rows, dy.cols);
    const size_t n = dy.size();
#pragma omp parallel for schedule(static) if (par(n))
    for (long long i = 0; i < (long long)n; ++i) dx.v[i] = y_fwd.v[i] > 0.0 ? dy.v[i] : 0.0;
}

void softmax_rows(const Mat& z, Mat& p) {
    p = Mat(z.rows, z.cols);
    const int B = z.rows, C = z.cols;
#pragma omp parallel for schedule(static) if (par(size_t(B) * C))
    for (int i = 0; i < B; ++i) {
        const double* zi = z.row(i);
        double* pi = p.row(i);
        double m = zi[0];
        for (int j = 1; j < C; ++j) m = std::max(m, zi[j]);
        double s = 0.0;
        for (int j = 0; j < C; ++j) {
            pi[j] = std::exp(zi[j] - m);
            s += pi[j];
        }
        for (int j = 0; j < C; ++j) pi[j] /= s;
    }
}

namespace serial {

void linear_forward(const Mat& x, const Mat& w, const std::vector<double>& b, Mat& y) {
    assert(x.cols == w.rows && int(b.size()) == w.cols);
    y = Mat(x.rows, w.cols);
    for (int i = 0; i < x.rows; ++i) {
        double* yi = y.row(i);
        for (int j = 0; j < w.cols; ++j) yi[j] = b[j];
        for (int k = 0; k < x.cols; ++k) {
            const double xv = x.at(i, k);
            const double* wk = w.row(k);
            for (int j = 0; j < w.cols; ++j) yi[j] += xv * wk[j];
        }
    }
}

void linear_backward_input(const Mat& dy, const Mat& w, Mat& dx) {
    assert(dy.cols == w.cols);
    dx = Mat(dy.rows, w.rows);
    for (int i = 0; i < dy.rows; ++i) {
        for (int k = 0; k < w.rows; ++k) {
            double acc = 0.0;
            for (int j = 0; j < w.cols; ++j) acc += dy.at(i, j) * w.at(k, j);
            dx.at(i, k) = acc;
        }
    }
}

void linear_backward_params(const Mat& x, const Mat& dy, Mat& dw, std::vector<double>& db) {
    assert(x.rows == dy.rows);
    dw = Mat(x.cols, dy.cols);
    db.assign(size_t(dy.cols), 0.0);
    for (int k = 0; k < x.cols; ++k)
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < dy.cols; ++j) dw.at(k, j) += x.at(i, k) * dy.at(i, j);
    for (int i = 0; i < dy.rows; ++i)
        for (int j = 0; j < dy.cols; ++j) db[j] += dy.at(i, j);
}

void relu(const Mat& x, Mat& y) {
    y = Mat(x.rows, x.cols);
    for (size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
}

void relu_backward(const Mat& y_fwd, const Mat& dy, Mat& dx) {
    assert(y_fwd.same_shape(dy));
    dx = Mat(dy.rows, dy.cols);
    for (size_t i = 0; i < dy.size(); ++i) dx.v[i] = y_fwd.v[i] > 0.0 ? dy.v[i] : 0.0;
}

void softmax_rows(const Mat& z, Mat& p) {
    p = Mat(z.rows, z.cols);
    for (int i = 0; i < z.rows; ++i) {
        double m = z.at(i, 0);
        for (int j = 1; j < z.cols; ++j) m = std::max(m, z.at(i, j));
        double s = 0.0;
        for (int j = 0; j < z.cols; ++j) {
            p.at(i, j) = std::exp(z.at(i, j) - m);
            s += p.at(i, j);
        }
        for (int j = 0; j < z.cols; ++j) p.at(i, j) /= s;
    }
}

}  // namespace serial

}  // namespace memo::kernels
