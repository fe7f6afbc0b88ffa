#pragma once

#include <cstddef>

#include "memo/mat.hpp"

namespace memo::kernels {

// OpenMP-parallel kernels. Every kernel computes each output element on
// exactly one thread with a fixed inner-loop order, so results are
// bit-identical to the serial reference regardless of thread count.
// Inside an already-parallel region (the run scheduler) the inner
// `parallel for` does not nest and the loops just run on the calling thread.

// y = x * w + b (row-broadcast). x: B x in, w: in x out, b: out.
void linear_forward(const Mat& x, const Mat& w, const std::vector<double>& b, Mat& y);

// dx = dy * w^T
void linear_backward_input(const Mat& dy, const Mat& w, Mat& dx);

// dw = x^T * dy ; db = column sums of dy
void linear_backward_params(const Mat& x, const Mat& dy, Mat& dw, std::vector<double>& db);

// y = max(x, 0)
void relu(const Mat& x, Mat& y);

// dx = dy where the forward output was > 0, else 0
void relu_backward(const Mat& y_fwd, const Mat& dy, Mat& dx);

// row-wise softmax, numerically stabilised by the row max
void softmax_rows(const Mat& z, Mat& p);

// Serial reference implementations, kept for testing and benchmarking.
namespace serial {
void linear_forward(const Mat& x, const Mat& w, const std::vector<double>& b, Mat& y);
void linear_backward_input(const Mat& dy, const Mat& w, Mat& dx);
void linear_backward_params(const Mat& x, const Mat& dy, Mat& dw, std::vector<double>& db);
void relu(const Mat& x, Mat& y);
void relu_backward(const Mat& y_fwd, const Mat& dy, Mat& dx);
void softmax_rows(const Mat& z, Mat& p);
}  // namespace serial

}  // namespace memo::kernels
