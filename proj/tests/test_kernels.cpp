#include <doctest.h>

#include "memo/kernels.hpp"
#include "memo/rng.hpp"

using namespace memo;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (double& v : m.v) v = rng.uniform(-2.0, 2.0);
    return m;
}

bool bit_equal(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a.v[i] != b.v[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("omp kernels are bit-identical to the serial reference") {
    Rng rng(123);
    // shapes straddle the parallel-dispatch threshold
    const int shapes[][3] = {{1, 1, 1}, {3, 2, 5}, {17, 9, 4}, {64, 2, 256},
                             {64, 256, 256}, {130, 300, 70}, {405, 512, 2}};
    for (const auto& s : shapes) {
        const int B = s[0], in = s[1], out = s[2];
        const Mat x = random_mat(B, in, rng);
        const Mat w = random_mat(in, out, rng);
        std::vector<double> b(static_cast<size_t>(out));
        for (auto& v : b) v = rng.uniform(-1.0, 1.0);

        Mat y1, y2;
        kernels::linear_forward(x, w, b, y1);
        kernels::serial::linear_forward(x, w, b, y2);
        CHECK(bit_equal(y1, y2));

        const Mat dy = random_mat(B, out, rng);
        Mat dx1, dx2;
        kernels::linear_backward_input(dy, w, dx1);
        kernels::serial::linear_backward_input(dy, w, dx2);
        CHECK(bit_equal(dx1, dx2));

        Mat dw1, dw2;
        std::vector<double> db1, db2;
        kernels::linear_backward_params(x, dy, dw1, db1);
        kernels::serial::linear_backward_params(x, dy, dw2, db2);
        CHECK(bit_equal(dw1, dw2));
        CHECK(db1 == db2);

        Mat r1, r2;
        kernels::relu(y1, r1);
        kernels::serial::relu(y2, r2);
        CHECK(bit_equal(r1, r2));

        Mat rb1, rb2;
        kernels::relu_backward(r1, dy, rb1);
        kernels::serial::relu_backward(r2, dy, rb2);
        CHECK(bit_equal(rb1, rb2));

        Mat p1, p2;
        kernels::softmax_rows(y1, p1);
        kernels::serial::softmax_rows(y2, p2);
        CHECK(bit_equal(p1, p2));
    }
}

TEST_CASE("softmax rows are probability distributions") {
    Rng rng(7);
    const Mat z = random_mat(50, 11, rng);
    Mat p;
    kernels::softmax_rows(z, p);
    for (int i = 0; i < p.rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < p.cols; ++j) {
            CHECK(p.at(i, j) >= 0.0);
            sum += p.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("softmax handles large logits without overflow") {
    Mat z(1, 3);
    z.at(0, 0) = 1e4;
    z.at(0, 1) = -1e4;
    z.at(0, 2) = 9999.0;
    Mat p;
    kernels::softmax_rows(z, p);
    CHECK(std::isfinite(p.at(0, 0)));
    CHECK(p.at(0, 0) > 0.7);
    CHECK(p.at(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
}
