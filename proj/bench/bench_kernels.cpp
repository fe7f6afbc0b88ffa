// Compares the OpenMP kernels against the serial reference on the matrix
// shapes the training loop actually hits, plus one end-to-end training run.

#include <chrono>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "memo/kernels.hpp"
#include "memo/nn.hpp"
#include "memo/rng.hpp"

using namespace memo;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

Mat random_mat(int r, int c, Rng& rng) {
    Mat m(r, c);
    for (double& v : m.v) v = rng.uniform(-1.0, 1.0);
    return m;
}

template <typename F>
double time_ms(int reps, F&& f) {
    f();  // warm up
    const double t0 = now_ms();
    for (int i = 0; i < reps; ++i) f();
    return (now_ms() - t0) / reps;
}

void bench_shape(int b, int in, int out, int reps) {
    Rng rng(42);
    const Mat x = random_mat(b, in, rng);
    const Mat w = random_mat(in, out, rng);
    std::vector<double> bias(size_t(out), 0.1);
    Mat y;

    const double serial =
        time_ms(reps, [&] { kernels::serial::linear_forward(x, w, bias, y); });
    const double par = time_ms(reps, [&] { kernels::linear_forward(x, w, bias, y); });
    const double gflops = 2.0 * b * in * out / 1e6;  // per call, in MFLOP
    std::printf("forward %4dx%4dx%4d  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms (%6.2f GF/s)  speedup %.2fx\n",
                b, in, out, serial, gflops / serial, par, gflops / par, serial / par);
}

}  // namespace

int main() {
    std::printf("omp max threads: %d\n", omp_get_max_threads());

    bench_shape(64, 2, 256, 200);
    bench_shape(64, 256, 256, 200);
    bench_shape(405, 256, 256, 100);
    bench_shape(405, 512, 512, 50);

    // end-to-end: one ladder-sized training run
    nn::ModelSpec spec;
    spec.input_dim = 2;
    spec.num_classes = 2;
    spec.widths = {256, 256};
    spec.init_seed = 7;

    nn::OptimizerConfig opt;
    opt.peak_lr = 0.05;
    opt.warmup_epochs = 5;
    opt.schedule = nn::Schedule::cosine;
    opt.momentum = 0.9;
    opt.nesterov = true;
    opt.batch_size = 64;
    opt.epochs = 40;

    Rng rng(3);
    nn::TrainData data;
    data.x = random_mat(284, 2, rng);
    data.labels.resize(284);
    for (auto& l : data.labels) l = int(rng.index(2));
    data.trace_x = random_mat(405, 2, rng);
    data.trace_labels.resize(405);
    for (auto& l : data.trace_labels) l = int(rng.index(2));

    const double t0 = now_ms();
    nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 11);
    std::printf("train 2-[256,256]-2, N=284, 40 epochs + trace: %.1f ms\n", now_ms() - t0);
    return 0;
}
