#include <doctest.h>

#include <cmath>

#include "memo/nn.hpp"
#include "memo/rng.hpp"

using namespace memo;

namespace {

struct FlatParams {
    std::vector<double*> slots;

    explicit FlatParams(nn::Params& p) {
        for (auto& w : p.w)
            for (double& v : w.v) slots.push_back(&v);
        for (auto& b : p.b)
            for (double& v : b) slots.push_back(&v);
    }
};

Mat random_batch(int rows, int cols, Rng& rng) {
    Mat m(rows, cols);
    for (double& v : m.v) v = rng.uniform(-2.0, 2.0);
    return m;
}

// redraw batches whose hidden pre-activations sit within FD reach of a ReLU
// kink, where central differences are meaningless
bool near_kink(const nn::ModelSpec& spec, const nn::Params& params, const Mat& batch) {
    const Mat* cur = &batch;
    std::vector<Mat> hs;
    for (int l = 0; l < spec.depth(); ++l) {
        Mat pre(cur->rows, params.w[size_t(l)].cols);
        for (int i = 0; i < cur->rows; ++i)
            for (int j = 0; j < pre.cols; ++j) {
                double z = params.b[size_t(l)][size_t(j)];
                for (int k = 0; k < cur->cols; ++k)
                    z += cur->at(i, k) * params.w[size_t(l)].at(k, j);
                if (std::abs(z) < 1e-3) return true;
                pre.at(i, j) = z > 0.0 ? z : 0.0;
            }
        hs.push_back(std::move(pre));
        cur = &hs.back();
    }
    return false;
}

double max_grad_rel_error(const nn::ModelSpec& spec, const nn::LossSpec& loss_spec,
                          double weight_decay, uint64_t seed) {
    Rng rng(seed);
    nn::Params params = nn::init_params(spec);
    Mat batch = random_batch(16, spec.input_dim, rng);
    for (int tries = 0; near_kink(spec, params, batch) && tries < 20; ++tries)
        batch = random_batch(16, spec.input_dim, rng);

    std::vector<int> labels(16);
    for (auto& l : labels) l = int(rng.index(uint64_t(spec.num_classes)));
    Mat teacher;
    const Mat* teacher_ptr = nullptr;
    if (loss_spec.kind == nn::LossKind::distill) {
        teacher = random_batch(16, spec.num_classes, rng);
        teacher_ptr = &teacher;
    }

    nn::Params grads;
    nn::loss_and_grads(spec, params, batch, labels, loss_spec, teacher_ptr, weight_decay, grads);

    FlatParams flat(params);
    FlatParams flat_grads(grads);
    const double h = 1e-5;
    double worst = 0.0;
    for (size_t i = 0; i < flat.slots.size(); ++i) {
        const double orig = *flat.slots[i];
        nn::Params dummy;
        *flat.slots[i] = orig + h;
        const double up = nn::loss_and_grads(spec, params, batch, labels, loss_spec, teacher_ptr,
                                             weight_decay, dummy);
        *flat.slots[i] = orig - h;
        const double down = nn::loss_and_grads(spec, params, batch, labels, loss_spec,
                                               teacher_ptr, weight_decay, dummy);
        *flat.slots[i] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double an = *flat_grads.slots[i];
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
    }
    return worst;
}

nn::ModelSpec small_spec(uint64_t seed) {
    nn::ModelSpec spec;
    spec.input_dim = 4;
    spec.num_classes = 3;
    spec.widths = {8, 8};
    spec.init_seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("gradients match central finite differences") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        nn::LossSpec one_hot;
        CHECK(max_grad_rel_error(small_spec(seed), one_hot, 1e-4, seed) < 1e-4);

        nn::LossSpec distill;
        distill.kind = nn::LossKind::distill;
        distill.distill_weight = 0.7;
        distill.temperature = 3.0;
        CHECK(max_grad_rel_error(small_spec(seed + 100), distill, 1e-4, seed + 100) < 1e-4);
    }
}

TEST_CASE("zero-depth model is a plain linear map") {
    nn::ModelSpec spec;
    spec.input_dim = 3;
    spec.num_classes = 3;
    spec.init_seed = 5;
    nn::Params params = nn::init_params(spec);
    REQUIRE(params.layers() == 1);
    // identity-like weights: one-hot input selects a weight column
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) params.w[0].at(i, j) = i == j ? 1.0 : 0.25 * i - 0.5 * j;
    params.b[0] = {0.0, 0.0, 0.0};

    Mat x(1, 3);
    x.at(0, 1) = 1.0;  // selects row 1 of w
    const auto fwd = nn::forward(spec, params, x);
    CHECK(fwd.hidden.empty());
    for (int j = 0; j < 3; ++j) CHECK(fwd.logits.at(0, j) == params.w[0].at(1, j));
}

TEST_CASE("all-zero parameters give uniform softmax") {
    nn::ModelSpec spec = small_spec(1);
    nn::Params params = nn::init_params(spec);
    for (auto& w : params.w)
        for (double& v : w.v) v = 0.0;

    Rng rng(9);
    const Mat batch = random_batch(5, spec.input_dim, rng);
    const auto fwd = nn::forward(spec, params, batch);
    for (size_t i = 0; i < fwd.logits.size(); ++i) CHECK(fwd.logits.v[i] == 0.0);
}

TEST_CASE("forward is deterministic for a fixed seed") {
    nn::ModelSpec spec = small_spec(7);
    const nn::Params a = nn::init_params(spec);
    const nn::Params b = nn::init_params(spec);
    for (size_t l = 0; l < a.w.size(); ++l) {
        CHECK(a.w[l].v == b.w[l].v);
        CHECK(a.b[l] == b.b[l]);
    }
    Rng rng(3);
    const Mat batch = random_batch(4, spec.input_dim, rng);
    const auto f1 = nn::forward(spec, a, batch);
    const auto f2 = nn::forward(spec, b, batch);
    CHECK(f1.logits.v == f2.logits.v);
}

TEST_CASE("forward rejects dimension mismatch") {
    nn::ModelSpec spec = small_spec(2);
    const nn::Params params = nn::init_params(spec);
    Mat bad(2, spec.input_dim + 1);
    CHECK_THROWS_AS(nn::forward(spec, params, bad), nn::ConfigError);
}

TEST_CASE("distill loss with matching logits and w=1 is pure weight decay") {
    nn::ModelSpec spec = small_spec(3);
    const nn::Params params = nn::init_params(spec);
    Rng rng(4);
    const Mat batch = random_batch(6, spec.input_dim, rng);
    std::vector<int> labels(6, 0);

    const Mat student_logits = nn::forward(spec, params, batch).logits;
    nn::LossSpec loss_spec;
    loss_spec.kind = nn::LossKind::distill;
    loss_spec.distill_weight = 1.0;
    loss_spec.temperature = 3.0;

    nn::Params grads;
    const double with_wd = nn::loss_and_grads(spec, params, batch, labels, loss_spec,
                                              &student_logits, 1e-2, grads);
    double sq = 0.0;
    for (const auto& w : params.w)
        for (double v : w.v) sq += v * v;
    CHECK(with_wd == doctest::Approx(0.5 * 1e-2 * sq).epsilon(1e-12));

    const double without_wd = nn::loss_and_grads(spec, params, batch, labels, loss_spec,
                                                 &student_logits, 0.0, grads);
    CHECK(without_wd == 0.0);  // KL of identical distributions is exactly 0
}

TEST_CASE("distill loss with w=0 is bit-equal to the one-hot loss") {
    nn::ModelSpec spec = small_spec(11);
    const nn::Params params = nn::init_params(spec);
    Rng rng(12);
    const Mat batch = random_batch(9, spec.input_dim, rng);
    std::vector<int> labels(9);
    for (auto& l : labels) l = int(rng.index(3));
    const Mat teacher = random_batch(9, spec.num_classes, rng);

    nn::Params g1, g2;
    nn::LossSpec one_hot;
    const double a = nn::loss_and_grads(spec, params, batch, labels, one_hot, nullptr, 1e-3, g1);

    nn::LossSpec distill;
    distill.kind = nn::LossKind::distill;
    distill.distill_weight = 0.0;
    distill.temperature = 4.0;
    const double b = nn::loss_and_grads(spec, params, batch, labels, distill, &teacher, 1e-3, g2);
    CHECK(a == b);
    for (size_t l = 0; l < g1.w.size(); ++l) CHECK(g1.w[l].v == g2.w[l].v);
}

TEST_CASE("distill loss requires teacher logits") {
    nn::ModelSpec spec = small_spec(13);
    const nn::Params params = nn::init_params(spec);
    Mat batch(2, spec.input_dim);
    std::vector<int> labels = {0, 1};
    nn::LossSpec distill;
    distill.kind = nn::LossKind::distill;
    distill.distill_weight = 1.0;
    nn::Params grads;
    CHECK_THROWS_AS(
        nn::loss_and_grads(spec, params, batch, labels, distill, nullptr, 0.0, grads),
        nn::ConfigError);
}

TEST_CASE("warmup and schedule shapes") {
    nn::OptimizerConfig opt;
    opt.peak_lr = 1.0;
    opt.warmup_epochs = 5;
    opt.epochs = 20;
    opt.schedule = nn::Schedule::step;
    opt.decay_factor = 0.1;
    opt.decay_epochs = {10, 15};

    for (int e = 0; e < 5; ++e)
        CHECK(nn::learning_rate_at(opt, e) == doctest::Approx(1.0 * (e + 1) / 5.0));
    CHECK(nn::learning_rate_at(opt, 5) == doctest::Approx(1.0));
    CHECK(nn::learning_rate_at(opt, 10) == doctest::Approx(0.1));
    CHECK(nn::learning_rate_at(opt, 15) == doctest::Approx(0.01));

    opt.schedule = nn::Schedule::cosine;
    opt.decay_epochs.clear();
    CHECK(nn::learning_rate_at(opt, 5) == doctest::Approx(1.0));
    CHECK(nn::learning_rate_at(opt, 19) == doctest::Approx(0.0).epsilon(1e-9));
    for (int e = 0; e < opt.epochs; ++e) CHECK(nn::learning_rate_at(opt, e) >= 0.0);

    opt.decay_epochs = {3, 2};
    opt.schedule = nn::Schedule::step;
    CHECK_THROWS_AS(nn::validate(opt), nn::ConfigError);
}

namespace {

nn::TrainData tiny_train_data(int n, int dim, int classes, uint64_t seed) {
    Rng rng(seed);
    nn::TrainData data;
    data.x = random_batch(n, dim, rng);
    data.labels.resize(size_t(n));
    for (auto& l : data.labels) l = int(rng.index(uint64_t(classes)));
    data.trace_x = data.x;
    data.trace_labels = data.labels;
    return data;
}

}  // namespace

TEST_CASE("train with epochs=0 returns the initialization") {
    nn::ModelSpec spec = small_spec(21);
    nn::OptimizerConfig opt;
    opt.epochs = 0;
    const auto data = tiny_train_data(10, spec.input_dim, spec.num_classes, 5);
    const auto model = nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 77);
    const auto fresh = nn::init_params(spec);
    for (size_t l = 0; l < fresh.w.size(); ++l) CHECK(model.params.w[l].v == fresh.w[l].v);
    CHECK(model.trace.empty());
}

TEST_CASE("training is a pure function of its inputs") {
    nn::ModelSpec spec = small_spec(22);
    nn::OptimizerConfig opt;
    opt.peak_lr = 0.1;
    opt.momentum = 0.9;
    opt.nesterov = true;  // the paper's momentum setting
    opt.batch_size = 4;
    opt.epochs = 8;
    opt.weight_decay = 1e-4;
    const auto data = tiny_train_data(12, spec.input_dim, spec.num_classes, 6);

    const auto m1 = nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 99);
    const auto m2 = nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 99);
    for (size_t l = 0; l < m1.params.w.size(); ++l) {
        CHECK(m1.params.w[l].v == m2.params.w[l].v);
        CHECK(m1.params.b[l] == m2.params.b[l]);
    }
    REQUIRE(m1.trace.size() == 8);
    for (size_t t = 0; t < m1.trace.size(); ++t) CHECK(m1.trace[t] == m2.trace[t]);

    // a different seed changes the batch order and the result
    const auto m3 = nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 100);
    bool any_diff = false;
    for (size_t l = 0; l < m1.params.w.size(); ++l)
        if (m1.params.w[l].v != m3.params.w[l].v) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("trace entries are probabilities over every epoch") {
    nn::ModelSpec spec = small_spec(23);
    nn::OptimizerConfig opt;
    opt.peak_lr = 0.05;
    opt.batch_size = 8;
    opt.epochs = 5;
    const auto data = tiny_train_data(20, spec.input_dim, spec.num_classes, 8);
    const auto model = nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 1);
    REQUIRE(model.trace.size() == 5);
    for (const auto& row : model.trace) {
        REQUIRE(row.size() == 20);
        for (double p : row) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }
}

TEST_CASE("non-finite loss aborts the run with location info") {
    nn::ModelSpec spec = small_spec(24);
    nn::OptimizerConfig opt;
    opt.peak_lr = 1e8;
    opt.weight_decay = 1.0;
    opt.batch_size = 2;
    opt.epochs = 30;
    const auto data = tiny_train_data(8, spec.input_dim, spec.num_classes, 3);
    CHECK_THROWS_AS(nn::train(spec, opt, nn::LossSpec{}, data, nullptr, 5), nn::NumericalError);
}
