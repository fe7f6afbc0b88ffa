#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "memo/memscore.hpp"
#include "memo/rng.hpp"
#include "memo/subsample.hpp"

using namespace memo;

namespace {

// matrix with every column valid and the given per-example fill function
ensemble::CorrectnessMatrix make_matrix(const ensemble::SubsamplePlan& plan,
                                        const std::function<bool(int, int, bool)>& fill) {
    ensemble::CorrectnessMatrix m;
    m.n = plan.n;
    m.k = plan.k;
    m.value.assign(size_t(m.n) * size_t(m.k), 0);
    m.col_valid.assign(size_t(m.k), 1);
    for (int i = 0; i < m.n; ++i)
        for (int k = 0; k < m.k; ++k)
            m.value[size_t(i) * size_t(m.k) + size_t(k)] = fill(i, k, plan.contains(k, i)) ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("estimate_mem arithmetic on forced patterns") {
    const auto plan = ensemble::draw_subsamples(8, 6, 24, 3);

    // correct everywhere: mem = 0
    auto all = make_matrix(plan, [](int, int, bool) { return true; });
    auto records = memscore::estimate_mem(all, plan);
    for (const auto& r : records) {
        CHECK(r.valid);
        CHECK(r.mem == 0.0);
        CHECK(r.in_acc == 1.0);
        CHECK(r.out_acc == 1.0);
    }

    // correct iff in-sample: mem = 1 (fully memorised)
    auto memorised = make_matrix(plan, [](int, int, bool in) { return in; });
    records = memscore::estimate_mem(memorised, plan);
    for (const auto& r : records) {
        CHECK(r.mem == 1.0);
        CHECK(r.n_in + r.n_out == 24);
    }
}

TEST_CASE("estimate_mem reproduces hand arithmetic") {
    // n_in=280 with 150 correct, n_out=120 with 24 correct
    // mem = 150/280 - 24/120 = 0.3357142857...
    ensemble::SubsamplePlan plan;
    plan.n = 1;
    plan.m = 1;
    plan.k = 400;
    plan.member.assign(400, std::vector<uint8_t>(1, 0));
    for (int k = 0; k < 280; ++k) plan.member[size_t(k)][0] = 1;

    ensemble::CorrectnessMatrix m;
    m.n = 1;
    m.k = 400;
    m.value.assign(400, 0);
    m.col_valid.assign(400, 1);
    for (int k = 0; k < 150; ++k) m.value[size_t(k)] = 1;          // in-sample correct
    for (int k = 280; k < 304; ++k) m.value[size_t(k)] = 1;        // out-sample correct
    const auto records = memscore::estimate_mem(m, plan);
    REQUIRE(records.size() == 1);
    CHECK(records[0].n_in == 280);
    CHECK(records[0].n_out == 120);
    CHECK(records[0].mem == doctest::Approx(150.0 / 280.0 - 24.0 / 120.0).epsilon(1e-12));
}

TEST_CASE("M=N leaves every record invalid, never silently zeroed") {
    const auto plan = ensemble::draw_subsamples(6, 6, 5, 1);
    const auto m = make_matrix(plan, [](int, int, bool) { return true; });
    const auto records = memscore::estimate_mem(m, plan);
    for (const auto& r : records) {
        CHECK(!r.valid);
        CHECK(r.n_out == 0);
    }
    CHECK_THROWS_AS(memscore::avg_decomposition(records), memscore::ScoreError);
}

TEST_CASE("cscore point mass is the out-accuracy term") {
    const auto plan = ensemble::draw_subsamples(10, 7, 40, 9);
    Rng rng(5);
    const auto m = make_matrix(plan, [&](int i, int, bool in) {
        return in || (i % 3 == 0);  // out-of-sample correct only for ids 0,3,6,9
    });
    const auto records = memscore::estimate_mem(m, plan);
    const auto cscores = memscore::cscore_point_mass(m, plan);
    REQUIRE(cscores.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(cscores[i] == records[i].out_acc);
        // identity: cscore = in_acc - mem
        CHECK(cscores[i] == doctest::Approx(records[i].in_acc - records[i].mem).epsilon(1e-12));
    }
}

TEST_CASE("avg decomposition is linear") {
    const auto plan = ensemble::draw_subsamples(30, 21, 60, 2);
    Rng rng(8);
    const auto m = make_matrix(plan, [&](int i, int, bool in) {
        return in ? rng.uniform() < 0.9 : rng.uniform() < 0.4 + 0.01 * i;
    });
    const auto records = memscore::estimate_mem(m, plan);
    const auto d = memscore::avg_decomposition(records);
    CHECK(d.mean_mem == doctest::Approx(d.mean_in - d.mean_out).epsilon(1e-12));
    CHECK(d.n_valid == 30);
}

TEST_CASE("permuting example order permutes records identically") {
    const auto plan = ensemble::draw_subsamples(12, 8, 30, 4);
    Rng rng(6);
    std::vector<std::vector<uint8_t>> noise(12, std::vector<uint8_t>(30));
    for (auto& row : noise)
        for (auto& v : row) v = rng.uniform() < 0.5;
    const auto m = make_matrix(plan, [&](int i, int k, bool) { return noise[size_t(i)][size_t(k)]; });
    const auto records = memscore::estimate_mem(m, plan);

    // reversed example order, matching plan and matrix
    ensemble::SubsamplePlan rplan = plan;
    for (int k = 0; k < plan.k; ++k)
        for (int i = 0; i < plan.n; ++i)
            rplan.member[size_t(k)][size_t(i)] = plan.member[size_t(k)][size_t(plan.n - 1 - i)];
    ensemble::CorrectnessMatrix rm = m;
    for (int i = 0; i < plan.n; ++i)
        for (int k = 0; k < plan.k; ++k)
            rm.value[size_t(i) * size_t(plan.k) + size_t(k)] =
                m.value[size_t(plan.n - 1 - i) * size_t(plan.k) + size_t(k)];
    const auto rrecords = memscore::estimate_mem(rm, rplan);
    for (int i = 0; i < plan.n; ++i) {
        CHECK(rrecords[size_t(i)].mem == records[size_t(plan.n - 1 - i)].mem);
        CHECK(rrecords[size_t(i)].in_acc == records[size_t(plan.n - 1 - i)].in_acc);
    }
}

TEST_CASE("masking a random 10% of columns does not bias the estimate") {
    const auto plan = ensemble::draw_subsamples(40, 28, 400, 12);
    Rng rng(13);
    // stochastic ground truth per example
    std::vector<double> p_in(40), p_out(40);
    for (int i = 0; i < 40; ++i) {
        p_in[size_t(i)] = 0.7 + 0.3 * rng.uniform();
        p_out[size_t(i)] = 0.5 * rng.uniform();
    }
    Rng fill_rng(14);
    const auto m = make_matrix(plan, [&](int i, int, bool in) {
        return fill_rng.uniform() < (in ? p_in[size_t(i)] : p_out[size_t(i)]);
    });
    const auto records = memscore::estimate_mem(m, plan);

    ensemble::CorrectnessMatrix masked = m;
    Rng mask_rng(15);
    for (int k = 0; k < 400; ++k)
        if (mask_rng.uniform() < 0.1) masked.col_valid[size_t(k)] = 0;
    const auto masked_records = memscore::estimate_mem(masked, plan);

    double shift = 0.0;
    for (int i = 0; i < 40; ++i)
        shift += masked_records[size_t(i)].mem - records[size_t(i)].mem;
    shift = std::abs(shift / 40.0);
    CHECK(shift < 0.02);
}

TEST_CASE("fully masked matrix is a hard error") {
    const auto plan = ensemble::draw_subsamples(5, 3, 8, 1);
    auto m = make_matrix(plan, [](int, int, bool) { return true; });
    m.col_valid.assign(8, 0);
    CHECK_THROWS_AS(memscore::estimate_mem(m, plan), memscore::ScoreError);
}

TEST_CASE("records csv round-trips") {
    const auto plan = ensemble::draw_subsamples(6, 4, 10, 2);
    const auto m = make_matrix(plan, [](int i, int, bool in) { return in && i % 2 == 0; });
    const auto records = memscore::estimate_mem(m, plan);
    const std::string path =
        (std::filesystem::temp_directory_path() / "memo_records.csv").string();
    memscore::write_records_csv(records, path);
    const auto loaded = memscore::read_records_csv(path);
    REQUIRE(loaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].example_id == records[i].example_id);
        CHECK(loaded[i].mem == doctest::Approx(records[i].mem).epsilon(1e-9));
        CHECK(loaded[i].valid == records[i].valid);
    }
    std::filesystem::remove(path);
}
