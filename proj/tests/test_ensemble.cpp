#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "memo/artifacts.hpp"
#include "memo/execute.hpp"
#include "memo/memscore.hpp"
#include "memo/subsample.hpp"

using namespace memo;
namespace fs = std::filesystem;

TEST_CASE("subsample bitmaps have exactly M bits and partition K") {
    const auto plan = ensemble::draw_subsamples(40, 28, 50, 99);
    for (int k = 0; k < plan.k; ++k) {
        int pop = 0;
        for (int i = 0; i < plan.n; ++i) pop += plan.contains(k, i);
        CHECK(pop == 28);
    }
    for (int i = 0; i < plan.n; ++i) {
        const auto in = plan.in_runs(i);
        const auto out = plan.out_runs(i);
        CHECK(in.size() + out.size() == 50);
        std::vector<bool> seen(50, false);
        for (int k : in) seen[size_t(k)] = true;
        for (int k : out) {
            CHECK(!seen[size_t(k)]);
            seen[size_t(k)] = true;
        }
    }
}

TEST_CASE("empirical inclusion rate matches M/N") {
    // N=10, M=7, K=10000: each example's rate within [0.69, 0.71]
    const auto plan = ensemble::draw_subsamples(10, 7, 10000, 1);
    for (int i = 0; i < 10; ++i) {
        int count = 0;
        for (int k = 0; k < plan.k; ++k) count += plan.contains(k, i);
        const double rate = double(count) / 10000.0;
        CHECK(rate >= 0.69);
        CHECK(rate <= 0.71);
    }
}

TEST_CASE("pairwise co-inclusion matches M(M-1)/(N(N-1))") {
    const int n = 12, m = 8, k = 20000;
    const auto plan = ensemble::draw_subsamples(n, m, k, 5);
    const double expected = double(m) * (m - 1) / (double(n) * (n - 1));
    for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 4; ++b) {
            int both = 0;
            for (int kk = 0; kk < k; ++kk) both += plan.contains(kk, a) && plan.contains(kk, b);
            CHECK(double(both) / k == doctest::Approx(expected).epsilon(0.05));
        }
    }
}

TEST_CASE("K=400 in-counts stay within 6-sigma binomial bounds") {
    const int n = 50, k = 400;
    const int m = 35;  // M/N = 0.7
    const auto plan = ensemble::draw_subsamples(n, m, k, 7);
    for (int i = 0; i < n; ++i) {
        const int count = int(plan.in_runs(i).size());
        CHECK(count >= 240);
        CHECK(count <= 320);
    }
}

TEST_CASE("draw_subsamples validates its arguments") {
    CHECK_THROWS_AS(ensemble::draw_subsamples(10, 11, 5, 0), ensemble::PlanError);
    CHECK_THROWS_AS(ensemble::draw_subsamples(10, 0, 5, 0), ensemble::PlanError);
    CHECK_THROWS_AS(ensemble::draw_subsamples(10, 5, 0, 0), ensemble::PlanError);
}

namespace {

ensemble::ExperimentPlan tiny_plan(bool with_distill) {
    data::TwoGaussiansParams g;
    g.n = 16;
    g.separation = 2.0;
    g.sigma = 0.6;
    g.seed = 4;
    ensemble::ExperimentPlan plan;
    plan.dataset = data::generate_two_gaussians(g);
    plan.subsample = ensemble::draw_subsamples(16, 12, 6, 21);
    for (int width : {4, 12}) {
        ensemble::LadderEntry entry;
        entry.spec.input_dim = 2;
        entry.spec.num_classes = 2;
        entry.spec.widths = {width};
        entry.spec.init_seed = 0;
        entry.opt.peak_lr = 0.1;
        entry.opt.momentum = 0.9;
        entry.opt.nesterov = true;
        entry.opt.batch_size = 8;
        entry.opt.epochs = 4;
        plan.ladder.push_back(entry);
    }
    if (with_distill) {
        ensemble::DistillBlock db;
        db.teacher_index = 1;
        db.students = {0};
        db.weight = 1.0;
        db.temperature = 2.0;
        plan.distill = db;
    }
    plan.seed = 31;
    plan.plan_hash = with_distill ? "feedfeedfeedfeed" : "beefbeefbeefbeef";
    return plan;
}

// stable content fingerprint of every artifact file in a directory
std::map<std::string, std::string> dir_hashes(const std::string& root) {
    std::map<std::string, std::string> hashes;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        hashes[fs::relative(e.path(), root).string()] =
            ensemble::content_hash_hex(e.path().string());
    }
    return hashes;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("execute produces identical bytes for any worker count") {
    const auto plan = tiny_plan(true);
    TempDir d1("memo_exec_w1"), d2("memo_exec_w4");

    ensemble::ExecuteOptions o1;
    o1.workers = 1;
    const auto a1 = ensemble::execute(plan, d1.path.string(), o1);

    ensemble::ExecuteOptions o4;
    o4.workers = 4;
    const auto a4 = ensemble::execute(plan, d2.path.string(), o4);

    for (const auto& a : a1) CHECK(a.status == ensemble::RunStatus::done);
    CHECK(dir_hashes(d1.path.string()) == dir_hashes(d2.path.string()));
}

TEST_CASE("execute resumes after a simulated crash with identical bytes") {
    const auto plan = tiny_plan(false);
    TempDir full("memo_exec_full"), killed("memo_exec_killed");

    ensemble::ExecuteOptions all;
    all.workers = 1;
    ensemble::execute(plan, full.path.string(), all);

    ensemble::ExecuteOptions partial;
    partial.workers = 1;
    partial.max_new_runs = 5;
    const auto first = ensemble::execute(plan, killed.path.string(), partial);
    int pending = 0;
    for (const auto& a : first) pending += a.status == ensemble::RunStatus::pending;
    CHECK(pending > 0);

    ensemble::ExecuteOptions resume;
    resume.workers = 1;
    resume.resume = true;
    const auto second = ensemble::execute(plan, killed.path.string(), resume);
    for (const auto& a : second) CHECK(a.status == ensemble::RunStatus::done);

    CHECK(dir_hashes(full.path.string()) == dir_hashes(killed.path.string()));
}

TEST_CASE("execute refuses to resume against a different plan") {
    auto plan = tiny_plan(false);
    TempDir dir("memo_exec_mismatch");
    ensemble::ExecuteOptions opts;
    ensemble::execute(plan, dir.path.string(), opts);

    plan.plan_hash = "0123456789abcdef";
    ensemble::ExecuteOptions resume;
    resume.resume = true;
    CHECK_THROWS_AS(ensemble::execute(plan, dir.path.string(), resume), ensemble::PlanError);
}

TEST_CASE("re-running a completed directory trains nothing new") {
    const auto plan = tiny_plan(false);
    TempDir dir("memo_exec_idem");
    ensemble::ExecuteOptions opts;
    ensemble::execute(plan, dir.path.string(), opts);
    const auto before = dir_hashes(dir.path.string());

    ensemble::ExecuteOptions resume;
    resume.resume = true;
    int executed = 0;
    resume.progress = [&](const std::string&) { ++executed; };
    ensemble::execute(plan, dir.path.string(), resume);
    CHECK(executed == 0);
    CHECK(dir_hashes(dir.path.string()) == before);
}

TEST_CASE("correctness matrix columns equal the stored rows bit-for-bit") {
    const auto plan = tiny_plan(false);
    TempDir dir("memo_exec_matrix");
    ensemble::ExecuteOptions opts;
    const auto artifacts = ensemble::execute(plan, dir.path.string(), opts);

    const auto matrix = ensemble::correctness_matrix(artifacts, 1, nn::LossKind::one_hot);
    CHECK(matrix.n == 16);
    CHECK(matrix.k == 6);
    for (const auto& a : artifacts) {
        if (a.def.ladder_index != 1 || a.def.subsample_index < 0) continue;
        if (a.def.loss_kind != nn::LossKind::one_hot) continue;
        const auto bits =
            ensemble::read_correctness((fs::path(a.dir) / "correctness.bin").string());
        for (int i = 0; i < matrix.n; ++i)
            CHECK(matrix.at(i, a.def.subsample_index) == (bits[size_t(i)] != 0));
    }
}

TEST_CASE("distilled runs reference their teacher on the same subsample") {
    const auto plan = tiny_plan(true);
    const auto runs = ensemble::enumerate_runs(plan);
    int distilled = 0;
    for (const auto& r : runs) {
        if (r.loss_kind != nn::LossKind::distill) continue;
        ++distilled;
        char expect[64];
        std::snprintf(expect, sizeof expect, "s%04d_l1_onehot", r.subsample_index);
        CHECK(r.teacher_run_id == expect);
    }
    CHECK(distilled == 6);
}

TEST_CASE("params round-trip through the float32 blob") {
    nn::ModelSpec spec;
    spec.input_dim = 3;
    spec.num_classes = 2;
    spec.widths = {5};
    spec.init_seed = 17;
    const auto params = ensemble::quantize_params(nn::init_params(spec));

    TempDir dir("memo_params_rt");
    const std::string path = (dir.path / "params.bin").string();
    ensemble::write_params(path, spec, params);

    nn::ModelSpec spec2;
    nn::Params params2;
    ensemble::read_params(path, spec2, params2);
    CHECK(spec2 == spec);
    REQUIRE(params2.layers() == params.layers());
    for (int l = 0; l < params.layers(); ++l) {
        CHECK(params2.w[size_t(l)].v == params.w[size_t(l)].v);
        CHECK(params2.b[size_t(l)] == params.b[size_t(l)]);
    }
}

TEST_CASE("trace file round-trips") {
    TempDir dir("memo_trace_rt");
    const std::string path = (dir.path / "trace.jsonl").string();
    const std::vector<std::vector<double>> trace = {{0.5, 0.25, 1.0}, {0.125, 0.0625, 0.875}};
    ensemble::write_trace(path, trace);
    CHECK(ensemble::read_trace(path) == trace);
}
