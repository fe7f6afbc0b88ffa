#include "memo/execute.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>
#include <omp.h>

#include "memo/artifacts.hpp"
#include "memo/rng.hpp"

namespace fs = std::filesystem;

namespace memo::ensemble {

void validate(const ExperimentPlan& plan) {
    if (plan.ladder.empty()) throw PlanError("plan: ladder must be nonempty");
    int64_t prev = -1;
    for (const auto& entry : plan.ladder) {
        nn::validate(entry.spec);
        nn::validate(entry.opt);
        const int64_t count = nn::param_count(entry.spec);
        if (count <= prev)
            throw PlanError("plan: ladder must be strictly ordered by parameter count");
        prev = count;
    }
    if (plan.subsample.n != plan.dataset.size())
        throw PlanError("plan: subsample plan size does not match dataset");
    if (plan.distill) {
        if (plan.distill->teacher_index < 0 || plan.distill->teacher_index >= int(plan.ladder.size()))
            throw PlanError("plan: distill teacher_index out of range");
        for (int s : plan.distill->students)
            if (s < 0 || s >= int(plan.ladder.size()))
                throw PlanError("plan: distill student index out of range");
        if (plan.distill->weight < 0.0 || plan.distill->weight > 1.0)
            throw PlanError("plan: distill weight must be in [0,1]");
        if (plan.distill->temperature <= 0.0)
            throw PlanError("plan: distill temperature must be positive");
    }
    for (const auto& excl : plan.exclusions) {
        if (excl.name.empty()) throw PlanError("plan: exclusion set needs a name");
        if (excl.ids.empty()) throw PlanError("plan: exclusion set " + excl.name + " is empty");
        for (int id : excl.ids)
            if (id < 0 || id >= plan.dataset.size())
                throw PlanError("plan: exclusion id out of range in " + excl.name);
        if (int(excl.ids.size()) >= plan.dataset.size())
            throw PlanError("plan: exclusion set " + excl.name + " removes every example");
    }
}

namespace {

std::string run_id_for(int k, int ladder, bool distill) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "s%04d_l%d_%s", k, ladder, distill ? "distill" : "onehot");
    return buf;
}

std::string full_run_id(int ladder) { return "full_l" + std::to_string(ladder) + "_onehot"; }

}  // namespace

std::vector<RunDef> enumerate_runs(const ExperimentPlan& plan) {
    std::vector<RunDef> runs;
    const int L = int(plan.ladder.size());
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < plan.subsample.k; ++k) {
            RunDef def;
            def.run_id = run_id_for(k, l, false);
            def.subsample_index = k;
            def.ladder_index = l;
            def.loss_kind = nn::LossKind::one_hot;
            def.seed = mix_seed(plan.seed, def.run_id);
            runs.push_back(std::move(def));
        }
    }
    for (int l = 0; l < L; ++l) {
        RunDef def;
        def.run_id = full_run_id(l);
        def.ladder_index = l;
        def.loss_kind = nn::LossKind::one_hot;
        def.seed = mix_seed(plan.seed, def.run_id);
        runs.push_back(std::move(def));
    }
    for (const auto& excl : plan.exclusions) {
        std::vector<int> indices = excl.ladder_indices;
        if (indices.empty())
            for (int l = 0; l < L; ++l) indices.push_back(l);
        for (int l : indices) {
            RunDef def;
            def.run_id = "excl_" + excl.name + "_l" + std::to_string(l) + "_onehot";
            def.ladder_index = l;
            def.loss_kind = nn::LossKind::one_hot;
            def.exclusion = excl.name;
            def.seed = mix_seed(plan.seed, def.run_id);
            runs.push_back(std::move(def));
        }
    }
    if (plan.distill) {
        std::vector<int> students = plan.distill->students;
        if (students.empty())
            for (int l = 0; l < L; ++l) students.push_back(l);
        for (int l : students) {
            for (int k = 0; k < plan.subsample.k; ++k) {
                RunDef def;
                def.run_id = run_id_for(k, l, true);
                def.subsample_index = k;
                def.ladder_index = l;
                def.loss_kind = nn::LossKind::distill;
                def.teacher_run_id = run_id_for(k, plan.distill->teacher_index, false);
                def.seed = mix_seed(plan.seed, def.run_id);
                runs.push_back(std::move(def));
            }
        }
    }
    return runs;
}

namespace {

nlohmann::json manifest_json(const ExperimentPlan& plan, const std::vector<RunDef>& runs) {
    nlohmann::json m;
    m["format"] = "memladder-manifest-v1";
    m["plan_hash"] = plan.plan_hash;
    m["n"] = plan.dataset.size();
    m["m"] = plan.subsample.m;
    m["k"] = plan.subsample.k;
    m["ladder_size"] = plan.ladder.size();
    nlohmann::json rt = nlohmann::json::array();
    for (const auto& r : runs) {
        rt.push_back({{"run_id", r.run_id},
                      {"k", r.subsample_index},
                      {"ladder", r.ladder_index},
                      {"loss", r.loss_kind == nn::LossKind::distill ? "distill" : "onehot"},
                      {"teacher", r.teacher_run_id},
                      {"exclusion", r.exclusion},
                      {"seed", r.seed}});
    }
    m["runs"] = rt;
    return m;
}

RunStatus status_of(const fs::path& run_dir) {
    if (fs::exists(run_dir / "failed.json")) return RunStatus::failed;
    if (fs::exists(run_dir / "correctness.bin") && fs::exists(run_dir / "trace.jsonl") &&
        fs::exists(run_dir / "params.bin"))
        return RunStatus::done;
    return RunStatus::pending;
}

// Training view ids for a run: the subsample, everything minus an exclusion
// set, or the whole dataset.
std::vector<int> view_ids(const ExperimentPlan& plan, const RunDef& def) {
    if (def.subsample_index >= 0) return plan.subsample.subset_ids(def.subsample_index);
    std::vector<int> ids;
    if (!def.exclusion.empty()) {
        const ExclusionSet* set = nullptr;
        for (const auto& e : plan.exclusions)
            if (e.name == def.exclusion) set = &e;
        if (!set) throw PlanError("unknown exclusion set " + def.exclusion);
        std::vector<uint8_t> drop(size_t(plan.dataset.size()), 0);
        for (int id : set->ids) drop[size_t(id)] = 1;
        for (int i = 0; i < plan.dataset.size(); ++i)
            if (!drop[size_t(i)]) ids.push_back(i);
    } else {
        ids.resize(size_t(plan.dataset.size()));
        for (int i = 0; i < plan.dataset.size(); ++i) ids[size_t(i)] = i;
    }
    return ids;
}

struct RunOutput {
    nn::ModelSpec spec;
    nn::Params params;  // float32-quantized form
    std::vector<std::vector<double>> trace;
    std::vector<uint8_t> correctness;
};

RunOutput execute_one(const ExperimentPlan& plan, const RunDef& def,
                      const nn::Params* teacher_params, const nn::ModelSpec* teacher_spec) {
    const LadderEntry& entry = plan.ladder[size_t(def.ladder_index)];
    nn::ModelSpec spec = entry.spec;
    spec.init_seed = mix_seed(def.seed, "init");

    const std::vector<int> ids = view_ids(plan, def);
    nn::TrainData data;
    data.x = plan.dataset.feature_matrix(ids);
    data.labels.reserve(ids.size());
    for (int id : ids) data.labels.push_back(plan.dataset.labels[size_t(id)]);
    data.trace_x = plan.dataset.feature_matrix();
    data.trace_labels = plan.dataset.labels;

    nn::LossSpec loss;
    Mat teacher_logits;
    const Mat* teacher_ptr = nullptr;
    if (def.loss_kind == nn::LossKind::distill) {
        loss.kind = nn::LossKind::distill;
        loss.distill_weight = plan.distill->weight;
        loss.temperature = plan.distill->temperature;
        teacher_logits = nn::forward(*teacher_spec, *teacher_params, data.x).logits;
        teacher_ptr = &teacher_logits;
    }

    nn::TrainedModel model = nn::train(spec, entry.opt, loss, data, teacher_ptr, def.seed);

    RunOutput out;
    out.spec = model.spec;
    out.params = quantize_params(model.params);
    out.trace = std::move(model.trace);
    const std::vector<int> preds =
        nn::predict(model.spec, out.params, data.trace_x);
    out.correctness.resize(size_t(plan.dataset.size()));
    for (int i = 0; i < plan.dataset.size(); ++i)
        out.correctness[size_t(i)] = preds[size_t(i)] == plan.dataset.labels[size_t(i)] ? 1 : 0;
    return out;
}

void write_run_dir(const fs::path& runs_dir, const RunDef& def, const RunOutput& out) {
    const fs::path tmp = runs_dir / (".tmp_" + def.run_id);
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    write_correctness((tmp / "correctness.bin").string(), out.correctness);
    write_trace((tmp / "trace.jsonl").string(), out.trace);
    write_params((tmp / "params.bin").string(), out.spec, out.params);
    const fs::path final_dir = runs_dir / def.run_id;
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
}

void write_failed(const fs::path& runs_dir, const RunDef& def, const std::string& what) {
    const fs::path tmp = runs_dir / (".tmp_" + def.run_id);
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
        nlohmann::json j;
        j["run_id"] = def.run_id;
        j["error"] = what;
        std::ofstream out(tmp / "failed.json");
        out << j.dump(2) << "\n";
    }
    const fs::path final_dir = runs_dir / def.run_id;
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);
}

}  // namespace

void parallel_for(int count, int workers, const std::function<void(int)>& job) {
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) job(i);
        return;
    }
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int i = 0; i < count; ++i) job(i);
}

std::vector<RunArtifact> scan_runs(const ExperimentPlan& plan, const std::string& artifact_dir) {
    const fs::path runs_dir = fs::path(artifact_dir) / "runs";
    std::vector<RunArtifact> artifacts;
    for (auto& def : enumerate_runs(plan)) {
        RunArtifact a;
        a.dir = (runs_dir / def.run_id).string();
        a.status = status_of(runs_dir / def.run_id);
        a.def = std::move(def);
        artifacts.push_back(std::move(a));
    }
    return artifacts;
}

std::vector<RunArtifact> execute(const ExperimentPlan& plan, const std::string& artifact_dir,
                                 const ExecuteOptions& options) {
    validate(plan);
    const fs::path root(artifact_dir);
    const fs::path runs_dir = root / "runs";
    fs::create_directories(runs_dir);

    const std::vector<RunDef> runs = enumerate_runs(plan);
    const fs::path manifest_path = root / "manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        nlohmann::json existing = nlohmann::json::parse(in);
        if (existing.value("plan_hash", "") != plan.plan_hash)
            throw PlanError("resume: manifest plan hash " + existing.value("plan_hash", "?") +
                            " does not match plan " + plan.plan_hash);
        if (!options.resume)
            throw PlanError("artifact dir already initialised; pass resume to continue");
    } else {
        std::ofstream out(manifest_path);
        out << manifest_json(plan, runs).dump(2) << "\n";
    }

    // drop leftover tmp dirs from a previous crash
    for (const auto& e : fs::directory_iterator(runs_dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind(".tmp_", 0) == 0) fs::remove_all(e.path());
    }

    // phase 1: everything that is not distilled; phase 2: distilled runs,
    // whose teachers are then guaranteed on disk
    std::vector<int> phase1, phase2;
    for (int i = 0; i < int(runs.size()); ++i)
        (runs[size_t(i)].loss_kind == nn::LossKind::distill ? phase2 : phase1).push_back(i);

    std::atomic<int> completed{0};
    std::atomic<bool> stop{false};

    auto run_one = [&](int idx) {
        if (stop.load()) return;
        const RunDef& def = runs[size_t(idx)];
        const fs::path dir = runs_dir / def.run_id;
        if (status_of(dir) != RunStatus::pending) return;
        if (options.max_new_runs >= 0 && completed.load() >= options.max_new_runs) {
            stop.store(true);
            return;
        }
        try {
            const nn::Params* teacher_params = nullptr;
            const nn::ModelSpec* teacher_spec = nullptr;
            nn::Params tp;
            nn::ModelSpec ts;
            if (def.loss_kind == nn::LossKind::distill) {
                const fs::path teacher_dir = runs_dir / def.teacher_run_id;
                if (status_of(teacher_dir) != RunStatus::done) {
                    write_failed(runs_dir, def,
                                 "teacher run " + def.teacher_run_id + " unavailable");
                    return;
                }
                read_params((teacher_dir / "params.bin").string(), ts, tp);
                teacher_params = &tp;
                teacher_spec = &ts;
            }
            for (int attempt = 0; attempt <= options.retries; ++attempt) {
                try {
                    RunOutput out = execute_one(plan, def, teacher_params, teacher_spec);
                    write_run_dir(runs_dir, def, out);
                    break;
                } catch (const nn::NumericalError& e) {
                    if (attempt == options.retries) write_failed(runs_dir, def, e.what());
                }
            }
        } catch (const std::exception& e) {
            // exceptions must not escape the worker team
            try {
                write_failed(runs_dir, def, e.what());
            } catch (...) {
            }
        }
        const int done_now = ++completed;
        if (options.progress) options.progress(def.run_id);
        if (options.max_new_runs >= 0 && done_now >= options.max_new_runs) stop.store(true);
    };

    parallel_for(int(phase1.size()), options.workers,
                 [&](int i) { run_one(phase1[size_t(i)]); });
    if (!stop.load())
        parallel_for(int(phase2.size()), options.workers,
                     [&](int i) { run_one(phase2[size_t(i)]); });

    return scan_runs(plan, artifact_dir);
}

CorrectnessMatrix correctness_matrix(const std::vector<RunArtifact>& artifacts, int ladder_index,
                                     nn::LossKind loss_kind) {
    std::map<int, const RunArtifact*> by_k;
    for (const auto& a : artifacts)
        if (a.def.ladder_index == ladder_index && a.def.loss_kind == loss_kind &&
            a.def.subsample_index >= 0)
            by_k[a.def.subsample_index] = &a;
    if (by_k.empty()) throw ArtifactError("correctness_matrix: no runs for this ladder entry");

    CorrectnessMatrix mat;
    mat.k = int(by_k.size());
    mat.col_valid.assign(size_t(mat.k), 0);
    int n_valid = 0;
    for (const auto& [k, art] : by_k) {
        if (art->status == RunStatus::pending)
            throw ArtifactError("correctness_matrix: run " + art->def.run_id + " not finished");
        if (art->status == RunStatus::failed) continue;
        const auto bits = read_correctness((fs::path(art->dir) / "correctness.bin").string());
        if (mat.n == 0) {
            mat.n = int(bits.size());
            mat.value.assign(size_t(mat.n) * size_t(mat.k), 0);
        }
        if (int(bits.size()) != mat.n)
            throw ArtifactError("correctness_matrix: inconsistent N in " + art->def.run_id);
        for (int i = 0; i < mat.n; ++i)
            mat.value[size_t(i) * size_t(mat.k) + size_t(k)] = bits[size_t(i)];
        mat.col_valid[size_t(k)] = 1;
        ++n_valid;
    }
    if (n_valid == 0)
        throw ArtifactError("correctness_matrix: every run failed for this ladder entry");
    return mat;
}

}  // namespace memo::ensemble
