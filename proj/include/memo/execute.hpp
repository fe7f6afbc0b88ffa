#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "memo/data.hpp"
#include "memo/nn.hpp"
#include "memo/subsample.hpp"

namespace memo::ensemble {

struct LadderEntry {
    nn::ModelSpec spec;  // init_seed here is a base; per-run seeds are mixed in
    nn::OptimizerConfig opt;
};

struct DistillBlock {
    int teacher_index = -1;
    std::vector<int> students;  // empty means every ladder entry
    double weight = 1.0;
    double temperature = 1.0;
};

// Explicit leave-out set: full dataset minus `ids`, trained one-hot at the
// given ladder indices (all entries when empty).
struct ExclusionSet {
    std::string name;
    std::vector<int> ids;
    std::vector<int> ladder_indices;
};

struct ExperimentPlan {
    data::LabeledDataset dataset;
    SubsamplePlan subsample;
    std::vector<LadderEntry> ladder;
    std::optional<DistillBlock> distill;
    std::vector<ExclusionSet> exclusions;
    uint64_t seed = 0;
    std::string plan_hash;  // canonical config hash; guards resume
};

void validate(const ExperimentPlan& plan);

enum class RunStatus { pending, done, failed };

struct RunDef {
    std::string run_id;
    int subsample_index = -1;  // -1 for full-dataset and exclusion runs
    int ladder_index = 0;
    nn::LossKind loss_kind = nn::LossKind::one_hot;
    std::string teacher_run_id;  // set for distill runs
    std::string exclusion;       // set for exclusion runs
    uint64_t seed = 0;
};

struct RunArtifact {
    RunDef def;
    RunStatus status = RunStatus::pending;
    std::string dir;  // <artifact_dir>/runs/<run_id>
};

// Deterministic run table for a plan: subsample one-hot runs per ladder
// entry, one full-dataset one-hot run per entry, exclusion runs, then
// distilled runs (whose teachers are the teacher entry's runs on the same
// subsample).
std::vector<RunDef> enumerate_runs(const ExperimentPlan& plan);

struct ExecuteOptions {
    int workers = 1;
    bool resume = false;
    int retries = 1;
    // Stop after completing this many new runs (simulates a crash; used by
    // the resume tests). -1 means run to completion.
    int max_new_runs = -1;
    std::function<void(const std::string&)> progress;  // optional
};

// Executes every pending run, writing one atomically-renamed directory per
// run under <artifact_dir>/runs/. Idempotent: done and failed runs are
// skipped. Refuses to reuse a directory whose manifest hash differs from
// the plan's.
std::vector<RunArtifact> execute(const ExperimentPlan& plan, const std::string& artifact_dir,
                                 const ExecuteOptions& options);

// Status scan without executing anything.
std::vector<RunArtifact> scan_runs(const ExperimentPlan& plan, const std::string& artifact_dir);

struct CorrectnessMatrix {
    int n = 0;
    int k = 0;
    std::vector<uint8_t> value;      // n x k, value[i*k + col]
    std::vector<uint8_t> col_valid;  // k; failed runs masked out

    bool at(int i, int col) const { return value[size_t(i) * size_t(k) + size_t(col)] != 0; }
};

// Assembles the N x K correctness matrix for one (ladder entry, loss kind)
// from completed run artifacts. Failed runs are masked; if every column is
// masked this is a hard error.
CorrectnessMatrix correctness_matrix(const std::vector<RunArtifact>& artifacts, int ladder_index,
                                     nn::LossKind loss_kind);

// Generic worker pool used by execute() and the oracle: runs jobs(i) for
// i in [0, count) on `workers` OpenMP threads with dynamic scheduling.
void parallel_for(int count, int workers, const std::function<void(int)>& job);

}  // namespace memo::ensemble
