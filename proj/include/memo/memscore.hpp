#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "memo/data.hpp"
#include "memo/execute.hpp"
#include "memo/nn.hpp"
#include "memo/subsample.hpp"

namespace memo::memscore {

struct ScoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-example stability record: mem = in_acc - out_acc over the unmasked
// in/out columns. Records with an empty side are flagged invalid, never
// silently zeroed.
struct MemRecord {
    int example_id = 0;
    double in_acc = 0.0;
    double out_acc = 0.0;
    double mem = 0.0;
    int n_in = 0;
    int n_out = 0;
    bool valid = false;
};

std::vector<MemRecord> estimate_mem(const ensemble::CorrectnessMatrix& matrix,
                                    const ensemble::SubsamplePlan& plan);

// Point-mass C-score: the out-of-sample accuracy term on its own.
std::vector<double> cscore_point_mass(const ensemble::CorrectnessMatrix& matrix,
                                      const ensemble::SubsamplePlan& plan);

struct Decomposition {
    double mean_in = 0.0;
    double mean_out = 0.0;
    double mean_mem = 0.0;
    int n_valid = 0;
    int n_invalid = 0;
};

Decomposition avg_decomposition(const std::vector<MemRecord>& records);

// CSV: example_id,in_acc,out_acc,mem,n_in,n_out,valid
void write_records_csv(const std::vector<MemRecord>& records, const std::string& path);
std::vector<MemRecord> read_records_csv(const std::string& path);

struct OracleConfig {
    int repeats = 20;   // independent seeds per training condition
    int max_n = 512;    // refuse larger datasets
};

struct OracleRecord {
    int example_id = 0;
    double in_acc = 0.0;
    double out_acc = 0.0;
    double mem = 0.0;
    double half_width = 0.0;  // 1.96 * SE of the difference, normal approx
};

// Brute-force leave-one-out score: trains `repeats` models on S and, per
// target, `repeats` models on S minus that example; probabilities are
// correctness frequencies over seeds. Trainings fan out through the
// ensemble worker pool.
std::vector<OracleRecord> exact_mem_oracle(const nn::ModelSpec& spec,
                                           const nn::OptimizerConfig& opt,
                                           const data::LabeledDataset& data,
                                           const std::vector<int>& targets,
                                           const OracleConfig& oracle, uint64_t seed,
                                           int workers = 1);

}  // namespace memo::memscore
