#pragma once

#include <array>
#include <string>
#include <vector>

#include "memo/memscore.hpp"
#include "memo/trajectory.hpp"

namespace memo::analysis {

struct PairedDelta {
    int example_id = 0;
    double mem_onehot = 0.0;
    double mem_distilled = 0.0;
    double delta = 0.0;  // mem_distilled - mem_onehot
};

struct DistillComparison {
    double tau = 0.1;
    std::vector<PairedDelta> deltas;   // examples valid in both record lists
    std::vector<int> reduced_ids;      // delta <= -tau
    std::vector<int> increased_ids;    // delta >= +tau
};

// Pairs per-example memorisation under one-hot and distilled training.
// Record lists must cover the same dataset under the same subsample plan.
DistillComparison compare(const std::vector<memscore::MemRecord>& onehot_records,
                          const std::vector<memscore::MemRecord>& distilled_records, double tau);

struct ReductionBreakdown {
    std::array<double, 5> reduced{};    // category fractions over the reduced set
    std::array<double, 5> baseline{};   // over every classified example
    int reduced_count = 0;
    bool reduced_empty = false;
};

ReductionBreakdown reduction_breakdown(const DistillComparison& comparison,
                                       const std::vector<TrajectoryRecord>& trajectories);

struct AccuracyDelta {
    double d_in = 0.0;   // distilled minus one-hot, valid-record means
    double d_out = 0.0;
    double d_mem = 0.0;
};

AccuracyDelta accuracy_decomposition_delta(const std::vector<memscore::MemRecord>& onehot_records,
                                           const std::vector<memscore::MemRecord>& distilled_records);

// 20x20 joint histogram over (mem_onehot, mem_distilled) in [-1,1]^2; bucket
// sums equal the number of valid paired examples.
struct JointHistogram {
    std::array<std::array<int, 20>, 20> counts{};
    int total = 0;
};

JointHistogram joint_histogram(const DistillComparison& comparison);

// CSV: example_id,mem_onehot,mem_distilled,delta
void write_comparison_csv(const DistillComparison& comparison, const std::string& path);

}  // namespace memo::analysis
