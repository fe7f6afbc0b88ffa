#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace memo::ensemble {

struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// K membership bitmaps of length N, each an independent uniform draw from
// the M-subsets of {0..N-1}.
struct SubsamplePlan {
    int n = 0;
    int m = 0;
    int k = 0;
    uint64_t seed = 0;
    std::vector<std::vector<uint8_t>> member;  // member[k][i] in {0,1}

    bool contains(int k_idx, int example) const {
        return member[size_t(k_idx)][size_t(example)] != 0;
    }
    std::vector<int> in_runs(int example) const;   // K_in(x)
    std::vector<int> out_runs(int example) const;  // K_out(x)
    std::vector<int> subset_ids(int k_idx) const;  // sorted member ids of S^(k)
};

SubsamplePlan draw_subsamples(int n, int m, int k, uint64_t seed);

}  // namespace memo::ensemble
