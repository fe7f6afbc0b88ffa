#include "memo/subsample.hpp"

#include <numeric>

#include "memo/rng.hpp"

namespace memo::ensemble {

std::vector<int> SubsamplePlan::in_runs(int example) const {
    std::vector<int> r;
    for (int kk = 0; kk < k; ++kk)
        if (contains(kk, example)) r.push_back(kk);
    return r;
}

std::vector<int> SubsamplePlan::out_runs(int example) const {
    std::vector<int> r;
    for (int kk = 0; kk < k; ++kk)
        if (!contains(kk, example)) r.push_back(kk);
    return r;
}

std::vector<int> SubsamplePlan::subset_ids(int k_idx) const {
    std::vector<int> ids;
    ids.reserve(size_t(m));
    for (int i = 0; i < n; ++i)
        if (contains(k_idx, i)) ids.push_back(i);
    return ids;
}

SubsamplePlan draw_subsamples(int n, int m, int k, uint64_t seed) {
    if (n < 1 || m < 1 || m > n) throw PlanError("draw_subsamples: need 1 <= M <= N");
    if (k < 1) throw PlanError("draw_subsamples: need K >= 1");

    SubsamplePlan plan;
    plan.n = n;
    plan.m = m;
    plan.k = k;
    plan.seed = seed;
    plan.member.assign(size_t(k), std::vector<uint8_t>(size_t(n), 0));

    std::vector<int> ids(static_cast<size_t>(n));
    for (int kk = 0; kk < k; ++kk) {
        Rng rng(mix_seed(seed, uint64_t(kk) + 0x5353u));
        std::iota(ids.begin(), ids.end(), 0);
        // partial Fisher-Yates: first m entries form a uniform m-subset
        for (int i = 0; i < m; ++i) {
            const int j = i + int(rng.index(uint64_t(n - i)));
            std::swap(ids[size_t(i)], ids[size_t(j)]);
            plan.member[size_t(kk)][size_t(ids[size_t(i)])] = 1;
        }
    }
    return plan;
}

}  // namespace memo::ensemble
