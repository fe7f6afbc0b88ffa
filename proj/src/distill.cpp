#include "memo/distill.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace memo::analysis {

DistillComparison compare(const std::vector<memscore::MemRecord>& onehot_records,
                          const std::vector<memscore::MemRecord>& distilled_records, double tau) {
    if (onehot_records.size() != distilled_records.size())
        throw AnalysisError("compare: record lists cover different datasets");
    if (tau < 0.0) throw AnalysisError("compare: tau must be >= 0");

    DistillComparison cmp;
    cmp.tau = tau;
    for (size_t i = 0; i < onehot_records.size(); ++i) {
        const auto& a = onehot_records[i];
        const auto& b = distilled_records[i];
        if (a.example_id != b.example_id)
            throw AnalysisError("compare: record lists are not aligned by example id");
        if (!a.valid || !b.valid) continue;
        PairedDelta d;
        d.example_id = a.example_id;
        d.mem_onehot = a.mem;
        d.mem_distilled = b.mem;
        d.delta = b.mem - a.mem;
        if (d.delta <= -tau) cmp.reduced_ids.push_back(d.example_id);
        if (d.delta >= tau) cmp.increased_ids.push_back(d.example_id);
        cmp.deltas.push_back(d);
    }
    return cmp;
}

ReductionBreakdown reduction_breakdown(const DistillComparison& comparison,
                                       const std::vector<TrajectoryRecord>& trajectories) {
    std::map<int, Category> by_id;
    for (const auto& t : trajectories) by_id[t.example_id] = t.category;
    for (const auto& d : comparison.deltas)
        if (!by_id.count(d.example_id))
            throw AnalysisError("reduction_breakdown: trajectory missing for example " +
                                std::to_string(d.example_id));

    ReductionBreakdown out;
    std::array<int, 5> base_counts{};
    for (const auto& t : trajectories) base_counts[size_t(t.category)]++;
    for (size_t c = 0; c < 5; ++c)
        out.baseline[c] = double(base_counts[c]) / double(trajectories.size());

    out.reduced_count = int(comparison.reduced_ids.size());
    if (comparison.reduced_ids.empty()) {
        out.reduced_empty = true;
        return out;
    }
    std::array<int, 5> counts{};
    for (int id : comparison.reduced_ids) counts[size_t(by_id.at(id))]++;
    for (size_t c = 0; c < 5; ++c)
        out.reduced[c] = double(counts[c]) / double(comparison.reduced_ids.size());
    return out;
}

AccuracyDelta accuracy_decomposition_delta(
    const std::vector<memscore::MemRecord>& onehot_records,
    const std::vector<memscore::MemRecord>& distilled_records) {
    if (onehot_records.size() != distilled_records.size())
        throw AnalysisError("accuracy_decomposition_delta: record lists cover different datasets");
    const auto a = memscore::avg_decomposition(onehot_records);
    const auto b = memscore::avg_decomposition(distilled_records);
    AccuracyDelta d;
    d.d_in = b.mean_in - a.mean_in;
    d.d_out = b.mean_out - a.mean_out;
    d.d_mem = b.mean_mem - a.mean_mem;
    return d;
}

JointHistogram joint_histogram(const DistillComparison& comparison) {
    JointHistogram h;
    auto bucket = [](double v) {
        if (v < -1.0) return 0;
        if (v > 1.0) return 19;
        return std::min(19, int((v + 1.0) / 2.0 * 20.0));
    };
    for (const auto& d : comparison.deltas) {
        h.counts[size_t(bucket(d.mem_onehot))][size_t(bucket(d.mem_distilled))]++;
        ++h.total;
    }
    return h;
}

void write_comparison_csv(const DistillComparison& comparison, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw AnalysisError("cannot open " + path);
    out << "example_id,mem_onehot,mem_distilled,delta\n";
    char buf[128];
    for (const auto& d : comparison.deltas) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g\n", d.example_id, d.mem_onehot,
                      d.mem_distilled, d.delta);
        out << buf;
    }
}

}  // namespace memo::analysis
