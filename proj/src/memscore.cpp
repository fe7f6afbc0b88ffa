#include "memo/memscore.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace memo::memscore {

std::vector<MemRecord> estimate_mem(const ensemble::CorrectnessMatrix& matrix,
                                    const ensemble::SubsamplePlan& plan) {
    if (matrix.n != plan.n || matrix.k != plan.k)
        throw ScoreError("estimate_mem: matrix dimensions do not match the subsample plan");
    int any_valid = 0;
    for (uint8_t v : matrix.col_valid) any_valid += v;
    if (any_valid == 0) throw ScoreError("estimate_mem: every column is masked");

    std::vector<MemRecord> records(size_t(plan.n));
    for (int i = 0; i < plan.n; ++i) {
        MemRecord& r = records[size_t(i)];
        r.example_id = i;
        int in_correct = 0, out_correct = 0;
        for (int k = 0; k < plan.k; ++k) {
            if (!matrix.col_valid[size_t(k)]) continue;
            const bool correct = matrix.at(i, k);
            if (plan.contains(k, i)) {
                ++r.n_in;
                in_correct += correct;
            } else {
                ++r.n_out;
                out_correct += correct;
            }
        }
        r.valid = r.n_in > 0 && r.n_out > 0;
        if (r.n_in > 0) r.in_acc = double(in_correct) / double(r.n_in);
        if (r.n_out > 0) r.out_acc = double(out_correct) / double(r.n_out);
        r.mem = r.in_acc - r.out_acc;
    }
    return records;
}

std::vector<double> cscore_point_mass(const ensemble::CorrectnessMatrix& matrix,
                                      const ensemble::SubsamplePlan& plan) {
    const auto records = estimate_mem(matrix, plan);
    std::vector<double> out(records.size());
    for (size_t i = 0; i < records.size(); ++i) out[i] = records[i].out_acc;
    return out;
}

Decomposition avg_decomposition(const std::vector<MemRecord>& records) {
    Decomposition d;
    for (const auto& r : records) {
        if (!r.valid) {
            ++d.n_invalid;
            continue;
        }
        ++d.n_valid;
        d.mean_in += r.in_acc;
        d.mean_out += r.out_acc;
        d.mean_mem += r.mem;
    }
    if (d.n_valid == 0) throw ScoreError("avg_decomposition: no valid records");
    d.mean_in /= d.n_valid;
    d.mean_out /= d.n_valid;
    d.mean_mem /= d.n_valid;
    return d;
}

void write_records_csv(const std::vector<MemRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ScoreError("cannot open " + path);
    out << "example_id,in_acc,out_acc,mem,n_in,n_out,valid\n";
    char buf[128];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%d,%d,%d\n", r.example_id, r.in_acc,
                      r.out_acc, r.mem, r.n_in, r.n_out, r.valid ? 1 : 0);
        out << buf;
    }
}

std::vector<MemRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScoreError("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<MemRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MemRecord r;
        int valid = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%d,%d,%d", &r.example_id, &r.in_acc,
                        &r.out_acc, &r.mem, &r.n_in, &r.n_out, &valid) != 7)
            throw ScoreError("bad record line: " + line);
        r.valid = valid != 0;
        records.push_back(r);
    }
    return records;
}

}  // namespace memo::memscore
