#include "memo/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "memo/rng.hpp"

namespace memo::analysis {

const char* category_name(Category c) {
    switch (c) {
        case Category::constant: return "constant";
        case Category::increasing: return "increasing";
        case Category::decreasing: return "decreasing";
        case Category::cap_shaped: return "cap_shaped";
        case Category::other: return "other";
    }
    return "?";
}

Category classify_trajectory(const std::vector<double>& scores, double alpha) {
    if (scores.size() < 2) throw AnalysisError("classify_trajectory: need at least 2 scores");
    if (alpha < 0.0) throw AnalysisError("classify_trajectory: alpha must be >= 0");

    std::vector<int> signs;  // nonzero quantised diffs
    for (size_t i = 0; i + 1 < scores.size(); ++i) {
        const double d = scores[i + 1] - scores[i];
        if (std::abs(d) <= alpha) continue;
        signs.push_back(d > 0.0 ? 1 : -1);
    }
    if (signs.empty()) return Category::constant;
    const bool any_up = std::any_of(signs.begin(), signs.end(), [](int s) { return s > 0; });
    const bool any_down = std::any_of(signs.begin(), signs.end(), [](int s) { return s < 0; });
    if (!any_down) return Category::increasing;
    if (!any_up) return Category::decreasing;
    // cap: a single change of sign, + block then - block
    int changes = 0;
    for (size_t i = 0; i + 1 < signs.size(); ++i)
        if (signs[i] != signs[i + 1]) ++changes;
    if (changes == 1 && signs.front() > 0 && signs.back() < 0) return Category::cap_shaped;
    return Category::other;
}

std::array<double, 5> category_census(const std::vector<TrajectoryRecord>& trajectories) {
    if (trajectories.empty()) throw AnalysisError("category_census: empty input");
    std::array<int, 5> counts{};
    for (const auto& t : trajectories) counts[size_t(t.category)]++;
    std::array<double, 5> fractions{};
    for (size_t i = 0; i < 5; ++i)
        fractions[i] = double(counts[i]) / double(trajectories.size());
    return fractions;
}

HistogramReport histogram(const std::vector<double>& scores, double lo, double hi) {
    if (!(lo < hi)) throw AnalysisError("histogram: need lo < hi");
    HistogramReport h;
    h.lo = lo;
    h.hi = hi;
    h.total = int(scores.size());
    const double width = (hi - lo) / 10.0;
    for (double s : scores) {
        int bucket;
        if (s < lo) {
            bucket = 0;
            ++h.clamped;
        } else if (s > hi) {
            bucket = 9;
            ++h.clamped;
        } else {
            bucket = std::min(9, int((s - lo) / width));
        }
        ++h.counts[size_t(bucket)];
    }
    return h;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;  // 1-based average rank
        for (size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson_of(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(n);
    mb /= double(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw AnalysisError("correlate: zero variance input");
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

Correlation correlate(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw AnalysisError("correlate: length mismatch");
    if (a.size() < 3) throw AnalysisError("correlate: need at least 3 points");
    Correlation c;
    c.pearson = pearson_of(a, b);
    c.spearman = pearson_of(average_ranks(a), average_ranks(b));
    return c;
}

std::vector<double> robustness_probe(const nn::ModelSpec& spec, const nn::Params& params,
                                     const std::vector<double>& example, int label,
                                     const std::vector<double>& sigmas, int n_per_sigma,
                                     uint64_t seed) {
    if (n_per_sigma < 1) throw AnalysisError("robustness_probe: n_per_sigma must be >= 1");
    if (int(example.size()) != spec.input_dim)
        throw AnalysisError("robustness_probe: example dimension mismatch");

    std::vector<double> acc;
    acc.reserve(sigmas.size());
    for (size_t s = 0; s < sigmas.size(); ++s) {
        Rng rng(mix_seed(seed, "robustness_sigma" + std::to_string(s)));
        Mat batch(n_per_sigma, spec.input_dim);
        for (int i = 0; i < n_per_sigma; ++i)
            for (int j = 0; j < spec.input_dim; ++j)
                batch.at(i, j) = example[size_t(j)] + sigmas[s] * rng.normal();
        const std::vector<int> preds = nn::predict(spec, params, batch);
        int correct = 0;
        for (int p : preds) correct += p == label;
        acc.push_back(double(correct) / double(n_per_sigma));
    }
    return acc;
}

void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw AnalysisError("cannot open " + path);
    out << "example_id";
    if (!records.empty())
        for (size_t i = 0; i < records[0].scores.size(); ++i) out << ",s_" << i;
    out << ",category\n";
    char buf[32];
    for (const auto& r : records) {
        out << r.example_id;
        for (double s : r.scores) {
            std::snprintf(buf, sizeof buf, "%.9g", s);
            out << ',' << buf;
        }
        out << ',' << category_name(r.category) << "\n";
    }
}

}  // namespace memo::analysis
