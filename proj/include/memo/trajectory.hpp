#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "memo/nn.hpp"

namespace memo::analysis {

struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Category { constant, increasing, decreasing, cap_shaped, other };

const char* category_name(Category c);

// Consecutive diffs quantised to {+,0,-} with deadband alpha, zeros dropped:
// empty -> constant; all + -> increasing; all - -> decreasing; one sign
// change from a + block to a - block -> cap_shaped; anything else -> other.
Category classify_trajectory(const std::vector<double>& scores, double alpha);

struct TrajectoryRecord {
    int example_id = 0;
    std::vector<double> scores;  // ladder order, small -> large
    Category category = Category::constant;
    double alpha = 0.0;
};

// Normalised fractions over the five categories; sums to 1 exactly.
std::array<double, 5> category_census(const std::vector<TrajectoryRecord>& trajectories);

struct HistogramReport {
    double lo = 0.0;
    double hi = 1.0;
    std::array<int, 10> counts{};
    int clamped = 0;  // scores outside [lo,hi], clamped into the end buckets
    int total = 0;

    double extreme_mass() const {
        return total == 0 ? 0.0 : double(counts[0] + counts[9]) / double(total);
    }
};

// 10 equal-width buckets over [lo,hi], last bucket right-closed.
HistogramReport histogram(const std::vector<double>& scores, double lo, double hi);

struct Correlation {
    double pearson = 0.0;
    double spearman = 0.0;
};

// Product-moment and rank correlation (ties get averaged ranks).
Correlation correlate(const std::vector<double>& a, const std::vector<double>& b);

// Accuracy of predicting `label` on x + eps, eps ~ N(0, sigma^2 I), for each
// sigma; n_per_sigma fresh draws per sigma, deterministic in seed.
std::vector<double> robustness_probe(const nn::ModelSpec& spec, const nn::Params& params,
                                     const std::vector<double>& example, int label,
                                     const std::vector<double>& sigmas, int n_per_sigma,
                                     uint64_t seed);

// CSV: example_id,s_0,...,s_{L-1},category
void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, const std::string& path);

}  // namespace memo::analysis
