#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memo/mat.hpp"

namespace memo::data {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Immutable after construction. ids are implicitly 0..N-1 in storage order.
// Features are float32; training converts to double per batch.
struct LabeledDataset {
    int num_classes = 0;
    int feature_dim = 0;
    std::vector<float> features;  // N x feature_dim, row-major
    std::vector<int> labels;
    std::vector<uint8_t> noise_flag;
    std::vector<int> original_labels;  // pre-flip labels, equal to labels where clean
    std::vector<int> outlier_ids;      // toy2d metadata
    std::vector<int> duplicate_ids;    // appended duplicate copies (tiny benchmark)
    std::string generator;             // provenance for the sidecar

    int size() const { return int(labels.size()); }
    const float* row(int i) const { return features.data() + size_t(i) * feature_dim; }

    Mat feature_matrix() const;                            // all rows as double
    Mat feature_matrix(const std::vector<int>& ids) const; // selected rows
};

struct Toy2DParams {
    double inner_radius = 1.0;
    double outer_radius_min = 1.5;
    double outer_radius_max = 2.0;
    int n_inner = 200;
    int n_outer = 200;
    int n_outliers = 5;
    double outlier_radius_frac = 0.5;
    uint64_t seed = 0;
};

// Binary task: class 0 uniform in the inner disc, class 1 uniform in the
// annulus plus n_outliers class-1 points inside radius
// outlier_radius_frac * inner_radius. Outlier ids land at the end and are
// recorded in outlier_ids.
LabeledDataset generate_toy2d(const Toy2DParams& params);

struct TwoGaussiansParams {
    int n = 64;  // total points, alternating classes
    double separation = 1.5;  // means at (+-separation, 0)
    double sigma = 1.0;
    uint64_t seed = 0;
};

LabeledDataset generate_two_gaussians(const TwoGaussiansParams& params);

// Flips exactly floor(fraction*N) uniformly chosen labels to a uniformly
// chosen *other* class, sets noise_flag on those, keeps originals in
// original_labels. fraction=0 returns the input unchanged.
LabeledDataset inject_label_noise(const LabeledDataset& data, double fraction, uint64_t seed);

// Appends copies of the given example ids (clean twins for the duplicate
// study); copies keep label/noise_flag and are listed in duplicate_ids.
LabeledDataset append_duplicates(const LabeledDataset& data, const std::vector<int>& ids);

// CSV with header "id,label,f0,...,f{d-1}". Malformed rows are rejected with
// their 1-based row number. noise metadata travels in a JSON sidecar.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& data, const std::string& path);
void save_sidecar(const LabeledDataset& data, const std::string& path);
void load_sidecar(LabeledDataset& data, const std::string& path);

}  // namespace memo::data
