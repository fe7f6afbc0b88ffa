#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "memo/data.hpp"
#include "memo/nn.hpp"

namespace memo::proxies {

struct ProxyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Temporal mean of the true-label probability over one example's trace.
double cprox(const std::vector<double>& trace_for_example);

// Column-wise cprox over a full per-epoch trace (trace[t][i]).
std::vector<double> cprox_all(const std::vector<std::vector<double>>& trace);

struct ProxyRecord {
    int example_id = 0;
    double cprox = 0.0;
    int pred_depth = 0;
};

// One multinomial linear classifier per hidden layer; the probe at the
// output point is the model's own classifier. Probe points are indexed
// 0..P-1 from shallowest to output, P = depth + 1.
struct ProbeSet {
    std::vector<nn::ModelSpec> specs;   // one per hidden layer
    std::vector<nn::Params> params;
    bool degenerate = false;  // probe data carried a single class

    int probe_points() const { return int(specs.size()) + 1; }
};

// Trains probes on the model's hidden activations over probe_data with the
// shared SGD core (fixed 50-epoch budget, peak LR 0.1, no weight decay).
ProbeSet train_probes(const nn::TrainedModel& model, const data::LabeledDataset& probe_data,
                      uint64_t seed);

// Per-probe-point predictions for every row of x; the last row of the
// result is the model's own prediction.
std::vector<std::vector<int>> probe_predictions(const ProbeSet& probes,
                                                const nn::TrainedModel& model, const Mat& x);

// Smallest d such that probes d..P-1 all agree with the model's final
// prediction; the output probe guarantees existence.
int prediction_depth(const std::vector<std::vector<int>>& per_probe_preds, int example_row);

// CSV: example_id,cprox,pred_depth
void write_proxy_csv(const std::vector<ProxyRecord>& records, const std::string& path);

}  // namespace memo::proxies
