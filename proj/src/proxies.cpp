#include "memo/proxies.hpp"

#include <cstdio>
#include <fstream>

#include "memo/rng.hpp"

namespace memo::proxies {

double cprox(const std::vector<double>& trace_for_example) {
    if (trace_for_example.empty()) throw ProxyError("cprox: empty trace");
    double s = 0.0;
    for (double p : trace_for_example) s += p;
    return s / double(trace_for_example.size());
}

std::vector<double> cprox_all(const std::vector<std::vector<double>>& trace) {
    if (trace.empty()) throw ProxyError("cprox_all: empty trace");
    const size_t n = trace[0].size();
    std::vector<double> out(n, 0.0);
    for (const auto& row : trace) {
        if (row.size() != n) throw ProxyError("cprox_all: ragged trace");
        for (size_t i = 0; i < n; ++i) out[i] += row[i];
    }
    for (double& v : out) v /= double(trace.size());
    return out;
}

ProbeSet train_probes(const nn::TrainedModel& model, const data::LabeledDataset& probe_data,
                      uint64_t seed) {
    if (probe_data.size() == 0) throw ProxyError("train_probes: empty probe data");

    ProbeSet set;
    int first = probe_data.labels.empty() ? 0 : probe_data.labels[0];
    set.degenerate = true;
    for (int l : probe_data.labels)
        if (l != first) {
            set.degenerate = false;
            break;
        }

    const Mat x = probe_data.feature_matrix();
    const nn::ForwardResult fwd = nn::forward(model.spec, model.params, x);

    nn::OptimizerConfig probe_opt;
    probe_opt.peak_lr = 0.1;
    probe_opt.warmup_epochs = 0;
    probe_opt.schedule = nn::Schedule::step;
    probe_opt.decay_epochs = {};
    probe_opt.momentum = 0.9;
    probe_opt.nesterov = true;
    probe_opt.weight_decay = 0.0;
    probe_opt.batch_size = 64;
    probe_opt.epochs = 50;

    for (int l = 0; l < model.spec.depth(); ++l) {
        const Mat& h = fwd.hidden[size_t(l)];
        nn::ModelSpec probe_spec;
        probe_spec.input_dim = h.cols;
        probe_spec.num_classes = model.spec.num_classes;
        probe_spec.init_seed = mix_seed(seed, "probe_init" + std::to_string(l));

        nn::TrainData data;
        data.x = h;
        data.labels = probe_data.labels;
        const nn::TrainedModel probe = nn::train(probe_spec, probe_opt, nn::LossSpec{}, data,
                                                 nullptr, mix_seed(seed, "probe" + std::to_string(l)));
        set.specs.push_back(probe.spec);
        set.params.push_back(probe.params);
    }
    return set;
}

std::vector<std::vector<int>> probe_predictions(const ProbeSet& probes,
                                                const nn::TrainedModel& model, const Mat& x) {
    const nn::ForwardResult fwd = nn::forward(model.spec, model.params, x);
    std::vector<std::vector<int>> preds;
    for (size_t l = 0; l < probes.specs.size(); ++l)
        preds.push_back(nn::predict(probes.specs[l], probes.params[l], fwd.hidden[l]));
    std::vector<int> final_pred(size_t(x.rows));
    for (int i = 0; i < x.rows; ++i) final_pred[size_t(i)] = nn::predict_row(fwd.logits, i);
    preds.push_back(std::move(final_pred));
    return preds;
}

int prediction_depth(const std::vector<std::vector<int>>& per_probe_preds, int example_row) {
    const int P = int(per_probe_preds.size());
    const int final_pred = per_probe_preds[size_t(P - 1)][size_t(example_row)];
    int depth = P - 1;
    for (int l = P - 2; l >= 0; --l) {
        if (per_probe_preds[size_t(l)][size_t(example_row)] == final_pred)
            depth = l;
        else
            break;
    }
    return depth;
}

void write_proxy_csv(const std::vector<ProxyRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ProxyError("cannot open " + path);
    out << "example_id,cprox,pred_depth\n";
    char buf[96];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%d,%.9g,%d\n", r.example_id, r.cprox, r.pred_depth);
        out << buf;
    }
}

}  // namespace memo::proxies
