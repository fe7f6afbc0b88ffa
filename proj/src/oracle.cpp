#include <cmath>
#include <mutex>

#include "memo/memscore.hpp"
#include "memo/rng.hpp"

namespace memo::memscore {

std::vector<OracleRecord> exact_mem_oracle(const nn::ModelSpec& spec,
                                           const nn::OptimizerConfig& opt,
                                           const data::LabeledDataset& data,
                                           const std::vector<int>& targets,
                                           const OracleConfig& oracle, uint64_t seed,
                                           int workers) {
    if (oracle.repeats < 1) throw ScoreError("oracle: repeats must be >= 1");
    if (data.size() > oracle.max_n)
        throw ScoreError("oracle: dataset size " + std::to_string(data.size()) +
                         " exceeds max_n " + std::to_string(oracle.max_n));
    if (data.size() < 2) throw ScoreError("oracle: need at least 2 examples");
    for (int t : targets)
        if (t < 0 || t >= data.size()) throw ScoreError("oracle: target id out of range");

    const Mat all_x = data.feature_matrix();
    const int R = oracle.repeats;
    const int T = int(targets.size());

    // Condition 0 trains on the full S (shared by every target's in-term);
    // condition 1+t trains on S minus targets[t].
    std::vector<std::vector<uint8_t>> in_correct(size_t(T), std::vector<uint8_t>(size_t(R), 0));
    std::vector<std::vector<uint8_t>> out_correct(size_t(T), std::vector<uint8_t>(size_t(R), 0));
    std::string first_error;
    std::mutex error_mutex;

    ensemble::parallel_for((T + 1) * R, workers, [&](int job) {
        const int cond = job / R;
        const int rep = job % R;
        const int excluded = cond == 0 ? -1 : targets[size_t(cond - 1)];

        std::vector<int> ids;
        ids.reserve(size_t(data.size()));
        for (int i = 0; i < data.size(); ++i)
            if (i != excluded) ids.push_back(i);

        nn::TrainData train_data;
        train_data.x = data.feature_matrix(ids);
        train_data.labels.reserve(ids.size());
        for (int id : ids) train_data.labels.push_back(data.labels[size_t(id)]);
        // no trace: the oracle only needs final predictions

        const uint64_t run_seed =
            mix_seed(seed, "oracle_c" + std::to_string(excluded) + "_r" + std::to_string(rep));
        nn::ModelSpec run_spec = spec;
        run_spec.init_seed = mix_seed(run_seed, "init");
        try {
            const nn::TrainedModel model =
                nn::train(run_spec, opt, nn::LossSpec{}, train_data, nullptr, run_seed);
            const std::vector<int> preds = nn::predict(model.spec, model.params, all_x);
            if (cond == 0) {
                for (int t = 0; t < T; ++t) {
                    const int target = targets[size_t(t)];
                    in_correct[size_t(t)][size_t(rep)] =
                        preds[size_t(target)] == data.labels[size_t(target)] ? 1 : 0;
                }
            } else {
                const int target = excluded;
                out_correct[size_t(cond - 1)][size_t(rep)] =
                    preds[size_t(target)] == data.labels[size_t(target)] ? 1 : 0;
            }
        } catch (const nn::NumericalError& e) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (first_error.empty())
                first_error = std::string("oracle training failed (excluded=") +
                              std::to_string(excluded) + ", repeat=" + std::to_string(rep) +
                              "): " + e.what();
        }
    });

    if (!first_error.empty()) throw ScoreError(first_error);

    std::vector<OracleRecord> records(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        OracleRecord& r = records[size_t(t)];
        r.example_id = targets[size_t(t)];
        int ci = 0, co = 0;
        for (int rep = 0; rep < R; ++rep) {
            ci += in_correct[size_t(t)][size_t(rep)];
            co += out_correct[size_t(t)][size_t(rep)];
        }
        r.in_acc = double(ci) / double(R);
        r.out_acc = double(co) / double(R);
        r.mem = r.in_acc - r.out_acc;
        const double var =
            r.in_acc * (1.0 - r.in_acc) / double(R) + r.out_acc * (1.0 - r.out_acc) / double(R);
        r.half_width = 1.96 * std::sqrt(var);
    }
    return records;
}

}  // namespace memo::memscore
