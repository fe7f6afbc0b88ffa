#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memo/mat.hpp"

namespace memo::nn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a loss or update goes non-finite; the run is aborted rather
// than clamped so corrupted runs never reach the estimator.
struct NumericalError : std::runtime_error {
    int epoch;
    int step;
    NumericalError(int e, int s, const std::string& what)
        : std::runtime_error(what), epoch(e), step(s) {}
};

// Dense ReLU classifier. widths.size() hidden layers; widths may be empty
// (direct linear map). Equal fields produce bit-identical initial parameters.
struct ModelSpec {
    int input_dim = 0;
    int num_classes = 0;
    std::vector<int> widths;
    uint64_t init_seed = 0;

    int depth() const { return int(widths.size()); }
    bool operator==(const ModelSpec&) const = default;
};

void validate(const ModelSpec& spec);
int64_t param_count(const ModelSpec& spec);

// Layer l maps dims[l] -> dims[l+1]; w[l] is dims[l] x dims[l+1].
struct Params {
    std::vector<Mat> w;
    std::vector<std::vector<double>> b;

    int layers() const { return int(w.size()); }
};

// Fan-in-scaled uniform init, biases zero, seeded by spec.init_seed.
Params init_params(const ModelSpec& spec);

struct ForwardResult {
    Mat logits;
    // post-ReLU activations per hidden layer, retained for linear probes
    std::vector<Mat> hidden;
};

ForwardResult forward(const ModelSpec& spec, const Params& params, const Mat& batch);

// argmax with ties broken toward the smallest class index
int predict_row(const Mat& logits, int row);
std::vector<int> predict(const ModelSpec& spec, const Params& params, const Mat& batch);

enum class LossKind { one_hot, distill };

struct LossSpec {
    LossKind kind = LossKind::one_hot;
    double distill_weight = 0.0;  // w in [0,1]; ignored for one_hot
    double temperature = 1.0;     // T > 0; ignored for one_hot
};

// Loss value and gradients for one batch.
//   one_hot: mean softmax cross-entropy + (wd/2)*sum w^2
//   distill: (1-w)*CE(y) + w*T^2*KL(softmax(teacher/T) || softmax(student/T)),
//            batch mean, + weight decay. With w=0 the value is bit-equal to
//            the one_hot loss on the same batch.
double loss_and_grads(const ModelSpec& spec, const Params& params, const Mat& batch,
                      const std::vector<int>& labels, const LossSpec& loss_spec,
                      const Mat* teacher_logits, double weight_decay, Params& grads);

enum class Schedule { step, cosine };

struct OptimizerConfig {
    double peak_lr = 0.1;
    int warmup_epochs = 0;
    Schedule schedule = Schedule::step;
    double decay_factor = 0.1;        // step schedule only
    std::vector<int> decay_epochs;    // strictly increasing, < epochs
    double momentum = 0.0;            // in [0,1)
    bool nesterov = false;
    double weight_decay = 0.0;
    int batch_size = 32;
    int epochs = 0;
};

void validate(const OptimizerConfig& opt);

// Linear warmup to peak_lr over warmup_epochs, then the configured schedule.
// The cosine schedule reaches 0 at the final epoch.
double learning_rate_at(const OptimizerConfig& opt, int epoch);

struct TrainedModel {
    ModelSpec spec;
    Params params;
    // trace[t][i]: probability assigned to example i's dataset label after
    // epoch t, evaluated on the full dataset in inference mode
    std::vector<std::vector<double>> trace;
};

// Training data passed as dense matrices; `trace_x`/`trace_labels` is the
// full dataset the per-epoch trace is evaluated on (may differ from the
// training view). Pass empty trace_x to skip tracing.
struct TrainData {
    Mat x;
    std::vector<int> labels;
    Mat trace_x;
    std::vector<int> trace_labels;
};

// Minibatch SGD with momentum/Nesterov. Pure function of its arguments:
// init from spec.init_seed, batch order from `seed`. teacher_logits, when
// given, are the teacher's logits over the training view rows.
TrainedModel train(const ModelSpec& spec, const OptimizerConfig& opt, const LossSpec& loss_spec,
                   const TrainData& data, const Mat* teacher_logits, uint64_t seed);

}  // namespace memo::nn
