#include "memo/nn.hpp"

#include <cmath>
#include <numeric>

#include "memo/kernels.hpp"
#include "memo/rng.hpp"

namespace memo::nn {

void validate(const ModelSpec& spec) {
    if (spec.input_dim < 1) throw ConfigError("ModelSpec: input_dim must be >= 1");
    if (spec.num_classes < 1) throw ConfigError("ModelSpec: num_classes must be >= 1");
    for (int w : spec.widths)
        if (w < 1) throw ConfigError("ModelSpec: all hidden widths must be >= 1");
}

int64_t param_count(const ModelSpec& spec) {
    int64_t n = 0;
    int prev = spec.input_dim;
    for (int w : spec.widths) {
        n += int64_t(prev) * w + w;
        prev = w;
    }
    n += int64_t(prev) * spec.num_classes + spec.num_classes;
    return n;
}

static std::vector<int> layer_dims(const ModelSpec& spec) {
    std::vector<int> dims;
    dims.push_back(spec.input_dim);
    for (int w : spec.widths) dims.push_back(w);
    dims.push_back(spec.num_classes);
    return dims;
}

Params init_params(const ModelSpec& spec) {
    validate(spec);
    Rng rng(mix_seed(spec.init_seed, "init_params"));
    const auto dims = layer_dims(spec);
    Params p;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const double s = 1.0 / std::sqrt(double(fan_in));
        Mat w(dims[l], dims[l + 1]);
        for (double& v : w.v) v = rng.uniform(-s, s);
        p.w.push_back(std::move(w));
        p.b.emplace_back(size_t(dims[l + 1]), 0.0);
    }
    return p;
}

ForwardResult forward(const ModelSpec& spec, const Params& params, const Mat& batch) {
    if (batch.cols != spec.input_dim)
        throw ConfigError("forward: batch has " + std::to_string(batch.cols) +
                          " features, model expects " + std::to_string(spec.input_dim));
    ForwardResult r;
    const Mat* cur = &batch;
    Mat pre;
    for (int l = 0; l < spec.depth(); ++l) {
        kernels::linear_forward(*cur, params.w[l], params.b[l], pre);
        Mat h;
        kernels::relu(pre, h);
        r.hidden.push_back(std::move(h));
        cur = &r.hidden.back();
    }
    kernels::linear_forward(*cur, params.w[spec.depth()], params.b[spec.depth()], r.logits);
    return r;
}

int predict_row(const Mat& logits, int row) {
    const double* z = logits.row(row);
    int best = 0;
    for (int j = 1; j < logits.cols; ++j)
        if (z[j] > z[best]) best = j;
    return best;
}

std::vector<int> predict(const ModelSpec& spec, const Params& params, const Mat& batch) {
    const Mat logits = forward(spec, params, batch).logits;
    std::vector<int> out(size_t(batch.rows));
    for (int i = 0; i < batch.rows; ++i) out[size_t(i)] = predict_row(logits, i);
    return out;
}

namespace {

// dLoss/dLogits for the one-hot branch: (softmax - onehot)/B
void ce_logit_grad(const Mat& probs, const std::vector<int>& labels, Mat& dz) {
    const int B = probs.rows, C = probs.cols;
    dz = probs;
    const double inv = 1.0 / double(B);
    for (int i = 0; i < B; ++i) {
        dz.at(i, labels[size_t(i)]) -= 1.0;
        for (int j = 0; j < C; ++j) dz.at(i, j) *= inv;
    }
}

double ce_loss(const Mat& probs, const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < probs.rows; ++i) {
        double p = probs.at(i, labels[size_t(i)]);
        total += -std::log(p > 1e-300 ? p : 1e-300);
    }
    return total / double(probs.rows);
}

double weight_decay_term(const Params& params, double wd, Params* grads) {
    if (wd == 0.0) return 0.0;
    double sq = 0.0;
    for (size_t l = 0; l < params.w.size(); ++l) {
        for (size_t i = 0; i < params.w[l].size(); ++i) {
            const double v = params.w[l].v[i];
            sq += v * v;
            if (grads) grads->w[l].v[i] += wd * v;
        }
        // biases excluded from decay
    }
    return 0.5 * wd * sq;
}

}  // namespace

double loss_and_grads(const ModelSpec& spec, const Params& params, const Mat& batch,
                      const std::vector<int>& labels, const LossSpec& loss_spec,
                      const Mat* teacher_logits, double weight_decay, Params& grads) {
    if (labels.size() != size_t(batch.rows))
        throw ConfigError("loss_and_grads: label count does not match batch rows");
    const bool distill = loss_spec.kind == LossKind::distill;
    if (distill && teacher_logits == nullptr)
        throw ConfigError("loss_and_grads: distill loss requires teacher logits");

    ForwardResult fwd = forward(spec, params, batch);
    const int B = batch.rows;
    if (distill && !teacher_logits->same_shape(fwd.logits))
        throw ConfigError("loss_and_grads: teacher logits shape mismatch");

    Mat probs;
    kernels::softmax_rows(fwd.logits, probs);

    double loss = 0.0;
    Mat dz;
    if (!distill) {
        loss = ce_loss(probs, labels);
        ce_logit_grad(probs, labels, dz);
    } else {
        const double w = loss_spec.distill_weight;
        const double T = loss_spec.temperature;
        loss = (1.0 - w) * ce_loss(probs, labels);
        ce_logit_grad(probs, labels, dz);
        for (double& g : dz.v) g *= (1.0 - w);
        if (w != 0.0) {
            // KL(softmax(t/T) || softmax(s/T)), batch mean, scaled by w*T^2.
            // Computed as sum p*(log p - log q) so identical distributions
            // give exactly zero.
            Mat ts(B, fwd.logits.cols), ss(B, fwd.logits.cols);
            for (size_t i = 0; i < ts.size(); ++i) {
                ts.v[i] = teacher_logits->v[i] / T;
                ss.v[i] = fwd.logits.v[i] / T;
            }
            Mat tp, sp;
            kernels::softmax_rows(ts, tp);
            kernels::softmax_rows(ss, sp);
            double kl = 0.0;
            for (int i = 0; i < B; ++i) {
                for (int j = 0; j < tp.cols; ++j) {
                    const double p = tp.at(i, j);
                    if (p <= 0.0) continue;
                    const double q = sp.at(i, j);
                    kl += p * (std::log(p) - std::log(q > 1e-300 ? q : 1e-300));
                }
            }
            loss += w * T * T * kl / double(B);
            // d/ds of the KL term: w*T*(softmax(s/T) - softmax(t/T))/B
            const double scale = w * T / double(B);
            for (size_t i = 0; i < sp.size(); ++i) dz.v[i] += scale * (sp.v[i] - tp.v[i]);
        }
    }

    // Backprop through the layers.
    grads.w.assign(params.w.size(), Mat());
    grads.b.assign(params.b.size(), {});
    for (size_t l = 0; l < params.w.size(); ++l) {
        grads.w[l] = Mat(params.w[l].rows, params.w[l].cols);
        grads.b[l].assign(params.b[l].size(), 0.0);
    }
    Mat delta = std::move(dz);
    for (int l = spec.depth(); l >= 0; --l) {
        const Mat& input = (l == 0) ? batch : fwd.hidden[size_t(l - 1)];
        kernels::linear_backward_params(input, delta, grads.w[size_t(l)], grads.b[size_t(l)]);
        if (l > 0) {
            Mat dh;
            kernels::linear_backward_input(delta, params.w[size_t(l)], dh);
            kernels::relu_backward(fwd.hidden[size_t(l - 1)], dh, delta);
        }
    }

    loss += weight_decay_term(params, weight_decay, &grads);
    if (!std::isfinite(loss)) throw NumericalError(-1, -1, "non-finite loss");
    return loss;
}

void validate(const OptimizerConfig& opt) {
    if (opt.peak_lr <= 0.0) throw ConfigError("OptimizerConfig: peak_lr must be positive");
    if (opt.warmup_epochs < 0) throw ConfigError("OptimizerConfig: warmup_epochs must be >= 0");
    if (opt.momentum < 0.0 || opt.momentum >= 1.0)
        throw ConfigError("OptimizerConfig: momentum must be in [0,1)");
    if (opt.weight_decay < 0.0) throw ConfigError("OptimizerConfig: weight_decay must be >= 0");
    if (opt.batch_size < 1) throw ConfigError("OptimizerConfig: batch_size must be >= 1");
    if (opt.epochs < 0) throw ConfigError("OptimizerConfig: epochs must be >= 0");
    if (opt.schedule == Schedule::step) {
        int prev = -1;
        for (int e : opt.decay_epochs) {
            if (e <= prev) throw ConfigError("OptimizerConfig: decay_epochs must be strictly increasing");
            if (e >= opt.epochs && opt.epochs > 0)
                throw ConfigError("OptimizerConfig: decay_epochs must be < epochs");
            prev = e;
        }
        if (opt.decay_factor <= 0.0)
            throw ConfigError("OptimizerConfig: decay_factor must be positive");
    }
}

double learning_rate_at(const OptimizerConfig& opt, int epoch) {
    if (epoch < opt.warmup_epochs)
        return opt.peak_lr * double(epoch + 1) / double(opt.warmup_epochs);
    if (opt.schedule == Schedule::step) {
        double lr = opt.peak_lr;
        for (int e : opt.decay_epochs)
            if (epoch >= e) lr *= opt.decay_factor;
        return lr;
    }
    // cosine: peak at the first post-warmup epoch, 0 at the last epoch
    const int lo = opt.warmup_epochs;
    const int hi = opt.epochs - 1;
    if (hi <= lo) return 0.0;
    const double t = double(epoch - lo) / double(hi - lo);
    return 0.5 * opt.peak_lr * (1.0 + std::cos(3.14159265358979323846 * t));
}

TrainedModel train(const ModelSpec& spec, const OptimizerConfig& opt, const LossSpec& loss_spec,
                   const TrainData& data, const Mat* teacher_logits, uint64_t seed) {
    validate(spec);
    validate(opt);
    if (data.x.rows == 0) throw ConfigError("train: empty training data");
    if (loss_spec.kind == LossKind::distill) {
        if (teacher_logits == nullptr) throw ConfigError("train: distill loss requires a teacher");
        if (teacher_logits->rows != data.x.rows || teacher_logits->cols != spec.num_classes)
            throw ConfigError("train: teacher logits do not cover the training view");
    }

    TrainedModel model;
    model.spec = spec;
    model.params = init_params(spec);

    const int N = data.x.rows;
    Rng shuffle_rng(mix_seed(seed, "batch_order"));
    std::vector<int> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), 0);

    Params velocity;
    velocity.w.reserve(model.params.w.size());
    for (size_t l = 0; l < model.params.w.size(); ++l) {
        velocity.w.emplace_back(model.params.w[l].rows, model.params.w[l].cols);
        velocity.b.emplace_back(model.params.b[l].size(), 0.0);
    }

    Params grads;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        const double lr = learning_rate_at(opt, epoch);
        shuffle_rng.shuffle(order);
        const int steps = (N + opt.batch_size - 1) / opt.batch_size;
        for (int step = 0; step < steps; ++step) {
            const int begin = step * opt.batch_size;
            const int end = std::min(N, begin + opt.batch_size);
            const int B = end - begin;
            Mat bx(B, data.x.cols);
            std::vector<int> by(static_cast<size_t>(B));
            Mat bt;
            if (teacher_logits) bt = Mat(B, teacher_logits->cols);
            for (int i = 0; i < B; ++i) {
                const int src = order[size_t(begin + i)];
                std::copy(data.x.row(src), data.x.row(src) + data.x.cols, bx.row(i));
                by[size_t(i)] = data.labels[size_t(src)];
                if (teacher_logits)
                    std::copy(teacher_logits->row(src), teacher_logits->row(src) + bt.cols,
                              bt.row(i));
            }
            double loss;
            try {
                loss = loss_and_grads(spec, model.params, bx, by, loss_spec,
                                      teacher_logits ? &bt : nullptr, opt.weight_decay, grads);
            } catch (const NumericalError&) {
                throw NumericalError(epoch, step, "non-finite loss at epoch " +
                                                      std::to_string(epoch) + " step " +
                                                      std::to_string(step));
            }
            (void)loss;
            // SGD with (Nesterov) momentum: v = mu*v + g; step g + mu*v or v
            for (size_t l = 0; l < model.params.w.size(); ++l) {
                auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                                  std::vector<double>& v) {
                    for (size_t i = 0; i < p.size(); ++i) {
                        if (opt.momentum != 0.0) {
                            v[i] = opt.momentum * v[i] + g[i];
                            p[i] -= lr * (opt.nesterov ? g[i] + opt.momentum * v[i] : v[i]);
                        } else {
                            p[i] -= lr * g[i];
                        }
                    }
                };
                update(model.params.w[l].v, grads.w[l].v, velocity.w[l].v);
                update(model.params.b[l], grads.b[l], velocity.b[l]);
            }
        }
        if (data.trace_x.rows > 0) {
            const Mat logits = forward(spec, model.params, data.trace_x).logits;
            Mat probs;
            kernels::softmax_rows(logits, probs);
            std::vector<double> row(size_t(data.trace_x.rows));
            for (int i = 0; i < data.trace_x.rows; ++i)
                row[size_t(i)] = probs.at(i, data.trace_labels[size_t(i)]);
            model.trace.push_back(std::move(row));
        }
    }
    return model;
}

}  // namespace memo::nn
