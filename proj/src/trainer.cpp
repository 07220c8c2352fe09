#include "sdgam/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace sdgam {

namespace {

constexpr std::uint64_t kInitTag = 11;
constexpr std::uint64_t kRunTag = 12;

void check_range(bool ok, const char* field, const std::string& rule) {
    if (!ok) throw ContractError(std::string("config field '") + field + "' " + rule);
}

std::vector<Vector> rows_of(const Matrix& m) {
    std::vector<Vector> out;
    out.reserve(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

}  // namespace

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::no_aug_loss: return "no_aug_loss";
        case Ablation::no_adversarial: return "no_adversarial";
        case Ablation::no_concat: return "no_concat";
        case Ablation::no_test_memory: return "no_test_memory";
    }
    return "full";
}

Ablation ablation_from_string(const std::string& s) {
    for (Ablation a : all_ablations()) {
        if (to_string(a) == s) return a;
    }
    throw ContractError("unknown ablation '" + s + "'");
}

const std::vector<Ablation>& all_ablations() {
    static const std::vector<Ablation> all{Ablation::full, Ablation::no_aug_loss,
                                           Ablation::no_adversarial, Ablation::no_concat,
                                           Ablation::no_test_memory};
    return all;
}

void validate(const TrainConfig& cfg) {
    check_range(cfg.lambda_aug >= 0.0 && std::isfinite(cfg.lambda_aug), "lambda_aug", "must be >= 0");
    check_range(cfg.beta >= 0.0 && cfg.beta <= 1.0, "beta", "must lie in [0, 1]");
    check_range(cfg.gamma > 0.0 && cfg.gamma <= 1.0, "gamma", "must lie in (0, 1]");
    check_range(cfg.memory_ratio > 0.0 && cfg.memory_ratio <= 1.0, "memory_ratio", "must lie in (0, 1]");
    check_range(cfg.epochs >= 1, "epochs", "must be at least 1");
    check_range(cfg.warmup_epochs <= cfg.epochs, "warmup_epochs", "must not exceed epochs");
    check_range(cfg.batch_size >= 1, "batch_size", "must be at least 1");
    check_range(cfg.langevin.steps >= 1, "langevin.steps", "must be at least 1");
    check_range(cfg.langevin.eta0 > 0.0 && std::isfinite(cfg.langevin.eta0), "langevin.eta0", "must be > 0");
}

double effective_lambda(const TrainConfig& cfg) {
    return cfg.ablation == Ablation::no_aug_loss ? 0.0 : cfg.lambda_aug;
}

std::size_t effective_clusters(const TrainConfig& cfg, std::size_t classes) {
    return cfg.kmeans_clusters != 0 ? cfg.kmeans_clusters : std::max<std::size_t>(classes, 8);
}

InferenceMode inference_mode(const TrainConfig& cfg, bool bank_ready) {
    // Without the augmentation loss W_q, W_k and the right slot are never
    // trained on augmenting features, so the model is plain ERM.
    if (!bank_ready || effective_lambda(cfg) == 0.0) return InferenceMode::duplicated;
    switch (cfg.ablation) {
        case Ablation::no_test_memory: return InferenceMode::duplicated;
        case Ablation::no_concat: return InferenceMode::augmenting;
        default: return InferenceMode::memory;
    }
}

bool EpochMetrics::same_values(const EpochMetrics& o) const {
    return epoch == o.epoch && loss_cls == o.loss_cls && loss_aug == o.loss_aug &&
           train_accuracy == o.train_accuracy && test_accuracy == o.test_accuracy &&
           bank_size == o.bank_size;
}

Vector mix_labels(std::span<const double> y, std::span<const double> alpha,
                  const std::vector<Vector>& bank_labels, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ContractError("mix_labels: beta must lie in [0, 1]");
    if (alpha.size() != bank_labels.size()) throw ContractError("mix_labels: alpha/bank size mismatch");
    require_simplex(y, "mix_labels label");
    require_simplex(alpha, "mix_labels alpha");
    Vector out(y.size(), 0.0);
    for (std::size_t i = 0; i < bank_labels.size(); ++i) {
        if (bank_labels[i].size() != y.size()) throw ContractError("mix_labels: label length mismatch");
        require_simplex(bank_labels[i], "mix_labels bank label");
        axpy((1.0 - beta) * alpha[i], bank_labels[i], out);
    }
    axpy(beta, y, out);
    return out;
}

double loss_cls(const ModelParams& model, const Encoded& enc, std::span<const double> y,
                ModelParams& grad, double scale) {
    const Vector logits = head_forward_duplicated(model.head, enc.z);
    const double loss = cross_entropy(logits, y);
    if (scale == 0.0) return loss;
    Vector g = softmax(logits);
    axpy(-1.0, y, g);
    for (double& v : g) v *= scale;
    const ModelTape tape{enc.tape, enc.z, enc.z, true};
    model_backward(model.head, model.encoder, tape, g, {true, true}, grad.encoder, grad.head);
    return loss;
}

LossResult loss_cls(const ModelParams& model, std::span<const double> x, std::span<const double> y) {
    LossResult r{0.0, zeros_like(model)};
    r.value = loss_cls(model, encode(model.encoder, x), y, r.grad, 1.0);
    return r;
}

double loss_aug(const ModelParams& model, const Encoded& enc, std::span<const double> y,
                const MemoryBank& bank, const Matrix* keys, const AugOptions& options,
                ModelParams& grad, double scale) {
    if (bank.empty()) throw ContractError("loss_aug: memory bank is not initialized");
    // The query uses a detached copy of z; nothing below reaches the encoder
    // except the left head slot.
    const AttentionReadout readout = keys ? attention_read(enc.z, bank, model.proj, *keys)
                                          : attention_read(enc.z, bank, model.proj);
    const Vector target = mix_labels(y, readout.alpha, bank.labels, options.beta);
    const Vector logits = options.concat ? head_forward(model.head, enc.z, readout.augmenting)
                                         : head_forward_single(model.single_head, readout.augmenting);
    const double loss = cross_entropy(logits, target);
    if (scale == 0.0) return loss;

    Vector g = softmax(logits);
    axpy(-1.0, target, g);
    for (double& v : g) v *= scale;

    Vector d_aug;
    if (options.concat) {
        const HeadInputGrads slots = head_backward(model.head, enc.z, readout.augmenting, g, grad.head);
        encoder_backward(model.encoder, enc.tape, slots.left, grad.encoder);
        d_aug = slots.right;
    } else {
        add_outer(grad.single_head.weight, g, readout.augmenting);
        axpy(1.0, g, grad.single_head.bias);
        d_aug = matvec_transposed(model.single_head.weight, g);
    }
    Vector d_label;
    if (!options.detach_label_path) {
        // ∂ℓ/∂y′ = −log p, and y′ carries Σ α_i y_i with weight (1 − β).
        d_label = log_softmax(logits);
        for (double& v : d_label) v *= -(1.0 - options.beta) * scale;
    }
    attention_backward(readout, enc.z, bank, model.proj, d_aug, d_label, grad.proj);
    return loss;
}

LossResult loss_aug(const ModelParams& model, std::span<const double> x, std::span<const double> y,
                    const MemoryBank& bank, const AugOptions& options) {
    LossResult r{0.0, zeros_like(model)};
    r.value = loss_aug(model, encode(model.encoder, x), y, bank, nullptr, options, r.grad, 1.0);
    return r;
}

AugOptions aug_options(const TrainConfig& cfg) {
    return {cfg.beta, cfg.ablation != Ablation::no_concat, cfg.detach_label_path};
}

ModelShape effective_shape(const ModelShape& shape, const TrainConfig& cfg) {
    ModelShape s = shape;
    s.single_head = shape.single_head || cfg.ablation == Ablation::no_concat;
    return s;
}

TrainingState init_training(const TrainConfig& cfg, const ModelShape& shape,
                            const OptimizerConfig& optimizer) {
    validate(cfg);
    const RngStream root(cfg.seed);
    RngStream init_rng = root.fork(kInitTag);
    TrainingState st;
    st.model = init_model(effective_shape(shape, cfg), init_rng);
    st.optimizer = make_optimizer(optimizer, st.model);
    st.rng = root.fork(kRunTag);
    return st;
}

namespace {

void refresh_bank(TrainingState& st, const LabeledDataset& train, const std::vector<Vector>& labels,
                  const TrainConfig& cfg) {
    const std::size_t capacity = bank_capacity(cfg.memory_ratio, train.size());
    if (!st.bank) {
        std::vector<Vector> features;
        features.reserve(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            features.push_back(encode_features(st.model.encoder, train.inputs.row(i)));
        }
        st.bank = init_bank(features, labels, effective_clusters(cfg, train.classes()), capacity, st.rng);
    }
    const std::size_t r = eviction_count(cfg.gamma, st.bank->size());
    std::vector<Vector> fresh;
    std::vector<Vector> fresh_labels;
    for (std::size_t idx : sample_without_replacement(train.size(), r, st.rng)) {
        Vector z = encode_features(st.model.encoder, train.inputs.row(idx));
        if (cfg.ablation != Ablation::no_adversarial) {
            z = langevin_generate(z, labels[idx], st.model.head, cfg.langevin, st.rng);
        }
        fresh.push_back(std::move(z));
        fresh_labels.push_back(labels[idx]);
    }
    BankUpdateRecord record;
    record.entropies_before = bank_entropies(*st.bank, st.model.head);
    record.fresh_count = fresh.size();
    UpdateReport report;
    st.bank = update_bank(*st.bank, fresh, fresh_labels, st.model.head, cfg.gamma, st.rng, &report);
    record.evicted = std::move(report.evicted);
    st.last_update = std::move(record);
}

}  // namespace

EpochMetrics train_epoch(TrainingState& st, const LabeledDataset& train,
                         const std::vector<LabeledDataset>& tests, const TrainConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    validate_dataset(train);
    if (train.input_dim() != st.model.encoder.input_dim() || train.classes() != st.model.head.classes()) {
        throw ContractError("train_epoch: dataset shape does not match the model");
    }
    const std::vector<Vector> labels = rows_of(train.labels);
    st.optimizer.epoch = st.epoch;

    const bool warmup = st.epoch < cfg.warmup_epochs;
    if (!warmup) refresh_bank(st, train, labels, cfg);

    const double lambda = effective_lambda(cfg);
    const AugOptions aug = aug_options(cfg);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, st.rng);

    double sum_cls = 0.0, sum_aug = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const double inv = 1.0 / static_cast<double>(end - start);
        ModelParams grad = zeros_like(st.model);
        std::optional<Matrix> keys;
        if (st.bank) keys = project_keys(*st.bank, st.model.proj);
        double batch_cls = 0.0, batch_aug = 0.0;
        for (std::size_t k = start; k < end; ++k) {
            const std::size_t i = order[k];
            const Encoded enc = encode(st.model.encoder, train.inputs.row(i));
            batch_cls += loss_cls(st.model, enc, labels[i], grad, inv);
            if (st.bank) {
                batch_aug += loss_aug(st.model, enc, labels[i], *st.bank, &*keys, aug, grad, lambda * inv);
            }
        }
        const double total = batch_cls + lambda * batch_aug;
        if (!std::isfinite(total)) {
            throw NumericError("non-finite loss in epoch " + std::to_string(st.epoch + 1) + ", batch " +
                               std::to_string(batch_index));
        }
        sum_cls += batch_cls;
        sum_aug += batch_aug;
        sgd_step(st.model, grad, st.optimizer);
    }
    if (st.bank) validate_bank(*st.bank);

    EpochMetrics m;
    m.epoch = st.epoch + 1;
    m.loss_cls = sum_cls / static_cast<double>(train.size());
    m.loss_aug = sum_aug / static_cast<double>(train.size());
    const InferenceMode mode = inference_mode(cfg, st.bank.has_value());
    const MemoryBank* bank = st.bank ? &*st.bank : nullptr;
    m.train_accuracy = accuracy(train, st.model, bank, mode);
    for (const auto& t : tests) m.test_accuracy.push_back(accuracy(t, st.model, bank, mode));
    m.bank_size = st.bank ? st.bank->size() : 0;
    ++st.epoch;
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return m;
}

void continue_training(TrainingState& state, const LabeledDataset& train,
                       const std::vector<LabeledDataset>& tests, const TrainConfig& cfg,
                       std::size_t until_epoch, std::vector<EpochMetrics>& history,
                       const EpochObserver& observer) {
    while (state.epoch < until_epoch) {
        history.push_back(train_epoch(state, train, tests, cfg));
        if (observer) observer(state, history.back());
    }
}

void validate_run(const LabeledDataset& train, const std::vector<LabeledDataset>& tests,
                  const TrainConfig& cfg, const ModelShape& shape) {
    validate(cfg);
    validate_dataset(train);
    for (const auto& t : tests) {
        validate_dataset(t);
        if (t.input_dim() != train.input_dim() || t.classes() != train.classes()) {
            throw ContractError("test domain '" + t.name + "' does not match the training data's dimensions");
        }
    }
    const std::size_t capacity = bank_capacity(cfg.memory_ratio, train.size());
    if (capacity == 0 || capacity > train.size()) {
        throw ContractError("config field 'memory_ratio' gives a bank size of " + std::to_string(capacity) +
                            " for " + std::to_string(train.size()) + " training rows");
    }
    if (effective_clusters(cfg, train.classes()) > train.size()) {
        throw ContractError("config field 'kmeans_clusters' exceeds the training set size");
    }
    if (shape.input_dim != train.input_dim() || shape.classes != train.classes()) {
        throw ContractError("model shape (d_x=" + std::to_string(shape.input_dim) + ", N_c=" +
                            std::to_string(shape.classes) + ") does not match the training data (d_x=" +
                            std::to_string(train.input_dim()) + ", N_c=" + std::to_string(train.classes()) + ")");
    }
}

TrainingRun run_training(const LabeledDataset& train, const std::vector<LabeledDataset>& tests,
                         const TrainConfig& cfg, const ModelShape& shape,
                         const OptimizerConfig& optimizer, const EpochObserver& observer) {
    validate_run(train, tests, cfg, shape);
    TrainingRun run{init_training(cfg, shape, optimizer), {}};
    continue_training(run.state, train, tests, cfg, cfg.epochs, run.history, observer);
    return run;
}

}  // namespace sdgam
