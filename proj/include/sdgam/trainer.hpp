#pragma once

// The training loop: warm-up on the duplicated-feature loss, memory
// initialization, per-epoch adversarial refresh, and the combined
// classification + augmentation objective.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdgam/data.hpp"
#include "sdgam/membank.hpp"
#include "sdgam/model.hpp"
#include "sdgam/predict.hpp"

namespace sdgam {

enum class Ablation { full, no_aug_loss, no_adversarial, no_concat, no_test_memory };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);
const std::vector<Ablation>& all_ablations();

struct TrainConfig {
    double lambda_aug = 1.0;
    double beta = 0.5;
    double gamma = 0.7;
    double memory_ratio = 0.1;  // r_m
    std::size_t warmup_epochs = 2;
    std::size_t epochs = 30;  // total, warm-up included
    std::size_t batch_size = 32;
    Ablation ablation = Ablation::full;
    LangevinConfig langevin;
    std::size_t kmeans_clusters = 0;  // 0: max(N_c, 8)
    std::uint64_t seed = 1;
    /// Stop the augmentation-loss gradient that reaches W_q, W_k through the
    /// mixed label's dependence on the attention weights.
    bool detach_label_path = false;
};

/// Throws ContractError naming the first offending field.
void validate(const TrainConfig& cfg);

/// λ_aug actually applied: zero for the no_aug_loss ablation.
double effective_lambda(const TrainConfig& cfg);
std::size_t effective_clusters(const TrainConfig& cfg, std::size_t classes);
/// Inference mode used for evaluation under this configuration.
InferenceMode inference_mode(const TrainConfig& cfg, bool bank_ready);

struct EpochMetrics {
    std::size_t epoch = 0;  // one-based
    double loss_cls = 0.0;
    double loss_aug = 0.0;
    double train_accuracy = 0.0;
    std::vector<double> test_accuracy;
    std::size_t bank_size = 0;
    double wall_ms = 0.0;

    /// Equality over everything except wall time.
    bool same_values(const EpochMetrics& other) const;
};

/// y′ = β·y + (1 − β)·Σ α_i y_i.
Vector mix_labels(std::span<const double> y, std::span<const double> alpha,
                  const std::vector<Vector>& bank_labels, double beta);

struct AugOptions {
    double beta = 0.5;
    bool concat = true;  // false: single-input head on the augmenting feature
    bool detach_label_path = false;
};

struct LossResult {
    double value = 0.0;
    ModelParams grad;
};

/// ℓ_ce(h([z; z]), y) for an encoded instance. Adds scale·∇ into grad.
double loss_cls(const ModelParams& model, const Encoded& enc, std::span<const double> y,
                ModelParams& grad, double scale);
LossResult loss_cls(const ModelParams& model, std::span<const double> x, std::span<const double> y);

/// ℓ_ce(h([z; g(z̄)]), y′) for an encoded instance; the attention query is
/// detached from the encoder. Adds scale·∇ into grad; scale == 0 skips the
/// backward pass. keys may be null.
double loss_aug(const ModelParams& model, const Encoded& enc, std::span<const double> y,
                const MemoryBank& bank, const Matrix* keys, const AugOptions& options,
                ModelParams& grad, double scale);
LossResult loss_aug(const ModelParams& model, std::span<const double> x, std::span<const double> y,
                    const MemoryBank& bank, const AugOptions& options);

AugOptions aug_options(const TrainConfig& cfg);

struct BankUpdateRecord {
    Vector entropies_before;
    std::vector<std::size_t> evicted;
    std::size_t fresh_count = 0;
};

struct TrainingState {
    ModelParams model;
    std::optional<MemoryBank> bank;
    OptimizerState optimizer;
    RngStream rng;
    std::size_t epoch = 0;  // completed epochs
    std::optional<BankUpdateRecord> last_update;
};

ModelShape effective_shape(const ModelShape& shape, const TrainConfig& cfg);
TrainingState init_training(const TrainConfig& cfg, const ModelShape& shape,
                            const OptimizerConfig& optimizer);

/// One epoch: bank maintenance (after warm-up), a shuffled minibatch pass,
/// and evaluation. Throws NumericError naming the batch on a non-finite loss.
EpochMetrics train_epoch(TrainingState& state, const LabeledDataset& train,
                         const std::vector<LabeledDataset>& tests, const TrainConfig& cfg);

using EpochObserver = std::function<void(const TrainingState&, const EpochMetrics&)>;

struct TrainingRun {
    TrainingState state;
    std::vector<EpochMetrics> history;
};

/// Trains until state.epoch == until_epoch.
void continue_training(TrainingState& state, const LabeledDataset& train,
                       const std::vector<LabeledDataset>& tests, const TrainConfig& cfg,
                       std::size_t until_epoch, std::vector<EpochMetrics>& history,
                       const EpochObserver& observer = {});

/// Throws ContractError if the config cannot run on this data: bank
/// capacity, cluster count, or model shape.
void validate_run(const LabeledDataset& train, const std::vector<LabeledDataset>& tests,
                  const TrainConfig& cfg, const ModelShape& shape);

/// Full run from fresh parameters. Refuses to start on an invalid config.
TrainingRun run_training(const LabeledDataset& train, const std::vector<LabeledDataset>& tests,
                         const TrainConfig& cfg, const ModelShape& shape,
                         const OptimizerConfig& optimizer, const EpochObserver& observer = {});

}  // namespace sdgam
