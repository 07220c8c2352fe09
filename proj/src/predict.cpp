#include "sdgam/predict.hpp"

#include <optional>

namespace sdgam {

namespace {

Vector logits_for(std::span<const double> z, const ModelParams& model, const MemoryBank* bank,
                  InferenceMode mode, const Matrix* keys) {
    if (mode == InferenceMode::duplicated) return head_forward_duplicated(model.head, z);
    if (bank == nullptr || bank->empty()) {
        throw ContractError("predict: memory inference requested but no memory bank is loaded");
    }
    const AttentionReadout r =
        keys ? attention_read(z, *bank, model.proj, *keys) : attention_read(z, *bank, model.proj);
    if (mode == InferenceMode::augmenting) {
        if (model.single_head.weight.empty()) {
            throw ContractError("predict: model has no single-input head");
        }
        return head_forward_single(model.single_head, r.augmenting);
    }
    return head_forward(model.head, z, r.augmenting);
}

}  // namespace

Prediction predict(std::span<const double> x, const ModelParams& model, const MemoryBank* bank,
                   InferenceMode mode) {
    const Vector z = encode_features(model.encoder, x);
    Vector logits = logits_for(z, model, bank, mode, nullptr);
    const std::size_t label = argmax(logits);
    return {label, std::move(logits)};
}

Prediction predict(std::span<const double> x, const ModelParams& model, const MemoryBank* bank,
                   bool use_memory) {
    return predict(x, model, bank, use_memory ? InferenceMode::memory : InferenceMode::duplicated);
}

double accuracy(const LabeledDataset& data, const ModelParams& model, const MemoryBank* bank,
                InferenceMode mode) {
    if (data.size() == 0) throw ContractError("accuracy: empty dataset '" + data.name + "'");
    if (data.input_dim() != model.encoder.input_dim()) {
        throw ContractError("accuracy: dataset '" + data.name + "' has " +
                            std::to_string(data.input_dim()) + " features but the model expects " +
                            std::to_string(model.encoder.input_dim()));
    }
    if (data.classes() != model.head.classes()) {
        throw ContractError("accuracy: dataset '" + data.name + "' has " +
                            std::to_string(data.classes()) + " classes but the model has " +
                            std::to_string(model.head.classes()));
    }
    std::optional<Matrix> keys;
    if (mode != InferenceMode::duplicated && bank != nullptr && !bank->empty()) {
        keys = project_keys(*bank, model.proj);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Vector z = encode_features(model.encoder, data.inputs.row(i));
        const Vector logits = logits_for(z, model, bank, mode, keys ? &*keys : nullptr);
        if (argmax(logits) == data.label_of(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace sdgam
