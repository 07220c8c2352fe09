#pragma once

// Inference with and without the memory bank.

#include <cstddef>
#include <span>
#include <vector>

#include "sdgam/data.hpp"
#include "sdgam/membank.hpp"
#include "sdgam/model.hpp"

namespace sdgam {

/// How logits are formed at inference time.
enum class InferenceMode {
    memory,      // h([z; g(z)])
    duplicated,  // h([z; z])
    augmenting,  // single-input head on g(z) alone
};

struct Prediction {
    std::size_t label;  // argmax, ties to the lowest class index
    Vector logits;
};

Prediction predict(std::span<const double> x, const ModelParams& model, const MemoryBank* bank,
                   InferenceMode mode);
/// Convenience for the common flag: memory when use_memory, duplicated otherwise.
Prediction predict(std::span<const double> x, const ModelParams& model, const MemoryBank* bank,
                   bool use_memory);

/// Fraction of rows predicted correctly.
double accuracy(const LabeledDataset& data, const ModelParams& model, const MemoryBank* bank,
                InferenceMode mode);

}  // namespace sdgam
