#pragma once

// Adversarial feature memory: attention read over stored features, k-means
// proportional initialization, Langevin feature generation, and
// entropy-ranked replacement.

#include <cstddef>
#include <optional>
#include <vector>

#include "sdgam/model.hpp"
#include "sdgam/numcore.hpp"

namespace sdgam {

/// Stored (feature, label) pairs. Labels are probability vectors.
struct MemoryBank {
    std::vector<Vector> features;
    std::vector<Vector> labels;

    std::size_t size() const { return features.size(); }
    bool empty() const { return features.empty(); }
    std::size_t feature_dim() const { return features.empty() ? 0 : features.front().size(); }
    std::size_t classes() const { return labels.empty() ? 0 : labels.front().size(); }

    bool operator==(const MemoryBank&) const = default;
};

/// Throws ContractError if sizes disagree, a label leaves the simplex, or a
/// feature is non-finite.
void validate_bank(const MemoryBank& bank, double simplex_tol = 1e-9);

/// N_m = round(r_m · |D|).
std::size_t bank_capacity(double memory_ratio, std::size_t dataset_size);

/// Key projections W_k·z_i for every bank entry, one row per entry. Valid
/// until the bank or W_k changes.
Matrix project_keys(const MemoryBank& bank, const ProjectionParams& proj);

struct AttentionReadout {
    Vector query;       // W_q·z
    Vector alpha;       // softmax of scaled scores, one weight per bank entry
    Vector augmenting;  // Σ α_i z_i
};

AttentionReadout attention_read(std::span<const double> z, const MemoryBank& bank,
                                const ProjectionParams& proj);
/// Same as above with keys from project_keys().
AttentionReadout attention_read(std::span<const double> z, const MemoryBank& bank,
                                const ProjectionParams& proj, const Matrix& keys);

/// Σ α_i y_i.
Vector attention_label(const AttentionReadout& readout, const MemoryBank& bank);

/// Accumulates ∂loss/∂W_q and ∂loss/∂W_k into grad given the upstream
/// gradient at the augmenting feature and at the attention-weighted label
/// Σ α_i y_i (either may be empty to mean zero). z and the bank are treated
/// as constants.
void attention_backward(const AttentionReadout& readout, std::span<const double> z,
                        const MemoryBank& bank, const ProjectionParams& proj,
                        std::span<const double> d_augmenting, std::span<const double> d_label,
                        ProjectionParams& grad);

// ---------------------------------------------------------------------------
// Initialization

struct KMeansOptions {
    std::size_t max_iterations = 100;
};

/// Lloyd's algorithm with k-means++ seeding. Returns K index sets that
/// partition [0, points.size()); every set is nonempty.
std::vector<std::vector<std::size_t>> kmeans(const std::vector<Vector>& points, std::size_t k,
                                             RngStream& rng, KMeansOptions options = {});

/// Largest-remainder allocation of `total` items across clusters in
/// proportion to their sizes. Ties on the fractional part go to the lower
/// cluster index.
std::vector<std::size_t> proportional_allocation(const std::vector<std::size_t>& cluster_sizes,
                                                 std::size_t total);

/// Clusters the features and draws from each cluster uniformly without
/// replacement, in proportion to cluster size, for exactly `capacity` items.
MemoryBank init_bank(const std::vector<Vector>& features, const std::vector<Vector>& labels,
                     std::size_t clusters, std::size_t capacity, RngStream& rng);

// ---------------------------------------------------------------------------
// Adversarial generation and replacement

struct LangevinConfig {
    std::size_t steps = 10;  // T
    double eta0 = 0.01;
    bool noise = true;
};

void validate(const LangevinConfig& cfg);

/// Step size of zero-based step t: η₀ / (t + 1).
double langevin_step_size(const LangevinConfig& cfg, std::size_t t);

/// ∇_z ℓ_ce(h([z; z]), y) = (W₁ + W₂)ᵀ(softmax(logits) − y).
Vector duplicated_feature_gradient(const HeadParams& head, std::span<const double> z,
                                   std::span<const double> label);

/// Runs T noisy gradient-ascent steps on the duplicated-feature
/// cross-entropy starting from z0 and returns the final feature.
/// `trace`, when given, receives ℓ_ce at z0 and after every step.
Vector langevin_generate(std::span<const double> z0, std::span<const double> label,
                         const HeadParams& head, const LangevinConfig& cfg, RngStream& rng,
                         std::vector<double>* trace = nullptr);

/// Entropy of softmax(h([z_i; z_i])) for every bank entry.
Vector bank_entropies(const MemoryBank& bank, const HeadParams& head);

/// Number of entries replaced per update: round(γ · N_m).
std::size_t eviction_count(double gamma, std::size_t capacity);

/// Bank indices holding the `count` lowest entropies, ties to the lower
/// index, in ascending index order.
std::vector<std::size_t> select_evictions(const Vector& entropies, std::size_t count);

struct UpdateReport {
    std::vector<std::size_t> evicted;  // ascending bank indices
};

/// Replaces the round(γ·N_m) lowest-entropy entries with fresh pairs. When
/// more fresh pairs are offered than needed, a uniform random subset fills
/// the vacancies.
MemoryBank update_bank(const MemoryBank& bank, const std::vector<Vector>& fresh_features,
                       const std::vector<Vector>& fresh_labels, const HeadParams& head,
                       double gamma, RngStream& rng, UpdateReport* report = nullptr);

}  // namespace sdgam
