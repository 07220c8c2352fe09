#include "sdgam/membank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sdgam {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::size_t nearest(std::span<const double> p, const std::vector<Vector>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(p, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<Vector> seed_plus_plus(const std::vector<Vector>& points, std::size_t k,
                                   RngStream& rng) {
    std::vector<Vector> centers;
    centers.push_back(points[rng.below(points.size())]);
    Vector d2(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = squared_distance(points[i], centers[0]);
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (d2[i] <= 0.0) continue;
                if (target < d2[i]) {
                    pick = i;
                    break;
                }
                target -= d2[i];
            }
            // Rounding can walk past the last positive weight.
            while (d2[pick] <= 0.0 && pick > 0) --pick;
        } else {
            pick = rng.below(points.size());
        }
        centers.push_back(points[pick]);
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
        }
    }
    return centers;
}

// Moves the point farthest from its centroid out of the largest cluster into
// each empty cluster.
void repair_empty(const std::vector<Vector>& points, std::vector<std::size_t>& assign,
                  std::vector<Vector>& centers) {
    const std::size_t k = centers.size();
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t a : assign) ++counts[a];
        if (counts[c] != 0) continue;
        const std::size_t largest =
            static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (assign[i] != largest) continue;
            const double d = squared_distance(points[i], centers[largest]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        assign[far] = c;
        centers[c] = points[far];
    }
}

void recompute_centers(const std::vector<Vector>& points, const std::vector<std::size_t>& assign,
                       std::vector<Vector>& centers) {
    const std::size_t dim = points.front().size();
    std::vector<Vector> sums(centers.size(), Vector(dim, 0.0));
    std::vector<std::size_t> counts(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        axpy(1.0, points[i], sums[assign[i]]);
        ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
        if (counts[c] == 0) continue;
        for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
        centers[c] = std::move(sums[c]);
    }
}

}  // namespace

void validate_bank(const MemoryBank& bank, double simplex_tol) {
    if (bank.features.size() != bank.labels.size()) {
        throw ContractError("memory bank: feature and label counts differ");
    }
    const std::size_t d = bank.feature_dim();
    const std::size_t c = bank.classes();
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (bank.features[i].size() != d || bank.labels[i].size() != c) {
            throw ContractError("memory bank: ragged entry " + std::to_string(i));
        }
        if (!all_finite(bank.features[i])) {
            throw ContractError("memory bank: non-finite feature " + std::to_string(i));
        }
        require_simplex(bank.labels[i], "memory bank label", simplex_tol);
    }
}

std::size_t bank_capacity(double memory_ratio, std::size_t dataset_size) {
    if (!(memory_ratio > 0.0 && memory_ratio <= 1.0)) {
        throw ContractError("memory ratio must lie in (0, 1]");
    }
    return static_cast<std::size_t>(std::llround(memory_ratio * static_cast<double>(dataset_size)));
}

Matrix project_keys(const MemoryBank& bank, const ProjectionParams& proj) {
    Matrix keys(bank.size(), proj.key.rows());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const Vector k = matvec(proj.key, bank.features[i]);
        std::copy(k.begin(), k.end(), keys.row(i).begin());
    }
    return keys;
}

AttentionReadout attention_read(std::span<const double> z, const MemoryBank& bank,
                                const ProjectionParams& proj) {
    if (bank.empty()) throw ContractError("attention_read: empty memory bank");
    return attention_read(z, bank, proj, project_keys(bank, proj));
}

AttentionReadout attention_read(std::span<const double> z, const MemoryBank& bank,
                                const ProjectionParams& proj, const Matrix& keys) {
    if (bank.empty()) throw ContractError("attention_read: empty memory bank");
    if (keys.rows() != bank.size() || keys.cols() != proj.hidden_dim()) {
        throw ContractError("attention_read: key cache does not match bank");
    }
    if (z.size() != bank.feature_dim()) throw ContractError("attention_read: feature dimension mismatch");
    AttentionReadout out;
    out.query = matvec(proj.query, z);
    const double scale = 1.0 / std::sqrt(static_cast<double>(proj.hidden_dim()));
    Vector scores(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) scores[i] = scale * dot(out.query, keys.row(i));
    out.alpha = softmax(scores);
    out.augmenting.assign(z.size(), 0.0);
    for (std::size_t i = 0; i < bank.size(); ++i) axpy(out.alpha[i], bank.features[i], out.augmenting);
    return out;
}

Vector attention_label(const AttentionReadout& readout, const MemoryBank& bank) {
    if (readout.alpha.size() != bank.size()) throw ContractError("attention_label: readout does not match bank");
    Vector y(bank.classes(), 0.0);
    for (std::size_t i = 0; i < bank.size(); ++i) axpy(readout.alpha[i], bank.labels[i], y);
    return y;
}

void attention_backward(const AttentionReadout& readout, std::span<const double> z,
                        const MemoryBank& bank, const ProjectionParams& proj,
                        std::span<const double> d_augmenting, std::span<const double> d_label,
                        ProjectionParams& grad) {
    const std::size_t n = bank.size();
    if (readout.alpha.size() != n || readout.query.size() != proj.hidden_dim() ||
        readout.augmenting.size() != z.size() || z.size() != bank.feature_dim()) {
        throw ContractError("attention_backward: readout does not match inputs");
    }
    if (!d_augmenting.empty() && d_augmenting.size() != z.size()) {
        throw ContractError("attention_backward: augmenting gradient has wrong length");
    }
    if (!d_label.empty() && d_label.size() != bank.classes()) {
        throw ContractError("attention_backward: label gradient has wrong length");
    }
    Vector d_alpha(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!d_augmenting.empty()) d_alpha[i] += dot(d_augmenting, bank.features[i]);
        if (!d_label.empty()) d_alpha[i] += dot(d_label, bank.labels[i]);
    }
    const double mean = dot(readout.alpha, d_alpha);
    const double scale = 1.0 / std::sqrt(static_cast<double>(proj.hidden_dim()));
    // Scores are bilinear, so both projections only need Σ ∂s_i·z_i.
    Vector weighted_features(z.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_score = readout.alpha[i] * (d_alpha[i] - mean) * scale;
        axpy(d_score, bank.features[i], weighted_features);
    }
    const Vector d_query = matvec(proj.key, weighted_features);
    add_outer(grad.query, d_query, z);
    add_outer(grad.key, readout.query, weighted_features);
}

std::vector<std::vector<std::size_t>> kmeans(const std::vector<Vector>& points, std::size_t k,
                                             RngStream& rng, KMeansOptions options) {
    if (k == 0) throw ContractError("kmeans: K must be at least 1");
    if (k > points.size()) throw ContractError("kmeans: K exceeds the number of points");
    std::vector<Vector> centers = seed_plus_plus(points, k, rng);
    std::vector<std::size_t> assign(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) assign[i] = nearest(points[i], centers);
    repair_empty(points, assign, centers);
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        recompute_centers(points, assign, centers);
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t a = nearest(points[i], centers);
            if (a != assign[i]) {
                assign[i] = a;
                changed = true;
            }
        }
        repair_empty(points, assign, centers);
        if (!changed) break;
    }
    std::vector<std::vector<std::size_t>> clusters(k);
    for (std::size_t i = 0; i < points.size(); ++i) clusters[assign[i]].push_back(i);
    return clusters;
}

std::vector<std::size_t> proportional_allocation(const std::vector<std::size_t>& cluster_sizes,
                                                 std::size_t total) {
    const std::size_t n = std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
    if (n == 0) throw ContractError("proportional_allocation: no items");
    if (total > n) throw ContractError("proportional_allocation: total exceeds item count");
    std::vector<std::size_t> alloc(cluster_sizes.size());
    std::vector<std::size_t> remainder(cluster_sizes.size());
    std::size_t given = 0;
    for (std::size_t k = 0; k < cluster_sizes.size(); ++k) {
        const unsigned long long scaled = static_cast<unsigned long long>(total) * cluster_sizes[k];
        alloc[k] = static_cast<std::size_t>(scaled / n);
        remainder[k] = static_cast<std::size_t>(scaled % n);
        given += alloc[k];
    }
    std::vector<std::size_t> order(cluster_sizes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; given < total; ++i, ++given) ++alloc[order[i]];
    return alloc;
}

MemoryBank init_bank(const std::vector<Vector>& features, const std::vector<Vector>& labels,
                     std::size_t clusters, std::size_t capacity, RngStream& rng) {
    if (features.size() != labels.size()) throw ContractError("init_bank: feature/label count mismatch");
    if (capacity > features.size()) throw ContractError("init_bank: capacity exceeds dataset size");
    if (capacity == 0) throw ContractError("init_bank: capacity must be positive");
    const auto groups = kmeans(features, clusters, rng);
    std::vector<std::size_t> sizes;
    for (const auto& g : groups) sizes.push_back(g.size());
    const auto alloc = proportional_allocation(sizes, capacity);
    MemoryBank bank;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (std::size_t pick : sample_without_replacement(groups[k].size(), alloc[k], rng)) {
            const std::size_t idx = groups[k][pick];
            bank.features.push_back(features[idx]);
            bank.labels.push_back(labels[idx]);
        }
    }
    validate_bank(bank);
    return bank;
}

void validate(const LangevinConfig& cfg) {
    if (cfg.steps < 1) throw ContractError("langevin: steps must be at least 1");
    if (!(cfg.eta0 > 0.0) || !std::isfinite(cfg.eta0)) throw ContractError("langevin: eta0 must be positive");
}

double langevin_step_size(const LangevinConfig& cfg, std::size_t t) {
    return cfg.eta0 / static_cast<double>(t + 1);
}

Vector duplicated_feature_gradient(const HeadParams& head, std::span<const double> z,
                                   std::span<const double> label) {
    const Vector logits = head_forward_duplicated(head, z);
    Vector residual = softmax(logits);
    axpy(-1.0, label, residual);
    const std::size_t d = head.slot_dim();
    Vector grad(d, 0.0);
    for (std::size_t c = 0; c < head.classes(); ++c) {
        auto row = head.weight.row(c);
        axpy(residual[c], row.first(d), grad);
        axpy(residual[c], row.last(d), grad);
    }
    return grad;
}

Vector langevin_generate(std::span<const double> z0, std::span<const double> label,
                         const HeadParams& head, const LangevinConfig& cfg, RngStream& rng,
                         std::vector<double>* trace) {
    validate(cfg);
    if (z0.size() != head.slot_dim()) throw ContractError("langevin_generate: feature dimension mismatch");
    if (label.size() != head.classes()) throw ContractError("langevin_generate: label length mismatch");
    require_simplex(label, "langevin_generate label");
    Vector z(z0.begin(), z0.end());
    if (trace) trace->push_back(cross_entropy(head_forward_duplicated(head, z), label));
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const double eta = langevin_step_size(cfg, t);
        axpy(eta, duplicated_feature_gradient(head, z, label), z);
        if (cfg.noise) axpy(std::sqrt(2.0 * eta), gaussian(rng, z.size()), z);
        if (!all_finite(z)) {
            throw NumericError("langevin_generate: non-finite feature at step " + std::to_string(t));
        }
        if (trace) trace->push_back(cross_entropy(head_forward_duplicated(head, z), label));
    }
    return z;
}

Vector bank_entropies(const MemoryBank& bank, const HeadParams& head) {
    Vector h(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        h[i] = entropy(softmax(head_forward_duplicated(head, bank.features[i])));
    }
    return h;
}

std::size_t eviction_count(double gamma, std::size_t capacity) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ContractError("update ratio gamma must lie in (0, 1]");
    return static_cast<std::size_t>(std::llround(gamma * static_cast<double>(capacity)));
}

std::vector<std::size_t> select_evictions(const Vector& entropies, std::size_t count) {
    if (count > entropies.size()) throw ContractError("select_evictions: count exceeds bank size");
    std::vector<std::size_t> order(entropies.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return entropies[a] < entropies[b]; });
    order.resize(count);
    std::sort(order.begin(), order.end());
    return order;
}

MemoryBank update_bank(const MemoryBank& bank, const std::vector<Vector>& fresh_features,
                       const std::vector<Vector>& fresh_labels, const HeadParams& head,
                       double gamma, RngStream& rng, UpdateReport* report) {
    const std::size_t r = eviction_count(gamma, bank.size());
    if (fresh_features.size() != fresh_labels.size()) {
        throw ContractError("update_bank: fresh feature/label count mismatch");
    }
    if (fresh_features.size() < r) {
        throw ContractError("update_bank: " + std::to_string(fresh_features.size()) +
                            " fresh entries offered but " + std::to_string(r) + " required");
    }
    MemoryBank out = bank;
    if (r == 0) {
        if (report) report->evicted.clear();
        return out;
    }
    const auto evicted = select_evictions(bank_entropies(bank, head), r);
    std::vector<std::size_t> chosen;
    if (fresh_features.size() == r) {
        chosen.resize(r);
        std::iota(chosen.begin(), chosen.end(), std::size_t{0});
    } else {
        chosen = sample_without_replacement(fresh_features.size(), r, rng);
    }
    for (std::size_t j = 0; j < r; ++j) {
        out.features[evicted[j]] = fresh_features[chosen[j]];
        out.labels[evicted[j]] = fresh_labels[chosen[j]];
    }
    validate_bank(out);
    if (report) report->evicted = evicted;
    return out;
}

}  // namespace sdgam
