#pragma once

// Shared oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "sdgam/membank.hpp"
#include "sdgam/model.hpp"
#include "sdgam/trainer.hpp"

namespace sdgam::testing {

struct GradReport {
    double worst = 0.0;  // largest elementwise relative error
    std::string tensor;
};

/// |a − n| / max(|a|, |n|, floor), with a floor so that entries that are
/// both near zero are compared absolutely.
inline double rel_error(double a, double n, double floor = 1e-4) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central-difference check of every tensor of `analytic` against f.
inline GradReport check_gradients(const ModelParams& at, const std::function<double(const ModelParams&)>& f,
                                  const ModelParams& analytic, double h = 1e-5) {
    GradReport report;
    std::vector<std::pair<std::string, Vector>> grads;
    for_each_tensor(analytic, [&](std::string_view name, std::span<const double> g) {
        grads.emplace_back(std::string(name), Vector(g.begin(), g.end()));
    });
    std::size_t t = 0;
    for_each_tensor(at, [&](std::string_view name, std::span<const double> values) {
        const std::string key(name);
        const Vector x(values.begin(), values.end());
        auto eval = [&](std::span<const double> p) {
            ModelParams m = at;
            for_each_tensor(m, [&](std::string_view n2, std::span<double> dst) {
                if (n2 == key) std::copy(p.begin(), p.end(), dst.begin());
            });
            return f(m);
        };
        const Vector numeric = finite_diff_grad(eval, x, h);
        const Vector& a = grads.at(t++).second;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            const double e = rel_error(a[i], numeric[i]);
            if (e > report.worst) {
                report.worst = e;
                report.tensor = key + "[" + std::to_string(i) + "]";
            }
        }
    });
    return report;
}

inline std::vector<Vector> flatten(const ModelParams& m) {
    std::vector<Vector> out;
    for_each_tensor(m, [&](std::string_view, std::span<const double> v) { out.emplace_back(v.begin(), v.end()); });
    return out;
}

inline double max_abs_difference(const ModelParams& a, const ModelParams& b) {
    const auto fa = flatten(a), fb = flatten(b);
    double worst = fa.size() == fb.size() ? 0.0 : INFINITY;
    for (std::size_t t = 0; t < std::min(fa.size(), fb.size()); ++t) {
        if (fa[t].size() != fb[t].size()) return INFINITY;
        for (std::size_t i = 0; i < fa[t].size(); ++i) worst = std::max(worst, std::abs(fa[t][i] - fb[t][i]));
    }
    return worst;
}

inline Vector random_vector(RngStream& rng, std::size_t n, double scale = 1.0) {
    Vector v(n);
    for (double& x : v) x = rng.normal() * scale;
    return v;
}

inline Vector random_simplex(RngStream& rng, std::size_t n) {
    Vector raw(n);
    for (double& x : raw) x = rng.normal() * 1.5;
    return softmax(raw);
}

/// A small model with every tensor, biases included, drawn at random.
inline ModelParams random_model(const ModelShape& shape, RngStream& rng) {
    ModelParams m = init_model(shape, rng);
    for_each_tensor(m, [&](std::string_view, std::span<double> p) {
        for (double& v : p) v = rng.normal() * 0.6;
    });
    return m;
}

inline MemoryBank random_bank(RngStream& rng, std::size_t n, std::size_t dz, std::size_t classes) {
    MemoryBank bank;
    for (std::size_t i = 0; i < n; ++i) {
        bank.features.push_back(random_vector(rng, dz));
        bank.labels.push_back(random_simplex(rng, classes));
    }
    return bank;
}

struct SmallInstance {
    ModelParams model;
    MemoryBank bank;
    Vector x;
    Vector y;
};

/// d_x=5, d_z=4, d_h=3, N_c=3, N_m=5.
inline SmallInstance small_instance(std::uint64_t seed, bool single_head = false) {
    RngStream rng(seed);
    ModelShape shape;
    shape.input_dim = 5;
    shape.hidden_width = 6;
    shape.hidden_layers = 2;
    shape.feature_dim = 4;
    shape.attention_dim = 3;
    shape.classes = 3;
    shape.single_head = single_head;
    SmallInstance s;
    s.model = random_model(shape, rng);
    s.bank = random_bank(rng, 5, 4, 3);
    s.x = random_vector(rng, 5);
    s.y = one_hot(rng.below(3), 3);
    return s;
}

}  // namespace sdgam::testing
