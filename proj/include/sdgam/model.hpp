#pragma once

// Feed-forward encoder, expanded linear head over [left; right], attention
// projections, and an SGD-with-momentum optimizer. Forward passes record a
// tape; backward passes are written out by hand.

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sdgam/numcore.hpp"

namespace sdgam {

enum class Activation { tanh, identity };

struct DenseLayer {
    Matrix weight;  // out × in
    Vector bias;    // out
};

struct EncoderParams {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::tanh;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
};

/// Linear head. For the expanded head weight is N_c × 2·d_z and splits into
/// [W₁ W₂]; the single-input head used by the no-concat variant is N_c × d_z.
struct HeadParams {
    Matrix weight;
    Vector bias;

    std::size_t classes() const { return weight.rows(); }
    std::size_t slot_dim() const { return weight.cols() / 2; }
};

struct ProjectionParams {
    Matrix query;  // d_h × d_z
    Matrix key;    // d_h × d_z

    std::size_t hidden_dim() const { return query.rows(); }
};

struct ModelShape {
    std::size_t input_dim = 10;   // d_x
    std::size_t hidden_width = 32;
    std::size_t hidden_layers = 2;  // number of tanh layers, including the output layer
    std::size_t feature_dim = 16;  // d_z
    std::size_t attention_dim = 16;  // d_h
    std::size_t classes = 2;         // N_c
    Activation activation = Activation::tanh;
    /// Allocate the d_z-input head used by the no-concat ablation.
    bool single_head = false;
};

/// Every trainable tensor. Gradients use the same type.
struct ModelParams {
    EncoderParams encoder;
    HeadParams head;
    HeadParams single_head;  // empty unless ModelShape::single_head
    ProjectionParams proj;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_model(const ModelShape& shape, RngStream& rng);
ModelParams zeros_like(const ModelParams& params);

/// Visits every tensor as a flat span, in a fixed order, with a stable name.
void for_each_tensor(ModelParams& params,
                     const std::function<void(std::string_view, std::span<double>)>& fn);
void for_each_tensor(const ModelParams& params,
                     const std::function<void(std::string_view, std::span<const double>)>& fn);

/// acc += scale · other, tensor by tensor.
void accumulate(ModelParams& acc, const ModelParams& other, double scale);

// ---------------------------------------------------------------------------
// Encoder

struct EncoderTape {
    Vector input;
    std::vector<Vector> outputs;  // post-activation per layer; back() is z
};

struct Encoded {
    Vector z;
    EncoderTape tape;
};

Encoded encode(const EncoderParams& enc, std::span<const double> x);
/// Encoder output only, no tape.
Vector encode_features(const EncoderParams& enc, std::span<const double> x);

/// Accumulates ∂loss/∂θ into grad given ∂loss/∂z.
void encoder_backward(const EncoderParams& enc, const EncoderTape& tape,
                      std::span<const double> dz, EncoderParams& grad);

// ---------------------------------------------------------------------------
// Head

/// W₁·left + W₂·right + bias.
Vector head_forward(const HeadParams& head, std::span<const double> left,
                    std::span<const double> right);
/// (W₁ + W₂)·z + bias, the duplicated-feature logits.
Vector head_forward_duplicated(const HeadParams& head, std::span<const double> z);
/// W·z + bias for a single-input head.
Vector head_forward_single(const HeadParams& head, std::span<const double> z);

struct HeadInputGrads {
    Vector left;
    Vector right;
};

/// Accumulates head parameter gradients and returns ∂loss/∂left, ∂loss/∂right.
HeadInputGrads head_backward(const HeadParams& head, std::span<const double> left,
                             std::span<const double> right, std::span<const double> dlogits,
                             HeadParams& grad);

/// Forward record for one [left; right] evaluation whose left slot is the
/// encoder output. The right slot is either the same encoder output
/// (duplication) or an external feature.
struct ModelTape {
    EncoderTape encoder;
    Vector left;
    Vector right;
    bool right_is_encoder_output = false;
};

struct BackwardFlags {
    bool through_left = true;
    bool through_right = true;
};

/// Gradients of a loss at the head's logits. Encoder gradient receives W₁ᵀg
/// when through_left and W₂ᵀg when through_right. A right slot that is not
/// the encoder output never reaches the encoder.
void model_backward(const HeadParams& head, const EncoderParams& enc, const ModelTape& tape,
                    std::span<const double> dlogits, BackwardFlags flags,
                    EncoderParams& enc_grad, HeadParams& head_grad);

// ---------------------------------------------------------------------------
// Optimizer

enum class LrSchedule { constant, step, cosine };

struct OptimizerConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    LrSchedule schedule = LrSchedule::step;
    /// step: multiply by step_factor once the epoch index reaches step_epoch.
    std::size_t step_epoch = 20;
    double step_factor = 0.1;
    /// cosine: anneal from learning_rate to 0 over total_epochs.
    std::size_t total_epochs = 30;
};

struct OptimizerState {
    OptimizerConfig config;
    std::size_t epoch = 0;  // zero-based index of the epoch in progress
    std::vector<Vector> velocity;
};

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelParams& params);

/// Learning rate in effect during zero-based epoch `epoch`.
double learning_rate_at(const OptimizerConfig& config, std::size_t epoch);

/// v ← μv + g; p ← p − lr·v. Throws NumericError on a non-finite gradient.
void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& opt);

std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);
std::string to_string(LrSchedule s);
LrSchedule schedule_from_string(std::string_view s);

}  // namespace sdgam
