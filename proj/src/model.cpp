#include "sdgam/model.hpp"

#include <cmath>
#include <numbers>

namespace sdgam {

namespace {

Matrix glorot(std::size_t out, std::size_t in, RngStream& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix m(out, in);
    for (double& w : m.values()) w = (2.0 * rng.uniform() - 1.0) * limit;
    return m;
}

double activate(Activation a, double x) { return a == Activation::tanh ? std::tanh(x) : x; }

// Derivative expressed through the activation output.
double activate_grad_from_output(Activation a, double y) {
    return a == Activation::tanh ? 1.0 - y * y : 1.0;
}

HeadParams zero_head(const HeadParams& h) {
    return {Matrix(h.weight.rows(), h.weight.cols()), Vector(h.bias.size(), 0.0)};
}

template <typename Params, typename Span, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
    for (std::size_t l = 0; l < p.encoder.layers.size(); ++l) {
        auto& layer = p.encoder.layers[l];
        const std::string idx = std::to_string(l);
        fn("encoder." + idx + ".weight", Span(layer.weight.values()));
        fn("encoder." + idx + ".bias", Span(layer.bias));
    }
    fn(std::string("head.weight"), Span(p.head.weight.values()));
    fn(std::string("head.bias"), Span(p.head.bias));
    if (!p.single_head.weight.empty()) {
        fn(std::string("single_head.weight"), Span(p.single_head.weight.values()));
        fn(std::string("single_head.bias"), Span(p.single_head.bias));
    }
    fn(std::string("proj.query"), Span(p.proj.query.values()));
    fn(std::string("proj.key"), Span(p.proj.key.values()));
}

void require_len(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ContractError(std::string(what) + ": dimension mismatch (" + std::to_string(got) +
                            " vs " + std::to_string(want) + ")");
    }
}

}  // namespace

std::size_t EncoderParams::input_dim() const {
    return layers.empty() ? 0 : layers.front().weight.cols();
}

std::size_t EncoderParams::output_dim() const {
    return layers.empty() ? 0 : layers.back().weight.rows();
}

ModelParams init_model(const ModelShape& shape, RngStream& rng) {
    if (shape.hidden_layers == 0 || shape.input_dim == 0 || shape.feature_dim == 0 ||
        shape.attention_dim == 0 || shape.classes < 2) {
        throw ContractError("init_model: degenerate model shape");
    }
    ModelParams p;
    p.encoder.activation = shape.activation;
    std::size_t in = shape.input_dim;
    for (std::size_t l = 0; l < shape.hidden_layers; ++l) {
        const bool last = l + 1 == shape.hidden_layers;
        const std::size_t out = last ? shape.feature_dim : shape.hidden_width;
        p.encoder.layers.push_back({glorot(out, in, rng), Vector(out, 0.0)});
        in = out;
    }
    p.head = {glorot(shape.classes, 2 * shape.feature_dim, rng), Vector(shape.classes, 0.0)};
    p.proj.query = glorot(shape.attention_dim, shape.feature_dim, rng);
    p.proj.key = glorot(shape.attention_dim, shape.feature_dim, rng);
    if (shape.single_head) {
        p.single_head = {glorot(shape.classes, shape.feature_dim, rng), Vector(shape.classes, 0.0)};
    }
    return p;
}

ModelParams zeros_like(const ModelParams& params) {
    ModelParams z;
    z.encoder.activation = params.encoder.activation;
    for (const auto& layer : params.encoder.layers) {
        z.encoder.layers.push_back({Matrix(layer.weight.rows(), layer.weight.cols()),
                                    Vector(layer.bias.size(), 0.0)});
    }
    z.head = zero_head(params.head);
    z.single_head = zero_head(params.single_head);
    z.proj.query = Matrix(params.proj.query.rows(), params.proj.query.cols());
    z.proj.key = Matrix(params.proj.key.rows(), params.proj.key.cols());
    return z;
}

void for_each_tensor(ModelParams& params,
                     const std::function<void(std::string_view, std::span<double>)>& fn) {
    visit_tensors<ModelParams, std::span<double>>(
        params, [&](const std::string& name, std::span<double> s) { fn(name, s); });
}

void for_each_tensor(const ModelParams& params,
                     const std::function<void(std::string_view, std::span<const double>)>& fn) {
    visit_tensors<const ModelParams, std::span<const double>>(
        params, [&](const std::string& name, std::span<const double> s) { fn(name, s); });
}

void accumulate(ModelParams& acc, const ModelParams& other, double scale) {
    std::vector<std::span<const double>> src;
    for_each_tensor(other, [&](std::string_view, std::span<const double> s) { src.push_back(s); });
    std::size_t i = 0;
    for_each_tensor(acc, [&](std::string_view, std::span<double> dst) {
        if (i >= src.size()) throw ContractError("accumulate: tensor count mismatch");
        axpy(scale, src[i++], dst);
    });
    if (i != src.size()) throw ContractError("accumulate: tensor count mismatch");
}

Encoded encode(const EncoderParams& enc, std::span<const double> x) {
    if (enc.layers.empty()) throw ContractError("encode: encoder has no layers");
    require_len(x.size(), enc.input_dim(), "encode");
    Encoded out;
    out.tape.input.assign(x.begin(), x.end());
    std::span<const double> current = out.tape.input;
    for (const auto& layer : enc.layers) {
        Vector h = matvec(layer.weight, current);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = activate(enc.activation, h[i] + layer.bias[i]);
        out.tape.outputs.push_back(std::move(h));
        current = out.tape.outputs.back();
    }
    out.z = out.tape.outputs.back();
    return out;
}

Vector encode_features(const EncoderParams& enc, std::span<const double> x) {
    return encode(enc, x).z;
}

void encoder_backward(const EncoderParams& enc, const EncoderTape& tape,
                      std::span<const double> dz, EncoderParams& grad) {
    if (tape.outputs.size() != enc.layers.size() || grad.layers.size() != enc.layers.size()) {
        throw ContractError("encoder_backward: tape does not match encoder");
    }
    require_len(dz.size(), enc.output_dim(), "encoder_backward");
    Vector delta(dz.begin(), dz.end());
    for (std::size_t l = enc.layers.size(); l-- > 0;) {
        const Vector& out = tape.outputs[l];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] *= activate_grad_from_output(enc.activation, out[i]);
        }
        const Vector& in = l == 0 ? tape.input : tape.outputs[l - 1];
        add_outer(grad.layers[l].weight, delta, in);
        axpy(1.0, delta, grad.layers[l].bias);
        if (l > 0) delta = matvec_transposed(enc.layers[l].weight, delta);
    }
}

Vector head_forward(const HeadParams& head, std::span<const double> left,
                    std::span<const double> right) {
    const std::size_t d = head.slot_dim();
    require_len(head.weight.cols(), 2 * d, "head_forward");
    require_len(left.size(), d, "head_forward left");
    require_len(right.size(), d, "head_forward right");
    Vector logits(head.bias);
    for (std::size_t c = 0; c < head.classes(); ++c) {
        auto row = head.weight.row(c);
        logits[c] += dot(row.first(d), left) + dot(row.last(d), right);
    }
    return logits;
}

Vector head_forward_duplicated(const HeadParams& head, std::span<const double> z) {
    return head_forward(head, z, z);
}

Vector head_forward_single(const HeadParams& head, std::span<const double> z) {
    Vector logits = matvec(head.weight, z);
    axpy(1.0, head.bias, logits);
    return logits;
}

HeadInputGrads head_backward(const HeadParams& head, std::span<const double> left,
                             std::span<const double> right, std::span<const double> dlogits,
                             HeadParams& grad) {
    const std::size_t d = head.slot_dim();
    require_len(dlogits.size(), head.classes(), "head_backward");
    require_len(left.size(), d, "head_backward left");
    require_len(right.size(), d, "head_backward right");
    HeadInputGrads g{Vector(d, 0.0), Vector(d, 0.0)};
    for (std::size_t c = 0; c < head.classes(); ++c) {
        auto row = head.weight.row(c);
        auto grow = grad.weight.row(c);
        axpy(dlogits[c], left, grow.first(d));
        axpy(dlogits[c], right, grow.last(d));
        axpy(dlogits[c], row.first(d), g.left);
        axpy(dlogits[c], row.last(d), g.right);
        grad.bias[c] += dlogits[c];
    }
    return g;
}

void model_backward(const HeadParams& head, const EncoderParams& enc, const ModelTape& tape,
                    std::span<const double> dlogits, BackwardFlags flags,
                    EncoderParams& enc_grad, HeadParams& head_grad) {
    if (tape.encoder.outputs.empty() || tape.encoder.outputs.back() != tape.left) {
        throw ContractError("model_backward: tape left slot is not the encoder output");
    }
    const HeadInputGrads g = head_backward(head, tape.left, tape.right, dlogits, head_grad);
    Vector dz(tape.left.size(), 0.0);
    bool any = false;
    if (flags.through_left) {
        axpy(1.0, g.left, dz);
        any = true;
    }
    if (flags.through_right && tape.right_is_encoder_output) {
        axpy(1.0, g.right, dz);
        any = true;
    }
    if (any) encoder_backward(enc, tape.encoder, dz, enc_grad);
}

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelParams& params) {
    OptimizerState st{config, 0, {}};
    for_each_tensor(params, [&](std::string_view, std::span<const double> s) {
        st.velocity.emplace_back(s.size(), 0.0);
    });
    return st;
}

double learning_rate_at(const OptimizerConfig& config, std::size_t epoch) {
    switch (config.schedule) {
        case LrSchedule::constant:
            return config.learning_rate;
        case LrSchedule::step:
            return epoch >= config.step_epoch ? config.learning_rate * config.step_factor
                                              : config.learning_rate;
        case LrSchedule::cosine: {
            const double total = static_cast<double>(std::max<std::size_t>(config.total_epochs, 1));
            const double t = std::min(static_cast<double>(epoch), total);
            return 0.5 * config.learning_rate * (1.0 + std::cos(std::numbers::pi * t / total));
        }
    }
    return config.learning_rate;
}

void sgd_step(ModelParams& params, const ModelParams& grads, OptimizerState& opt) {
    std::vector<std::pair<std::string, std::span<const double>>> gs;
    for_each_tensor(grads, [&](std::string_view name, std::span<const double> s) {
        gs.emplace_back(std::string(name), s);
    });
    for (const auto& [name, g] : gs) require_finite(g, "sgd_step gradient " + name);
    const double lr = learning_rate_at(opt.config, opt.epoch);
    const double mu = opt.config.momentum;
    std::size_t i = 0;
    for_each_tensor(params, [&](std::string_view, std::span<double> p) {
        if (i >= gs.size() || i >= opt.velocity.size() || gs[i].second.size() != p.size() ||
            opt.velocity[i].size() != p.size()) {
            throw ContractError("sgd_step: gradient or optimizer shape mismatch");
        }
        Vector& v = opt.velocity[i];
        const auto g = gs[i].second;
        for (std::size_t k = 0; k < p.size(); ++k) {
            v[k] = mu * v[k] + g[k];
            p[k] -= lr * v[k];
        }
        ++i;
    });
}

std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

Activation activation_from_string(std::string_view s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ContractError("unknown activation '" + std::string(s) + "'");
}

std::string to_string(LrSchedule s) {
    switch (s) {
        case LrSchedule::constant: return "constant";
        case LrSchedule::step: return "step";
        case LrSchedule::cosine: return "cosine";
    }
    return "constant";
}

LrSchedule schedule_from_string(std::string_view s) {
    if (s == "constant") return LrSchedule::constant;
    if (s == "step") return LrSchedule::step;
    if (s == "cosine") return LrSchedule::cosine;
    throw ContractError("unknown learning-rate schedule '" + std::string(s) + "'");
}

}  // namespace sdgam
