#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mvclust/errors.hpp"
#include "mvclust/matrix.hpp"
#include "mvclust/rng.hpp"

namespace mvclust {

enum class Activation { Linear, ReLU };

struct Layer {
    Matrix w;              // fan_in x fan_out
    std::vector<double> b; // fan_out
    Activation act = Activation::Linear;
};

// Fully connected autoencoder. Samples are rows. Hidden layers are ReLU;
// the latent layer and the reconstruction output are linear, so latent
// distances are unconstrained. The decoder mirrors the encoder dimensions.
struct MlpAutoencoder {
    std::vector<std::size_t> layer_dims; // input, hidden..., latent
    std::vector<Layer> encoder;
    std::vector<Layer> decoder;
    std::uint64_t init_seed = 0;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t latent_dim() const { return layer_dims.back(); }
};

namespace detail {

inline Layer make_layer(std::size_t fan_in, std::size_t fan_out, Activation act,
                        std::uint64_t seed) {
    Layer l;
    l.w = Matrix(fan_in, fan_out);
    l.b.assign(fan_out, 0.0);
    l.act = act;
    Rng rng(seed);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& v : l.w.data()) v = rng.uniform(-limit, limit);
    return l;
}

inline void apply_activation(Matrix& m, Activation act) {
    if (act == Activation::ReLU)
        for (double& v : m.data())
            if (v < 0.0) v = 0.0;
}

// layer forward: out = act(in * w + b)
inline Matrix layer_forward(const Layer& l, const Matrix& in, Matrix* pre_out = nullptr) {
    Matrix pre = matmul(in, l.w);
    for (std::size_t i = 0; i < pre.rows(); ++i)
        for (std::size_t j = 0; j < pre.cols(); ++j) pre(i, j) += l.b[j];
    if (pre_out) *pre_out = pre;
    apply_activation(pre, l.act);
    return pre;
}

} // namespace detail

inline MlpAutoencoder make_autoencoder(const std::vector<std::size_t>& layer_dims,
                                       std::uint64_t seed) {
    if (layer_dims.size() < 2)
        throw InputError("make_autoencoder: need input and latent dimensions");
    for (std::size_t d : layer_dims)
        if (d == 0) throw InputError("make_autoencoder: zero layer width");
    MlpAutoencoder m;
    m.layer_dims = layer_dims;
    m.init_seed = seed;
    const std::size_t L = layer_dims.size() - 1;
    for (std::size_t i = 0; i < L; ++i) {
        const Activation act = (i + 1 == L) ? Activation::Linear : Activation::ReLU;
        m.encoder.push_back(
            detail::make_layer(layer_dims[i], layer_dims[i + 1], act, derive_seed(seed, {0, i})));
    }
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t in = layer_dims[L - i];
        const std::size_t out = layer_dims[L - i - 1];
        const Activation act = (i + 1 == L) ? Activation::Linear : Activation::ReLU;
        m.decoder.push_back(detail::make_layer(in, out, act, derive_seed(seed, {1, i})));
    }
    return m;
}

inline Matrix encode(const MlpAutoencoder& model, const Matrix& x) {
    if (x.cols() != model.input_dim())
        throw ShapeError("encode: input has " + std::to_string(x.cols()) +
                         " columns, model expects " + std::to_string(model.input_dim()));
    Matrix h = x;
    for (const Layer& l : model.encoder) h = detail::layer_forward(l, h);
    return h;
}

inline Matrix decode(const MlpAutoencoder& model, const Matrix& z) {
    if (z.cols() != model.latent_dim())
        throw ShapeError("decode: latent has " + std::to_string(z.cols()) +
                         " columns, model expects " + std::to_string(model.latent_dim()));
    Matrix h = z;
    for (const Layer& l : model.decoder) h = detail::layer_forward(l, h);
    return h;
}

inline Matrix reconstruct(const MlpAutoencoder& model, const Matrix& x) {
    return decode(model, encode(model, x));
}

inline double reconstruction_loss(const MlpAutoencoder& model, const Matrix& x) {
    return frobenius_norm_sq(x - reconstruct(model, x));
}

struct LayerGrads {
    Matrix w;
    std::vector<double> b;
};

struct ModelGrads {
    std::vector<LayerGrads> encoder;
    std::vector<LayerGrads> decoder;
};

namespace detail {

// dPre = dAct (*) act'(pre); returns gradient w.r.t. the layer input and
// fills the layer's parameter gradients.
inline Matrix layer_backward(const Layer& l, const Matrix& input, const Matrix& pre,
                             Matrix d_act, LayerGrads& g) {
    if (l.act == Activation::ReLU) {
        for (std::size_t i = 0; i < d_act.size(); ++i)
            if (pre.data()[i] <= 0.0) d_act.data()[i] = 0.0;
    }
    g.w = matmul(transpose(input), d_act);
    g.b.assign(l.b.size(), 0.0);
    for (std::size_t i = 0; i < d_act.rows(); ++i)
        for (std::size_t j = 0; j < d_act.cols(); ++j) g.b[j] += d_act(i, j);
    return matmul(d_act, transpose(l.w));
}

} // namespace detail

// Exact gradients of rec_weight * ||x - g(f(x))||_F^2 + <latent_grad, f(x)>
// with respect to every parameter. latent_grad may be null (pure
// reconstruction); rec_weight 0 isolates the latent pathway.
inline ModelGrads backward(const MlpAutoencoder& model, const Matrix& x,
                           const Matrix* latent_grad = nullptr, double rec_weight = 1.0) {
    if (x.cols() != model.input_dim())
        throw ShapeError("backward: input width mismatch");
    if (latent_grad &&
        (latent_grad->rows() != x.rows() || latent_grad->cols() != model.latent_dim()))
        throw ShapeError("backward: latent_grad must have shape (n, latent_dim)");

    const std::size_t Le = model.encoder.size();
    const std::size_t Ld = model.decoder.size();

    std::vector<Matrix> enc_pre(Le), enc_act(Le), dec_pre(Ld), dec_act(Ld);
    const Matrix* cur = &x;
    for (std::size_t i = 0; i < Le; ++i) {
        enc_act[i] = detail::layer_forward(model.encoder[i], *cur, &enc_pre[i]);
        cur = &enc_act[i];
    }
    for (std::size_t i = 0; i < Ld; ++i) {
        dec_act[i] = detail::layer_forward(model.decoder[i], *cur, &dec_pre[i]);
        cur = &dec_act[i];
    }

    ModelGrads g;
    g.encoder.resize(Le);
    g.decoder.resize(Ld);

    // d/dXhat of rec_weight * ||x - xhat||^2
    Matrix d = dec_act[Ld - 1] - x;
    for (double& v : d.data()) v *= 2.0 * rec_weight;

    for (std::size_t i = Ld; i-- > 0;) {
        const Matrix& input = (i == 0) ? enc_act[Le - 1] : dec_act[i - 1];
        d = detail::layer_backward(model.decoder[i], input, dec_pre[i], std::move(d),
                                   g.decoder[i]);
    }

    if (latent_grad) d = d + *latent_grad;

    for (std::size_t i = Le; i-- > 0;) {
        const Matrix& input = (i == 0) ? x : enc_act[i - 1];
        d = detail::layer_backward(model.encoder[i], input, enc_pre[i], std::move(d),
                                   g.encoder[i]);
    }
    return g;
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Core Adam update with bias correction; `step` is 1-based.
inline void adam_update(std::span<double> params, std::span<const double> grads,
                        std::span<double> m, std::span<double> v, std::size_t step,
                        const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
        throw ShapeError("adam_update: moment/parameter shape mismatch");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

// Adam moments shaped like the model parameters.
struct AdamState {
    AdamConfig cfg;
    std::size_t step = 0;
    ModelGrads m;
    ModelGrads v;
};

namespace detail {

inline ModelGrads zero_grads_like(const MlpAutoencoder& model) {
    ModelGrads g;
    for (const Layer& l : model.encoder)
        g.encoder.push_back({Matrix(l.w.rows(), l.w.cols()), std::vector<double>(l.b.size(), 0.0)});
    for (const Layer& l : model.decoder)
        g.decoder.push_back({Matrix(l.w.rows(), l.w.cols()), std::vector<double>(l.b.size(), 0.0)});
    return g;
}

} // namespace detail

inline AdamState make_adam_state(const MlpAutoencoder& model, AdamConfig cfg = {}) {
    AdamState s;
    s.cfg = cfg;
    s.m = detail::zero_grads_like(model);
    s.v = detail::zero_grads_like(model);
    return s;
}

inline void adam_step(MlpAutoencoder& model, const ModelGrads& grads, AdamState& state) {
    if (grads.encoder.size() != model.encoder.size() ||
        grads.decoder.size() != model.decoder.size())
        throw ShapeError("adam_step: gradient layer count mismatch");
    ++state.step;
    auto update_layers = [&](std::vector<Layer>& layers, const std::vector<LayerGrads>& gs,
                             std::vector<LayerGrads>& ms, std::vector<LayerGrads>& vs) {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (!layers[i].w.same_shape(gs[i].w) || layers[i].b.size() != gs[i].b.size())
                throw ShapeError("adam_step: gradient tensor shape mismatch");
            adam_update(layers[i].w.data(), gs[i].w.data(), ms[i].w.data(), vs[i].w.data(),
                        state.step, state.cfg);
            adam_update(layers[i].b, gs[i].b, ms[i].b, vs[i].b, state.step, state.cfg);
        }
    };
    update_layers(model.encoder, grads.encoder, state.m.encoder, state.v.encoder);
    update_layers(model.decoder, grads.decoder, state.m.decoder, state.v.decoder);
}

// Full-batch Adam on the reconstruction loss; returns the per-epoch loss
// trace (loss measured before each update).
inline std::vector<double> pretrain_autoencoder(MlpAutoencoder& model, const Matrix& x,
                                                std::size_t epochs, AdamConfig cfg = {}) {
    AdamState state = make_adam_state(model, cfg);
    std::vector<double> trace;
    trace.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
        const double loss = reconstruction_loss(model, x);
        if (!std::isfinite(loss))
            throw TrainingError("pretrain_autoencoder: non-finite loss at epoch " +
                                std::to_string(e));
        trace.push_back(loss);
        ModelGrads g = backward(model, x);
        adam_step(model, g, state);
    }
    return trace;
}

} // namespace mvclust
