#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcpnn/error.hpp"
#include "gcpnn/rng.hpp"
#include "gcpnn/tensor.hpp"

namespace gcpnn {

/// Glorot-uniform matrix: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-a, a);
    return m;
}

/// Affine layers with ReLU between them and a linear output layer.
struct Mlp {
    std::vector<Tensor> weights;  // fan_in x fan_out
    std::vector<Tensor> biases;   // 1 x fan_out

    static Mlp create(const std::vector<Eigen::Index>& widths, Rng& rng, const std::string& name) {
        if (widths.size() < 2) throw ArgumentError("Mlp needs at least input and output widths");
        Mlp m;
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            const auto tag = name + ".l" + std::to_string(i);
            m.weights.push_back(Tensor::parameter(glorot_uniform(widths[i], widths[i + 1], rng), tag + ".w"));
            m.biases.push_back(Tensor::parameter(Matrix::Zero(1, widths[i + 1]), tag + ".b"));
        }
        return m;
    }

    Eigen::Index in_width() const { return weights.front().rows(); }
    Eigen::Index out_width() const { return weights.back().cols(); }

    Tensor operator()(const Tensor& x) const {
        if (x.cols() != in_width())
            throw ShapeError("mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                             std::to_string(in_width()));
        Tensor h = x;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            h = add_bias(matmul(h, weights[i]), biases[i]);
            if (i + 1 < weights.size()) h = relu(h);
        }
        return h;
    }

    void collect(std::vector<Tensor>& out) const {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            out.push_back(weights[i]);
            out.push_back(biases[i]);
        }
    }
};

inline Tensor mlp_forward(const Mlp& p, const Tensor& x) { return p(x); }

struct LstmState {
    Tensor h;
    Tensor cell;
};

/// LSTM cell with layer normalisation on every gate pre-activation. ReLU
/// replaces tanh on the cell output; the candidate keeps tanh and the i/f/o
/// gates stay sigmoid.
/// Gate blocks in `weight`/`bias` columns are ordered input, forget, output,
/// candidate.
struct LayerNormLstm {
    Tensor weight;                 // (in + hidden) x 4*hidden
    Tensor bias;                   // 1 x 4*hidden
    std::vector<Tensor> ln_gain;   // 4 x (1 x hidden)
    std::vector<Tensor> ln_offset; // 4 x (1 x hidden)
    double ln_eps = 1e-5;

    static constexpr int kInput = 0, kForget = 1, kOutput = 2, kCandidate = 3;

    static LayerNormLstm create(Eigen::Index in, Eigen::Index hidden, Rng& rng, const std::string& name) {
        LayerNormLstm l;
        l.weight = Tensor::parameter(glorot_uniform(in + hidden, 4 * hidden, rng), name + ".w");
        l.bias = Tensor::parameter(Matrix::Zero(1, 4 * hidden), name + ".b");
        static constexpr const char* gate_names[] = {"i", "f", "o", "g"};
        for (int g = 0; g < 4; ++g) {
            l.ln_gain.push_back(Tensor::parameter(Matrix::Ones(1, hidden), name + ".ln_" + gate_names[g] + ".gain"));
            l.ln_offset.push_back(Tensor::parameter(Matrix::Zero(1, hidden), name + ".ln_" + gate_names[g] + ".offset"));
        }
        return l;
    }

    Eigen::Index hidden() const { return weight.cols() / 4; }
    Eigen::Index in_width() const { return weight.rows() - hidden(); }

    LstmState step(const LstmState& state, const Tensor& input) const {
        const auto d = hidden();
        if (input.cols() != in_width() || state.h.cols() != d || state.cell.cols() != d ||
            state.h.rows() != input.rows() || state.cell.rows() != input.rows())
            throw ShapeError("lstm_step: input " + shape_str(input) + ", h " + shape_str(state.h) + ", cell " +
                             shape_str(state.cell) + " for in=" + std::to_string(in_width()) +
                             ", hidden=" + std::to_string(d));
        const Tensor pre = add_bias(matmul(concat_cols(input, state.h), weight), bias);
        auto gate = [&](int g) { return layer_norm(slice_cols(pre, g * d, d), ln_gain[g], ln_offset[g], ln_eps); };
        const Tensor i = sigmoid(gate(kInput));
        const Tensor f = sigmoid(gate(kForget));
        const Tensor o = sigmoid(gate(kOutput));
        const Tensor cand = tanh(gate(kCandidate));
        Tensor cell = add(mul(f, state.cell), mul(i, cand));
        Tensor h = mul(o, relu(cell));
        return {std::move(h), std::move(cell)};
    }

    void collect(std::vector<Tensor>& out) const {
        out.push_back(weight);
        out.push_back(bias);
        for (int g = 0; g < 4; ++g) {
            out.push_back(ln_gain[g]);
            out.push_back(ln_offset[g]);
        }
    }
};

inline LstmState lstm_step(const LayerNormLstm& p, const LstmState& state, const Tensor& input) {
    return p.step(state, input);
}

struct AdamHyper {
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::int64_t step = 0;
};

/// One bias-corrected Adam update of `params` in place.
inline void adam_step(std::vector<Tensor>& params, const std::vector<Matrix>& grads, AdamState& state,
                      const AdamHyper& h) {
    if (grads.size() != params.size()) throw ShapeError("adam_step: gradient count does not match parameters");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
            state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols())
            throw ShapeError("adam_step: gradient " + shape_str(grads[i]) + " for parameter " + params[i].name() + " " +
                             shape_str(params[i]));
        if (!grads[i].allFinite()) throw NumericError("non-finite gradient for " + params[i].name());
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grads[i].cwiseAbs2();
        params[i].mutable_value().array() -=
            h.lr * (state.m[i].array() / c1) / ((state.v[i].array() / c2).sqrt() + h.eps);
    }
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`; returns the
/// norm before clipping.
inline double clip_by_global_norm(std::vector<Matrix>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm)
        for (auto& g : grads) g *= max_norm / norm;
    return norm;
}

inline Tensor bce_loss(const Tensor& logits, const std::vector<double>& labels) {
    return bce_with_logits(logits, labels);
}

}  // namespace gcpnn
