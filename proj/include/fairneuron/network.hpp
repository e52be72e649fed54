#pragma once

// Dense feed-forward network: configuration, parameters, and traced forward
// passes. Training lives in train.hpp, serialization in model_io.hpp.

#include "fairneuron/common.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace fairneuron {

enum class OutputHead { softmax, linear };
enum class HiddenActivation { relu };

struct NetworkConfig {
    // input, hidden layers, output. The benchmark models use three hidden layers.
    std::vector<int> layer_sizes;
    HiddenActivation hidden_activation = HiddenActivation::relu;
    OutputHead output_head = OutputHead::softmax;
    double dropout_rate = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (layer_sizes.size() < 2) throw ConfigError("network needs at least 2 layers");
        for (int s : layer_sizes)
            if (s < 1) throw ConfigError("every layer size must be >= 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("dropout_rate must be in [0, 1)");
    }

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    int num_layers() const { return static_cast<int>(layer_sizes.size()); }
};

/// Value-semantics network. weights[l] maps layer l to layer l+1:
/// rows = layer_sizes[l+1], cols = layer_sizes[l].
struct Network {
    NetworkConfig config;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    bool dropout_enabled = false;
    Rng rng;

    /// He-style uniform fan-in init from the seeded generator; biases zero.
    static Network init(const NetworkConfig& cfg) {
        cfg.validate();
        Network net;
        net.config = cfg;
        net.rng.seed(cfg.seed);
        const int L = cfg.num_layers();
        net.weights.reserve(L - 1);
        net.biases.reserve(L - 1);
        for (int l = 0; l + 1 < L; ++l) {
            const int fan_in = cfg.layer_sizes[l];
            const int fan_out = cfg.layer_sizes[l + 1];
            const double limit = std::sqrt(6.0 / fan_in);
            Matrix w(fan_out, fan_in);
            for (int i = 0; i < fan_out; ++i)
                for (int j = 0; j < fan_in; ++j)
                    w(i, j) = (2.0 * uniform01(net.rng) - 1.0) * limit;
            net.weights.push_back(std::move(w));
            net.biases.push_back(Vector::Zero(fan_out));
        }
        return net;
    }

    int input_size() const { return config.input_size(); }
    int output_size() const { return config.output_size(); }
    int num_layers() const { return config.num_layers(); }

    bool parameters_finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }

    /// Checksum of all parameters; used by stage-purity and sharing checks.
    std::uint64_t parameter_checksum() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& w : weights) h = fnv1a(w.data(), sizeof(double) * w.size(), h);
        for (const auto& b : biases) h = fnv1a(b.data(), sizeof(double) * b.size(), h);
        return h;
    }
};

/// Toggle the dropout layers; evaluation and tracing always bypass them.
inline Network set_dropout(Network net, bool enabled) {
    net.dropout_enabled = enabled;
    return net;
}

inline Vector softmax(const Vector& z) {
    const double m = z.maxCoeff();
    Vector e = (z.array() - m).exp();
    return e / e.sum();
}

/// Per-layer record of one deterministic forward pass (dropout bypassed).
/// pre[0] and post[0] both hold the input; post.back() has the head applied,
/// pre.back() keeps the raw output-layer sums for the slicer.
struct ForwardTrace {
    std::vector<Vector> pre;
    std::vector<Vector> post;
    Vector output;
};

inline ForwardTrace forward_trace(const Network& net, const Vector& x) {
    if (x.size() != net.input_size())
        throw ShapeError("input has " + std::to_string(x.size()) + " features, network expects " +
                         std::to_string(net.input_size()));
    const int L = net.num_layers();
    ForwardTrace t;
    t.pre.resize(L);
    t.post.resize(L);
    t.pre[0] = x;
    t.post[0] = x;
    for (int l = 1; l < L; ++l) {
        t.pre[l] = net.weights[l - 1] * t.post[l - 1] + net.biases[l - 1];
        if (l + 1 < L) {
            t.post[l] = t.pre[l].cwiseMax(0.0);
        } else {
            t.post[l] = net.config.output_head == OutputHead::softmax ? softmax(t.pre[l]) : t.pre[l];
        }
    }
    t.output = t.post.back();
    return t;
}

namespace detail {

/// Batched forward pass, columns are samples. Hidden activations are ReLU;
/// when `use_dropout` and the rate is nonzero, each hidden unit is zeroed per
/// sample with probability `rate` and survivors are scaled by 1/(1-rate).
/// The output layer stays raw (head applied by the caller when needed).
/// Mask draws come from `rng` in layer, column, row order. A zero rate draws
/// nothing, so it is bit-identical to dropout being disabled.
struct BatchForward {
    std::vector<Matrix> pre;   // pre[l], l in [1, L)
    std::vector<Matrix> post;  // post[l]; post[0] = input, post.back() raw
    std::vector<Matrix> masks; // per hidden layer; empty when unused
};

inline BatchForward forward_batch(const Network& net, const Matrix& x, bool use_dropout, Rng& rng) {
    if (x.rows() != net.input_size()) throw ShapeError("batch feature dimension mismatch");
    const int L = net.num_layers();
    const double rate = net.config.dropout_rate;
    const bool masking = use_dropout && rate > 0.0;
    BatchForward f;
    f.pre.resize(L);
    f.post.resize(L);
    if (masking) f.masks.resize(L);
    f.post[0] = x;
    for (int l = 1; l < L; ++l) {
        f.pre[l] = (net.weights[l - 1] * f.post[l - 1]).colwise() + net.biases[l - 1];
        if (l + 1 < L) {
            f.post[l] = f.pre[l].cwiseMax(0.0);
            if (masking) {
                const double scale = 1.0 / (1.0 - rate);
                Matrix mask(f.post[l].rows(), f.post[l].cols());
                for (Eigen::Index c = 0; c < mask.cols(); ++c)
                    for (Eigen::Index r = 0; r < mask.rows(); ++r)
                        mask(r, c) = uniform01(rng) < rate ? 0.0 : scale;
                f.masks[l] = mask;
                f.post[l] = f.post[l].cwiseProduct(mask);
            }
        } else {
            f.post[l] = f.pre[l];
        }
    }
    return f;
}

}  // namespace detail

}  // namespace fairneuron
