#pragma once

// Mini-batch training: cross-entropy (softmax head) or squared error (linear
// head), Adam updates, per-sample weights, and reduce-on-plateau learning-rate
// scheduling. All batch order and dropout randomness comes from the network's
// own RNG stream, so training is a pure function of (network, data, config).

#include "fairneuron/common.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/network.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace fairneuron {

struct TrainConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.9999;
    double adam_epsilon = 1e-8;
    int batch_size = 128;
    int max_epochs = 30;
    double plateau_factor = 0.1;
    int plateau_patience = 5;
    std::vector<double> per_sample_weights;  // empty = uniform

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
        if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
        if (max_epochs < 0) throw ConfigError("max_epochs must be non-negative");
        if (!(plateau_factor > 0.0 && plateau_factor < 1.0))
            throw ConfigError("plateau_factor must be in (0, 1)");
        if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
        for (double w : per_sample_weights)
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("sample weights must be finite and non-negative");
    }
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

struct AdamState {
    std::vector<Matrix> m_w, v_w;
    std::vector<Vector> m_b, v_b;
    long step = 0;

    static AdamState zeros(const Network& net) {
        AdamState s;
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            s.m_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            s.v_w.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
            s.m_b.push_back(Vector::Zero(net.biases[l].size()));
            s.v_b.push_back(Vector::Zero(net.biases[l].size()));
        }
        return s;
    }
};

namespace detail {

inline void check_labels(const Network& net, const std::vector<int>& y) {
    const int out = net.config.output_size();
    if (net.config.output_head == OutputHead::linear && out != 1)
        throw ShapeError("linear-head training expects a single output neuron");
    for (int v : y) {
        const int limit = net.config.output_head == OutputHead::softmax ? out : 2;
        if (v < 0 || v >= limit) throw DataError("label " + std::to_string(v) + " out of range");
    }
}

/// Loss and gradients for a forward pass that already happened (so dropout
/// masks, if any, are honored). x columns are samples. weights empty = ones.
inline double loss_and_gradients_from_forward(const Network& net, const BatchForward& fwd,
                                              const std::vector<int>& y,
                                              const std::vector<double>& weights, Gradients& grads) {
    const Eigen::Index batch = fwd.pre.back().cols();
    if (static_cast<Eigen::Index>(y.size()) != batch)
        throw ShapeError("labels/batch size mismatch");
    if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != batch)
        throw ShapeError("weights/batch size mismatch");
    const std::size_t L = net.weights.size();
    const double inv_batch = 1.0 / static_cast<double>(batch);

    grads.weights.resize(L);
    grads.biases.resize(L);

    // dZ for the output layer, already scaled by w_b / batch.
    Matrix dz;
    double loss = 0.0;
    if (net.config.output_head == OutputHead::softmax) {
        Matrix p = fwd.pre.back();
        for (Eigen::Index b = 0; b < batch; ++b) {
            Vector col = p.col(b);
            col.array() -= col.maxCoeff();
            col = col.array().exp();
            col /= col.sum();
            p.col(b) = col;
        }
        dz = p;
        for (Eigen::Index b = 0; b < batch; ++b) {
            const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(b)];
            const int label = y[static_cast<std::size_t>(b)];
            loss += w * -std::log(std::max(p(label, b), 1e-300)) * inv_batch;
            dz(label, b) -= 1.0;
            dz.col(b) *= w * inv_batch;
        }
    } else {
        dz = fwd.pre.back();
        for (Eigen::Index b = 0; b < batch; ++b) {
            const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(b)];
            const double err = dz(0, b) - static_cast<double>(y[static_cast<std::size_t>(b)]);
            loss += w * err * err * inv_batch;
            dz(0, b) = 2.0 * err * w * inv_batch;
        }
    }

    for (std::size_t l = L; l-- > 0;) {
        grads.weights[l] = dz * fwd.post[l].transpose();
        grads.biases[l] = dz.rowwise().sum();
        if (l == 0) break;
        Matrix da = net.weights[l].transpose() * dz;
        if (!fwd.masks.empty() && fwd.masks[l].size() != 0)
            da.array() *= fwd.masks[l].array();
        dz = da.array() * (fwd.pre[l].array() > 0.0).cast<double>();
    }
    return loss;
}

}  // namespace detail

/// Deterministic loss + gradients on a batch (columns are samples), dropout
/// bypassed. This is the differentiation primitive; training applies dropout
/// by backpropagating through a masked forward pass instead.
inline double loss_and_gradients(const Network& net, const Matrix& x, const std::vector<int>& y,
                                 const std::vector<double>& weights, Gradients& grads) {
    detail::check_labels(net, y);
    Rng unused(0);
    detail::BatchForward fwd = detail::forward_batch(net, x, false, unused);
    return detail::loss_and_gradients_from_forward(net, fwd, y, weights, grads);
}

inline void adam_update(Network& net, AdamState& state, const Gradients& grads, const TrainConfig& cfg,
                        double learning_rate) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        state.m_w[l] = cfg.beta1 * state.m_w[l] + (1.0 - cfg.beta1) * grads.weights[l];
        state.v_w[l] = cfg.beta2 * state.v_w[l].array() + (1.0 - cfg.beta2) * grads.weights[l].array().square();
        net.weights[l].array() -=
            learning_rate * (state.m_w[l].array() / bc1) / ((state.v_w[l].array() / bc2).sqrt() + cfg.adam_epsilon);
        state.m_b[l] = cfg.beta1 * state.m_b[l] + (1.0 - cfg.beta1) * grads.biases[l];
        state.v_b[l] = cfg.beta2 * state.v_b[l].array() + (1.0 - cfg.beta2) * grads.biases[l].array().square();
        net.biases[l].array() -=
            learning_rate * (state.m_b[l].array() / bc1) / ((state.v_b[l].array() / bc2).sqrt() + cfg.adam_epsilon);
    }
}

/// Mean loss over a dataset, dropout bypassed, uniform weights.
inline double evaluate_loss(const Network& net, const EncodedDataset& data) {
    if (data.n_rows() == 0) throw DataError("cannot evaluate loss on an empty dataset");
    Gradients scratch;
    const Matrix xt = data.X.transpose();
    return loss_and_gradients(net, xt, data.y, {}, scratch);
}

/// One seeded pass over the data in shuffled mini-batches. Dropout is applied
/// when the network has it enabled. Returns the size-weighted mean batch loss.
inline double train_epoch(Network& net, AdamState& state, const Matrix& x_cols,
                          const std::vector<int>& y, const TrainConfig& cfg, double learning_rate,
                          int epoch_for_errors) {
    const int n = static_cast<int>(x_cols.cols());
    const std::vector<int> perm = shuffled_indices(static_cast<std::size_t>(n), net.rng);
    double epoch_loss = 0.0;
    Gradients grads;
    for (int start = 0; start < n; start += cfg.batch_size) {
        const int count = std::min(cfg.batch_size, n - start);
        std::vector<int> idx(perm.begin() + start, perm.begin() + start + count);
        const Matrix xb = x_cols(Eigen::all, idx);
        std::vector<int> yb(static_cast<std::size_t>(count));
        std::vector<double> wb;
        if (!cfg.per_sample_weights.empty()) wb.resize(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            yb[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            if (!wb.empty())
                wb[static_cast<std::size_t>(i)] =
                    cfg.per_sample_weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        }
        detail::BatchForward fwd = detail::forward_batch(net, xb, net.dropout_enabled, net.rng);
        const double loss = detail::loss_and_gradients_from_forward(net, fwd, yb, wb, grads);
        if (!std::isfinite(loss)) throw TrainingDivergedError(epoch_for_errors);
        adam_update(net, state, grads, cfg, learning_rate);
        if (!net.parameters_finite()) throw TrainingDivergedError(epoch_for_errors);
        epoch_loss += loss * static_cast<double>(count);
    }
    return epoch_loss / static_cast<double>(n);
}

/// Reduce-on-plateau: after `patience` consecutive epochs without strict
/// improvement over the best monitored value, multiply the rate by `factor`.
struct PlateauScheduler {
    double learning_rate;
    double factor;
    int patience;
    double best = std::numeric_limits<double>::infinity();
    int wait = 0;

    /// Feed one end-of-epoch monitor value; returns the rate for the next epoch.
    double observe(double monitor) {
        if (monitor < best) {
            best = monitor;
            wait = 0;
        } else if (++wait >= patience) {
            learning_rate *= factor;
            wait = 0;
        }
        return learning_rate;
    }
};

struct TrainResult {
    Network net;
    std::vector<double> train_loss;    // per epoch
    std::vector<double> monitor_loss;  // validation loss if provided, else train loss
    std::vector<double> lr_history;    // learning rate in effect during each epoch
};

/// Full training loop. The plateau scheduler watches validation loss when a
/// validation set is supplied, training loss otherwise; after `patience`
/// epochs without strict improvement over the best seen, the learning rate is
/// multiplied by `plateau_factor`.
inline TrainResult train(Network net, const EncodedDataset& data, const TrainConfig& cfg,
                         const EncodedDataset* validation = nullptr) {
    cfg.validate();
    net.config.validate();
    if (data.n_rows() == 0) throw DataError("cannot train on an empty dataset");
    if (data.n_features() != net.config.input_size())
        throw ShapeError("dataset has " + std::to_string(data.n_features()) + " features, network expects " +
                         std::to_string(net.config.input_size()));
    if (!cfg.per_sample_weights.empty() &&
        cfg.per_sample_weights.size() != static_cast<std::size_t>(data.n_rows()))
        throw ConfigError("per_sample_weights size must match the dataset");
    detail::check_labels(net, data.y);

    TrainResult result;
    AdamState state = AdamState::zeros(net);
    const Matrix x_cols = data.X.transpose();
    PlateauScheduler sched{cfg.learning_rate, cfg.plateau_factor, cfg.plateau_patience};
    double lr = cfg.learning_rate;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double loss = train_epoch(net, state, x_cols, data.y, cfg, lr, epoch);
        const double monitor = validation ? evaluate_loss(net, *validation) : loss;
        result.train_loss.push_back(loss);
        result.monitor_loss.push_back(monitor);
        result.lr_history.push_back(lr);
        lr = sched.observe(monitor);
    }
    result.net = std::move(net);
    return result;
}

}  // namespace fairneuron
