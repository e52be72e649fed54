#pragma once

// Reference fixers for comparison runs. Reweighing assigns each training row
// the weight P(S=s)P(Y=y)/P(S=s,Y=y) of its group-label cell, feeding
// TrainConfig.per_sample_weights. Reject option classification flips
// predictions inside a confidence band around the decision boundary in favor
// of the disadvantaged group.

#include "fairneuron/dataset.hpp"
#include "fairneuron/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace fairneuron {

struct SampleWeights {
    std::vector<double> weights;  // one per row, normalized to mean 1
    double cell[2][2] = {{0.0, 0.0}, {0.0, 0.0}};  // cell[s][y] before normalization
};

/// Empirical reweighing: w(s, y) = P(S=s) * P(Y=y) / P(S=s, Y=y). Features
/// and labels are untouched; only per-sample training weights are produced.
inline SampleWeights reweigh(const EncodedDataset& data) {
    const int n = data.n_rows();
    if (n == 0) throw DataError("cannot reweigh an empty dataset");
    int count[2][2] = {{0, 0}, {0, 0}};
    int n_s[2] = {0, 0};
    int n_y[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
        const int s = data.s[static_cast<std::size_t>(i)];
        const int y = data.y[static_cast<std::size_t>(i)];
        if (s < 0 || s > 1 || y < 0 || y > 1)
            throw DataError("reweighing requires binary sensitive values and labels");
        ++count[s][y];
        ++n_s[s];
        ++n_y[y];
    }
    for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y)
            if (count[s][y] == 0)
                throw DataError("reweighing needs every (S, Y) cell populated; cell (S=" +
                                std::to_string(s) + ", Y=" + std::to_string(y) + ") is empty");

    SampleWeights out;
    for (int s = 0; s < 2; ++s)
        for (int y = 0; y < 2; ++y)
            out.cell[s][y] = static_cast<double>(n_s[s]) * static_cast<double>(n_y[y]) /
                             (static_cast<double>(n) * static_cast<double>(count[s][y]));
    out.weights.resize(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = out.cell[data.s[static_cast<std::size_t>(i)]][data.y[static_cast<std::size_t>(i)]];
        out.weights[static_cast<std::size_t>(i)] = w;
        sum += w;
    }
    const double mean = sum / static_cast<double>(n);
    for (double& w : out.weights) w /= mean;
    return out;
}

struct ROCConfig {
    double margin = 0.0;  // half-width of the band around the 0.5 boundary

    void validate() const {
        if (!(margin >= 0.0 && margin < 0.5)) throw ConfigError("margin must be in [0, 0.5)");
    }
};

/// Reject option classification over positive-class scores: predictions with
/// |score - 0.5| < margin go to the disadvantaged group's favor (1 if S=1,
/// 0 if S=0); everything else thresholds at 0.5 as usual.
inline std::vector<int> roc_postprocess(const std::vector<double>& scores, const std::vector<int>& s,
                                        const ROCConfig& cfg) {
    cfg.validate();
    if (scores.size() != s.size())
        throw ShapeError("scores and sensitive values must have equal length");
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double score = scores[i];
        if (!(score >= 0.0 && score <= 1.0))
            throw DataError("scores must lie in [0, 1]; got " + std::to_string(score));
        if (s[i] != 0 && s[i] != 1) throw DataError("sensitive values must be 0 or 1");
        if (std::abs(score - 0.5) < cfg.margin)
            preds[i] = s[i];
        else
            preds[i] = score > 0.5 ? 1 : 0;
    }
    return preds;
}

inline std::vector<double> default_roc_margin_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 45; ++i) grid.push_back(static_cast<double>(i) / 100.0);
    return grid;
}

/// Pick the band half-width on a validation split: the smallest margin that
/// minimizes demographic parity among margins whose accuracy stays within
/// `max_accuracy_drop` of the zero-margin accuracy. Margin 0 is always
/// feasible, so a result always exists.
inline ROCConfig select_roc_margin(const std::vector<double>& scores, const std::vector<int>& y,
                                   const std::vector<int>& s, double max_accuracy_drop = 0.05,
                                   const std::vector<double>& grid = default_roc_margin_grid()) {
    if (scores.size() != y.size() || scores.size() != s.size())
        throw ShapeError("scores, labels and sensitive values must have equal length");
    if (grid.empty()) throw ConfigError("margin grid must be nonempty");
    if (max_accuracy_drop < 0.0) throw ConfigError("max_accuracy_drop must be nonnegative");
    std::vector<double> margins = grid;
    std::sort(margins.begin(), margins.end());

    const auto measure = [&](double margin) {
        ROCConfig cfg;
        cfg.margin = margin;
        PredictionSet p;
        p.y_hat = roc_postprocess(scores, s, cfg);
        p.y = y;
        p.s = s;
        return std::pair<double, double>(accuracy(p), demographic_parity(p));
    };
    const auto [base_acc, base_dp] = measure(0.0);

    double best_margin = 0.0;
    double best_dp = base_dp;
    bool found = false;
    for (double margin : margins) {
        ROCConfig check;
        check.margin = margin;
        check.validate();
        const auto [acc, dp] = measure(margin);
        if (acc < base_acc - max_accuracy_drop) continue;
        if (!found || dp < best_dp) {
            found = true;
            best_dp = dp;
            best_margin = margin;
        }
    }
    ROCConfig out;
    out.margin = found ? best_margin : 0.0;
    return out;
}

}  // namespace fairneuron
