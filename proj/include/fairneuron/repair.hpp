#pragma once

// Selective retraining and the end-to-end repair pipeline. The repaired model
// continues training from the biased one: each retraining epoch runs a pass
// over the ordinary samples with dropout disabled, then a pass over the
// biased samples with dropout enabled, sharing one optimizer state.

#include "fairneuron/clustering.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/metrics.hpp"
#include "fairneuron/slicing.hpp"
#include "fairneuron/train.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fairneuron {

enum class Interleave {
    epoch_alternating,  // per epoch: ordinary pass, then biased pass
    block_sequential,   // all ordinary epochs, then all biased epochs
};

inline std::string to_string(Interleave mode) {
    return mode == Interleave::epoch_alternating ? "epoch_alternating" : "block_sequential";
}

inline Interleave interleave_from_string(const std::string& s) {
    if (s == "epoch_alternating") return Interleave::epoch_alternating;
    if (s == "block_sequential") return Interleave::block_sequential;
    throw ConfigError("unknown interleave mode: " + s);
}

struct RepairConfig {
    double theta = 0.03;
    double gamma = 1.0;
    double dropout_rate = 0.5;  // rate used during the biased passes
    int retrain_epochs = 20;
    TrainConfig retrain;  // learning rate / batch size for the retraining passes
    Interleave interleave = Interleave::epoch_alternating;
    SeedRule seed_rule = SeedRule::argmax;
    FairnessThresholds thresholds;
    int slice_threads = 1;

    void validate() const {
        SliceParams sp;
        sp.gamma = gamma;
        sp.validate();
        ClusterParams cp;
        cp.theta = theta;
        cp.validate();
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("dropout_rate must be in [0, 1)");
        if (retrain_epochs < 1) throw ConfigError("retrain_epochs must be at least 1");
        if (slice_threads < 1) throw ConfigError("slice_threads must be at least 1");
        retrain.validate();
        thresholds.validate();
    }
};

struct StageTimings {
    double slicing_seconds = 0.0;
    double clustering_seconds = 0.0;
    double training_seconds = 0.0;
    double total_seconds = 0.0;
};

struct RepairOutcome {
    Network repaired;
    FairnessReport before;
    FairnessReport after;
    SampleSplit split;
    StageTimings timings;
};

/// Continue training `net` with dropout off on the ordinary samples and on
/// for the biased samples. One Adam state spans all passes, starting from
/// fresh moment buffers; the learning rate stays fixed. An empty biased set
/// degenerates to plain fine-tuning on the ordinary samples.
inline Network selective_train(const Network& net, const EncodedDataset& ordinary,
                               const EncodedDataset& biased, const RepairConfig& cfg) {
    cfg.validate();
    if (ordinary.n_rows() == 0 && biased.n_rows() == 0)
        throw DataError("selective training needs at least one sample");
    for (const EncodedDataset* part : {&ordinary, &biased}) {
        if (part->n_rows() == 0) continue;
        if (part->n_features() != net.config.input_size())
            throw ShapeError("dataset has " + std::to_string(part->n_features()) +
                             " features, network expects " + std::to_string(net.config.input_size()));
        detail::check_labels(net, part->y);
    }
    if (!cfg.retrain.per_sample_weights.empty())
        throw ConfigError("per-sample weights are not supported during selective retraining");

    Network out = net;
    out.config.dropout_rate = cfg.dropout_rate;
    AdamState state = AdamState::zeros(out);
    const Matrix ordinary_x = ordinary.X.transpose();
    const Matrix biased_x = biased.X.transpose();
    const double lr = cfg.retrain.learning_rate;

    const auto ordinary_pass = [&](int epoch) {
        if (ordinary.n_rows() == 0) return;
        out.dropout_enabled = false;
        train_epoch(out, state, ordinary_x, ordinary.y, cfg.retrain, lr, epoch);
    };
    const auto biased_pass = [&](int epoch) {
        if (biased.n_rows() == 0) return;
        out.dropout_enabled = true;
        train_epoch(out, state, biased_x, biased.y, cfg.retrain, lr, epoch);
    };

    if (cfg.interleave == Interleave::epoch_alternating) {
        for (int epoch = 0; epoch < cfg.retrain_epochs; ++epoch) {
            ordinary_pass(epoch);
            biased_pass(epoch);
        }
    } else {
        for (int epoch = 0; epoch < cfg.retrain_epochs; ++epoch) ordinary_pass(epoch);
        for (int epoch = 0; epoch < cfg.retrain_epochs; ++epoch) biased_pass(epoch);
    }
    out.dropout_enabled = false;
    return out;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void check_split_ids(const SampleSplit& split, int n_rows) {
    std::set<int> seen;
    for (const auto* ids : {&split.ordinary_sample_ids, &split.biased_sample_ids})
        for (int id : *ids) {
            if (id < 0 || id >= n_rows)
                throw DataError("split references sample " + std::to_string(id) + " outside the dataset");
            if (!seen.insert(id).second)
                throw DataError("split lists sample " + std::to_string(id) + " twice");
        }
    if (seen.empty()) throw DataError("split selects no samples");
}

}  // namespace detail

/// Retrain with an externally supplied sample division (used for the
/// size-matched random-control ablation). Only the training stage is timed;
/// slicing/clustering timings stay zero.
inline RepairOutcome repair_with_split(const Network& net, const EncodedDataset& train_data,
                                       const EncodedDataset& test_data, const RepairConfig& cfg,
                                       SampleSplit split) {
    cfg.validate();
    detail::check_split_ids(split, train_data.n_rows());
    const auto t_total = std::chrono::steady_clock::now();
    RepairOutcome out;
    out.split = std::move(split);
    out.before = evaluate(net, test_data, cfg.thresholds);
    const auto t_train = std::chrono::steady_clock::now();
    const EncodedDataset ordinary = train_data.subset(out.split.ordinary_sample_ids);
    const EncodedDataset biased = train_data.subset(out.split.biased_sample_ids);
    out.repaired = selective_train(net, ordinary, biased, cfg);
    out.timings.training_seconds = detail::seconds_since(t_train);
    out.after = evaluate(out.repaired, test_data, cfg.thresholds);
    out.timings.total_seconds = detail::seconds_since(t_total);
    return out;
}

/// Full pipeline: profile and slice every training sample, divide the samples
/// by path frequency, selectively retrain, and evaluate before/after on the
/// held-out test set. Stage wall-clock timings are recorded per stage.
inline RepairOutcome fairneuron_repair(const Network& net, const EncodedDataset& train_data,
                                       const EncodedDataset& test_data, const RepairConfig& cfg) {
    cfg.validate();
    if (train_data.n_rows() == 0) throw DataError("repair needs a nonempty training set");

    const auto t_total = std::chrono::steady_clock::now();
    SliceParams slice_params;
    slice_params.gamma = cfg.gamma;
    slice_params.seed_rule = cfg.seed_rule;

    auto t_stage = std::chrono::steady_clock::now();
    std::vector<ActivationPath> paths;
    try {
        paths = slice_dataset(net, train_data, slice_params, nullptr, cfg.slice_threads);
    } catch (const Error& e) {
        throw Error(std::string("slicing stage: ") + e.what());
    }
    const double slicing_seconds = detail::seconds_since(t_stage);

    t_stage = std::chrono::steady_clock::now();
    SampleSplit split;
    try {
        const PathTable table = build_path_table(paths);
        ClusterParams cluster_params;
        cluster_params.theta = cfg.theta;
        split = get_samples_divided(table, cluster_params);
    } catch (const Error& e) {
        throw Error(std::string("clustering stage: ") + e.what());
    }
    const double clustering_seconds = detail::seconds_since(t_stage);

    RepairOutcome out = repair_with_split(net, train_data, test_data, cfg, std::move(split));
    out.timings.slicing_seconds = slicing_seconds;
    out.timings.clustering_seconds = clustering_seconds;
    out.timings.total_seconds = detail::seconds_since(t_total);
    return out;
}

/// Size-matched random control: draw as many biased samples as the reference
/// split has, uniformly without replacement; the rest are ordinary.
inline SampleSplit random_split_like(const SampleSplit& reference, int n_samples, Rng& rng) {
    if (n_samples <= 0) throw DataError("random split needs a nonempty dataset");
    const std::size_t biased_count = reference.biased_sample_ids.size();
    if (biased_count > static_cast<std::size_t>(n_samples))
        throw DataError("reference split has more biased samples than the dataset");
    const std::vector<int> perm = shuffled_indices(static_cast<std::size_t>(n_samples), rng);
    SampleSplit split;
    split.theta = reference.theta;
    split.max_frequency = reference.max_frequency;
    split.biased_sample_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(biased_count));
    split.ordinary_sample_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(biased_count), perm.end());
    std::sort(split.biased_sample_ids.begin(), split.biased_sample_ids.end());
    std::sort(split.ordinary_sample_ids.begin(), split.ordinary_sample_ids.end());
    return split;
}

inline nlohmann::json timings_to_json(const StageTimings& t) {
    return nlohmann::json{
        {"slicing", t.slicing_seconds},
        {"clustering", t.clustering_seconds},
        {"training", t.training_seconds},
        {"total", t.total_seconds},
    };
}

/// Repair report: before/after metrics, the sample division, and per-stage
/// wall-clock timings.
inline nlohmann::json outcome_to_json(const RepairOutcome& out) {
    return nlohmann::json{
        {"before", out.before.to_json()},
        {"after", out.after.to_json()},
        {"split",
         {{"ordinary", out.split.ordinary_sample_ids.size()},
          {"biased", out.split.biased_sample_ids.size()},
          {"biased_paths", out.split.biased_path_keys.size()},
          {"theta", out.split.theta},
          {"M", out.split.max_frequency}}},
        {"timings", timings_to_json(out.timings)},
    };
}

}  // namespace fairneuron
