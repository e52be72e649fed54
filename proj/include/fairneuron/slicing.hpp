#pragma once

// Network slicing: profile average neuron behavior over a reference dataset,
// compute per-sample relative activations, and extract activation paths by
// backward greedy contribution tracing.
//
// Per-neuron values are the layer outputs: the raw input for layer 0, the
// ReLU output for hidden layers, and the raw pre-head sums for the output
// layer. A neuron's relative value is its value minus the profiled mean.
// Contributions and coverage targets use magnitudes throughout; a frontier
// neuron with relative value exactly 0 is never expanded.

#include "fairneuron/common.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fairneuron {

/// Per-neuron mean value over a reference dataset, one vector per layer.
struct ActivationProfile {
    std::vector<Vector> mean;

    static ActivationProfile zeros(const NetworkConfig& cfg) {
        ActivationProfile p;
        for (int s : cfg.layer_sizes) p.mean.push_back(Vector::Zero(s));
        return p;
    }

    void check_shape(const Network& net) const {
        if (mean.size() != static_cast<std::size_t>(net.num_layers()))
            throw ShapeError("profile layer count mismatch");
        for (std::size_t l = 0; l < mean.size(); ++l) {
            if (mean[l].size() != net.config.layer_sizes[l])
                throw ShapeError("profile size mismatch at layer " + std::to_string(l));
            if (!mean[l].allFinite()) throw DataError("profile contains non-finite values");
        }
    }
};

namespace detail {

inline constexpr int kProfileBlock = 256;

/// Sum of per-neuron values over rows [begin, end), accumulated sample by
/// sample in index order through the same single-sample forward used by the
/// path extractor, so blocking never changes the arithmetic.
inline std::vector<Vector> value_sums(const Network& net, const Matrix& x_rows, int begin, int end) {
    std::vector<Vector> sums;
    for (int s : net.config.layer_sizes) sums.push_back(Vector::Zero(s));
    for (int i = begin; i < end; ++i) {
        const ForwardTrace t = forward_trace(net, x_rows.row(i).transpose());
        for (std::size_t l = 0; l < sums.size(); ++l)
            sums[l] += l + 1 == sums.size() ? t.pre[l] : t.post[l];
    }
    return sums;
}

}  // namespace detail

/// Arithmetic mean of per-neuron values over the dataset, dropout bypassed.
/// The reduction runs over fixed-size blocks combined in index order, so the
/// result does not depend on the worker count.
inline ActivationProfile profile_averages(const Network& net, const EncodedDataset& data,
                                          int n_threads = 1) {
    if (data.n_rows() == 0) throw DataError("cannot profile an empty dataset");
    if (data.n_features() != net.config.input_size())
        throw ShapeError("dataset/network feature mismatch");
    if (n_threads < 1) throw ConfigError("n_threads must be at least 1");
    const int n = data.n_rows();

    const int n_blocks = (n + detail::kProfileBlock - 1) / detail::kProfileBlock;
    std::vector<std::vector<Vector>> block_sums(static_cast<std::size_t>(n_blocks));
    const int workers = std::min(n_threads, n_blocks);
    auto run = [&](int worker) {
        for (int b = worker; b < n_blocks; b += workers) {
            const int begin = b * detail::kProfileBlock;
            const int end = std::min(n, begin + detail::kProfileBlock);
            block_sums[static_cast<std::size_t>(b)] = detail::value_sums(net, data.X, begin, end);
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }

    ActivationProfile p = ActivationProfile::zeros(net.config);
    for (int b = 0; b < n_blocks; ++b)
        for (std::size_t l = 0; l < p.mean.size(); ++l)
            p.mean[l] += block_sums[static_cast<std::size_t>(b)][l];
    for (auto& v : p.mean) v /= static_cast<double>(n);
    return p;
}

/// Per-neuron relative values for one traced sample: value minus profiled
/// mean. Layer 0 uses the input, hidden layers the ReLU outputs, and the
/// output layer the raw pre-head sums.
inline std::vector<Vector> relative_activations(const ForwardTrace& trace, const ActivationProfile& profile) {
    if (trace.pre.size() != profile.mean.size()) throw ShapeError("trace/profile layer count mismatch");
    std::vector<Vector> rel(trace.pre.size());
    for (std::size_t l = 0; l < trace.pre.size(); ++l) {
        const Vector& value = l + 1 == trace.pre.size() ? trace.pre[l] : trace.post[l];
        if (value.size() != profile.mean[l].size())
            throw ShapeError("trace/profile size mismatch at layer " + std::to_string(l));
        rel[l] = value - profile.mean[l];
    }
    return rel;
}

struct SynapseEdge {
    int layer;  // edge from layer `layer` into `layer + 1`
    int pre;
    int post;

    friend bool operator==(const SynapseEdge&, const SynapseEdge&) = default;
    friend auto operator<=>(const SynapseEdge&, const SynapseEdge&) = default;
};

inline std::string canonical_key(std::vector<SynapseEdge> edges) {
    std::sort(edges.begin(), edges.end());
    std::string key;
    for (const auto& e : edges) {
        if (!key.empty()) key += ';';
        key += std::to_string(e.layer) + ':' + std::to_string(e.pre) + ':' + std::to_string(e.post);
    }
    return key;
}

struct ActivationPath {
    std::vector<SynapseEdge> edges;  // sorted by (layer, pre, post)
    std::string key;
    int sample_id = -1;
};

enum class SeedRule { argmax, true_label };

struct SliceParams {
    double gamma = 1.0;
    SeedRule seed_rule = SeedRule::argmax;

    void validate() const {
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
    }
};

namespace detail {

inline int seed_neuron(const Network& net, const ForwardTrace& trace, const SliceParams& params,
                       int label) {
    if (net.config.output_head == OutputHead::linear) return 0;
    if (params.seed_rule == SeedRule::true_label) {
        if (label < 0 || label >= net.output_size())
            throw DataError("true-label seeding needs a label within the output layer");
        return label;
    }
    const Vector& z = trace.pre.back();
    int best = 0;
    for (int i = 1; i < z.size(); ++i)
        if (z[i] > z[best]) best = i;
    return best;
}

}  // namespace detail

/// Backward greedy path extraction. Starting from the seed output neuron,
/// each frontier neuron q with relative value v != 0 ranks its predecessors
/// by |contribution| (contribution = predecessor relative value x synapse
/// weight, ties to the lower index) and selects the shortest prefix whose
/// magnitude sum exceeds gamma * |v|; if the sum never exceeds the target,
/// every predecessor is selected. Selected predecessors become the next
/// frontier; each neuron is expanded at most once.
inline ActivationPath get_activation_path(const Network& net, const Vector& x, const SliceParams& params,
                                          const ActivationProfile& profile, int label = -1) {
    params.validate();
    profile.check_shape(net);
    const ForwardTrace trace = forward_trace(net, x);
    const std::vector<Vector> rel = relative_activations(trace, profile);
    const int L = net.num_layers();

    ActivationPath path;
    std::set<int> frontier = {detail::seed_neuron(net, trace, params, label)};
    for (int lq = L - 1; lq >= 1 && !frontier.empty(); --lq) {
        std::set<int> next;
        const Matrix& w = net.weights[static_cast<std::size_t>(lq - 1)];
        for (int q : frontier) {
            const double v = rel[static_cast<std::size_t>(lq)][q];
            if (v == 0.0) continue;
            const double target = params.gamma * std::abs(v);
            const int n_pred = static_cast<int>(w.cols());
            std::vector<int> order(static_cast<std::size_t>(n_pred));
            std::vector<double> mag(static_cast<std::size_t>(n_pred));
            for (int n = 0; n < n_pred; ++n) {
                order[static_cast<std::size_t>(n)] = n;
                mag[static_cast<std::size_t>(n)] =
                    std::abs(rel[static_cast<std::size_t>(lq - 1)][n] * w(q, n));
            }
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double ma = mag[static_cast<std::size_t>(a)];
                const double mb = mag[static_cast<std::size_t>(b)];
                if (ma != mb) return ma > mb;
                return a < b;
            });
            double sum = 0.0;
            for (int n : order) {
                if (sum > target) break;
                path.edges.push_back({lq - 1, n, q});
                next.insert(n);
                sum += mag[static_cast<std::size_t>(n)];
            }
        }
        frontier = std::move(next);
    }
    std::sort(path.edges.begin(), path.edges.end());
    path.key = canonical_key(path.edges);
    return path;
}

/// One path per sample, tagged with its row index. When no profile is given
/// it is computed from `data` itself. Work is split across `n_threads`
/// workers into preassigned slots, so the result never depends on scheduling.
inline std::vector<ActivationPath> slice_dataset(const Network& net, const EncodedDataset& data,
                                                 const SliceParams& params,
                                                 const ActivationProfile* profile = nullptr,
                                                 int n_threads = 1) {
    params.validate();
    if (data.n_rows() == 0) throw DataError("cannot slice an empty dataset");
    if (n_threads < 1) throw ConfigError("n_threads must be at least 1");
    const ActivationProfile computed =
        profile ? ActivationProfile{} : profile_averages(net, data, n_threads);
    const ActivationProfile& prof = profile ? *profile : computed;
    prof.check_shape(net);

    const int n = data.n_rows();
    std::vector<ActivationPath> paths(static_cast<std::size_t>(n));
    auto run = [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const int label = params.seed_rule == SeedRule::true_label ? data.y[static_cast<std::size_t>(i)] : -1;
            paths[static_cast<std::size_t>(i)] =
                get_activation_path(net, data.X.row(i).transpose(), params, prof, label);
            paths[static_cast<std::size_t>(i)].sample_id = i;
        }
    };
    const int workers = std::min(n_threads, n);
    if (workers <= 1) {
        run(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(run, w * chunk, std::min(n, (w + 1) * chunk));
        for (auto& t : pool) t.join();
    }
    return paths;
}

/// JSON-lines dump: one record per sample,
/// {"sample_id": i, "canonical_key": k, "edges": [[l, pre, post], ...]}.
inline void dump_paths(const std::vector<ActivationPath>& paths, std::ostream& out) {
    for (const auto& p : paths) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& e : p.edges) edges.push_back({e.layer, e.pre, e.post});
        const nlohmann::json j = {
            {"sample_id", p.sample_id}, {"canonical_key", p.key}, {"edges", std::move(edges)}};
        out << j.dump() << "\n";
    }
}

inline void dump_paths(const std::vector<ActivationPath>& paths, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file + " for writing");
    dump_paths(paths, out);
    if (!out) throw Error("write failed for " + file);
}

inline std::vector<ActivationPath> load_paths(std::istream& in) {
    std::vector<ActivationPath> paths;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            ActivationPath p;
            p.sample_id = j.at("sample_id").get<int>();
            for (const auto& e : j.at("edges"))
                p.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
            std::sort(p.edges.begin(), p.edges.end());
            p.key = canonical_key(p.edges);
            const std::string stored = j.at("canonical_key").get<std::string>();
            if (stored != p.key)
                throw Error("canonical key mismatch on line " + std::to_string(line_no));
            paths.push_back(std::move(p));
        } catch (const nlohmann::json::exception& e) {
            throw Error("path dump line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return paths;
}

inline std::vector<ActivationPath> load_paths(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open " + file);
    return load_paths(in);
}

}  // namespace fairneuron
