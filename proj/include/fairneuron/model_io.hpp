#pragma once

// Versioned model files. Format v1 is a JSON document:
//   {"format": "fairneuron-model", "version": 1,
//    "config": {"layer_sizes": [...], "hidden_activation": "relu",
//               "output_head": "softmax"|"linear", "dropout_rate": r, "seed": s},
//    "dropout_enabled": bool, "rng": "<generator state>",
//    "layers": [{"weights": [[row-major]], "bias": [...]}, ...]}
// Doubles round-trip exactly (shortest-round-trip JSON encoding).

#include "fairneuron/network.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace fairneuron {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const Network& net) {
    nlohmann::json j;
    j["format"] = "fairneuron-model";
    j["version"] = kModelFormatVersion;
    j["config"] = {
        {"layer_sizes", net.config.layer_sizes},
        {"hidden_activation", "relu"},
        {"output_head", net.config.output_head == OutputHead::softmax ? "softmax" : "linear"},
        {"dropout_rate", net.config.dropout_rate},
        {"seed", net.config.seed},
    };
    j["dropout_enabled"] = net.dropout_enabled;
    std::ostringstream rng_state;
    rng_state << net.rng;
    j["rng"] = rng_state.str();
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        const Matrix& w = net.weights[l];
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
            rows.push_back(std::move(row));
        }
        nlohmann::json bias = nlohmann::json::array();
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) bias.push_back(net.biases[l](r));
        layers.push_back({{"weights", std::move(rows)}, {"bias", std::move(bias)}});
    }
    j["layers"] = std::move(layers);
    return j;
}

inline Network model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version"))
        throw ModelParseError("not a model document", 0);
    if (j.value("format", "") != "fairneuron-model")
        throw ModelParseError("missing or wrong format tag", 0);
    if (!j["version"].is_number_integer())
        throw ModelParseError("model version field is not an integer", 0);
    const int version = j["version"].get<int>();
    if (version != kModelFormatVersion) throw ModelVersionError(version, kModelFormatVersion);
    try {
        NetworkConfig cfg;
        const auto& jc = j.at("config");
        cfg.layer_sizes = jc.at("layer_sizes").get<std::vector<int>>();
        cfg.output_head =
            jc.at("output_head").get<std::string>() == "linear" ? OutputHead::linear : OutputHead::softmax;
        cfg.dropout_rate = jc.at("dropout_rate").get<double>();
        cfg.seed = jc.at("seed").get<std::uint64_t>();
        cfg.validate();

        Network net;
        net.config = cfg;
        net.dropout_enabled = j.at("dropout_enabled").get<bool>();
        std::istringstream rng_state(j.at("rng").get<std::string>());
        rng_state >> net.rng;
        if (rng_state.fail()) throw ModelParseError("corrupt rng state", 0);

        const auto& layers = j.at("layers");
        const int L = cfg.num_layers();
        if (static_cast<int>(layers.size()) != L - 1)
            throw ModelParseError("layer count does not match config", 0);
        for (int l = 0; l + 1 < L; ++l) {
            const int rows = cfg.layer_sizes[l + 1];
            const int cols = cfg.layer_sizes[l];
            const auto& jw = layers[l].at("weights");
            const auto& jb = layers[l].at("bias");
            if (static_cast<int>(jw.size()) != rows || static_cast<int>(jb.size()) != rows)
                throw ModelParseError("weight shape does not match config", 0);
            Matrix w(rows, cols);
            for (int r = 0; r < rows; ++r) {
                if (static_cast<int>(jw[r].size()) != cols)
                    throw ModelParseError("weight shape does not match config", 0);
                for (int c = 0; c < cols; ++c) w(r, c) = jw[r][c].get<double>();
            }
            Vector b(rows);
            for (int r = 0; r < rows; ++r) b(r) = jb[r].get<double>();
            net.weights.push_back(std::move(w));
            net.biases.push_back(std::move(b));
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ModelParseError(std::string("malformed model document: ") + e.what(), 0);
    }
}

inline void save_model(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << model_to_json(net).dump(2) << "\n";
    if (!out) throw Error("write failed for " + path);
}

inline Network load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ModelParseError(e.what(), e.byte);
    }
    return model_from_json(j);
}

}  // namespace fairneuron
