#pragma once

// Path clustering: group sliced samples by canonical path key, count
// activation frequencies, and divide the training set into ordinary and
// biased samples. A path is biased when its frequency is at most
// theta * M, where M is the highest frequency in the table; its member
// samples form the biased list.

#include "fairneuron/common.hpp"
#include "fairneuron/slicing.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace fairneuron {

struct PathGroup {
    std::vector<SynapseEdge> edges;
    std::vector<int> sample_ids;  // ascending
    int frequency = 0;
};

struct PathTable {
    std::map<std::string, PathGroup> groups;  // canonical key -> group
    int max_frequency = 0;
    int total_samples = 0;
};

inline PathTable build_path_table(const std::vector<ActivationPath>& paths) {
    if (paths.empty()) throw DataError("cannot build a path table from zero paths");
    PathTable table;
    for (const auto& p : paths) {
        PathGroup& g = table.groups[p.key];
        if (g.sample_ids.empty()) g.edges = p.edges;
        g.sample_ids.push_back(p.sample_id);
        ++g.frequency;
    }
    table.total_samples = static_cast<int>(paths.size());
    for (auto& [key, g] : table.groups) {
        std::sort(g.sample_ids.begin(), g.sample_ids.end());
        table.max_frequency = std::max(table.max_frequency, g.frequency);
    }
    return table;
}

struct ClusterParams {
    double theta = 0.03;

    void validate() const {
        if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must be in (0, 1]");
    }
};

struct SampleSplit {
    std::vector<int> ordinary_sample_ids;  // ascending
    std::vector<int> biased_sample_ids;    // ascending
    std::vector<std::string> biased_path_keys;
    double theta = 0.0;
    int max_frequency = 0;
};

/// Divide samples by activation frequency: groups with frequency at most
/// theta * M are biased, all others ordinary. Frequencies exactly on the
/// threshold count as biased, so the most frequent path is only guaranteed
/// ordinary when theta < 1.
inline SampleSplit get_samples_divided(const PathTable& table, const ClusterParams& params) {
    params.validate();
    if (table.groups.empty()) throw DataError("cannot divide an empty path table");
    SampleSplit split;
    split.theta = params.theta;
    split.max_frequency = table.max_frequency;
    const double threshold = params.theta * static_cast<double>(table.max_frequency);
    for (const auto& [key, g] : table.groups) {
        const bool biased = static_cast<double>(g.frequency) <= threshold;
        auto& ids = biased ? split.biased_sample_ids : split.ordinary_sample_ids;
        ids.insert(ids.end(), g.sample_ids.begin(), g.sample_ids.end());
        if (biased) split.biased_path_keys.push_back(key);
    }
    std::sort(split.ordinary_sample_ids.begin(), split.ordinary_sample_ids.end());
    std::sort(split.biased_sample_ids.begin(), split.biased_sample_ids.end());
    return split;
}

inline nlohmann::json split_to_json(const SampleSplit& s) {
    return nlohmann::json{
        {"biased_path_keys", s.biased_path_keys},
        {"ordinary_sample_ids", s.ordinary_sample_ids},
        {"biased_sample_ids", s.biased_sample_ids},
        {"theta", s.theta},
        {"M", s.max_frequency},
    };
}

inline SampleSplit split_from_json(const nlohmann::json& j) {
    try {
        SampleSplit s;
        s.biased_path_keys = j.at("biased_path_keys").get<std::vector<std::string>>();
        s.ordinary_sample_ids = j.at("ordinary_sample_ids").get<std::vector<int>>();
        s.biased_sample_ids = j.at("biased_sample_ids").get<std::vector<int>>();
        s.theta = j.at("theta").get<double>();
        s.max_frequency = j.at("M").get<int>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed split document: ") + e.what());
    }
}

inline void save_split(const SampleSplit& s, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file + " for writing");
    out << split_to_json(s).dump(2) << "\n";
    if (!out) throw Error("write failed for " + file);
}

}  // namespace fairneuron
