#pragma once

// Group fairness metrics over binary predictions:
//   demographic parity        DP  = |P(Yhat=1 | S=0) - P(Yhat=1 | S=1)|
//   demographic parity ratio  DPR = P(Yhat=1 | S=1) / P(Yhat=1 | S=0)
//   equal opportunity         EO  = |TPR(S=0) - TPR(S=1)|
// Metrics whose conditioning group is empty throw UndefinedGroupError; the
// report wrapper catches that per metric and records which were undefined.

#include "fairneuron/common.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fairneuron {

struct PredictionSet {
    std::vector<int> y_hat;
    std::vector<int> y;
    std::vector<int> s;

    void validate() const {
        if (y_hat.size() != y.size() || y.size() != s.size())
            throw ShapeError("prediction set columns must have equal length");
        if (y_hat.empty()) throw DataError("prediction set is empty");
        for (std::size_t i = 0; i < y_hat.size(); ++i)
            if ((y_hat[i] & ~1) || (y[i] & ~1) || (s[i] & ~1))
                throw DataError("prediction set entries must be 0 or 1");
    }
};

struct GroupStats {
    long n[2] = {0, 0};           // group sizes by S
    long pred_pos[2] = {0, 0};    // predicted positives by S
    long actual_pos[2] = {0, 0};  // y = 1 by S
    long true_pos[2] = {0, 0};    // y = 1 and y_hat = 1 by S
    long correct = 0;
    long total = 0;

    static GroupStats from(const PredictionSet& p) {
        p.validate();
        GroupStats g;
        g.total = static_cast<long>(p.y.size());
        for (std::size_t i = 0; i < p.y.size(); ++i) {
            const int s = p.s[i];
            ++g.n[s];
            g.pred_pos[s] += p.y_hat[i];
            g.actual_pos[s] += p.y[i];
            g.true_pos[s] += p.y[i] & p.y_hat[i];
            g.correct += p.y_hat[i] == p.y[i];
        }
        return g;
    }

    double positive_rate(int s) const {
        if (n[s] == 0) throw UndefinedGroupError("positive_rate", "group S=" + std::to_string(s) + " is empty");
        return static_cast<double>(pred_pos[s]) / static_cast<double>(n[s]);
    }

    double tpr(int s) const {
        if (actual_pos[s] == 0)
            throw UndefinedGroupError("tpr", "group S=" + std::to_string(s) + " has no positive-label samples");
        return static_cast<double>(true_pos[s]) / static_cast<double>(actual_pos[s]);
    }
};

inline double accuracy(const PredictionSet& p) {
    const GroupStats g = GroupStats::from(p);
    return static_cast<double>(g.correct) / static_cast<double>(g.total);
}

inline double demographic_parity(const PredictionSet& p) {
    const GroupStats g = GroupStats::from(p);
    if (g.n[0] == 0 || g.n[1] == 0)
        throw UndefinedGroupError("demographic_parity", "both sensitive groups must be present");
    return std::abs(g.positive_rate(0) - g.positive_rate(1));
}

struct DprValue {
    double value = 1.0;
    bool is_inf = false;
};

/// DPR with the 0/0 = 1 and x/0 = infinity conventions.
inline DprValue demographic_parity_ratio(const PredictionSet& p) {
    const GroupStats g = GroupStats::from(p);
    if (g.n[0] == 0 || g.n[1] == 0)
        throw UndefinedGroupError("demographic_parity_ratio", "both sensitive groups must be present");
    const double r0 = g.positive_rate(0);
    const double r1 = g.positive_rate(1);
    if (r0 == 0.0) {
        if (r1 == 0.0) return {1.0, false};
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {r1 / r0, false};
}

inline double equal_opportunity(const PredictionSet& p) {
    const GroupStats g = GroupStats::from(p);
    if (g.actual_pos[0] == 0 || g.actual_pos[1] == 0)
        throw UndefinedGroupError("equal_opportunity",
                                  "both sensitive groups need at least one positive-label sample");
    return std::abs(g.tpr(0) - g.tpr(1));
}

struct FairnessThresholds {
    double epsilon = 0.1;  // DP and EO pass when strictly below
    double tau = 0.8;      // DPR passes when min(DPR, 1/DPR) >= tau
    double nu = 0.1;

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must be in (0, 1]");
        if (!(nu > 0.0)) throw ConfigError("nu must be positive");
    }
};

struct FairnessReport {
    double acc = 0.0;
    std::optional<double> dp;
    std::optional<DprValue> dpr;
    std::optional<double> eo;
    GroupStats groups;
    std::vector<std::string> undefined;  // metrics that could not be computed
    FairnessThresholds thresholds;

    bool dp_fair() const { return dp && *dp < thresholds.epsilon; }
    bool eo_fair() const { return eo && *eo < thresholds.nu; }
    bool dpr_fair() const {
        if (!dpr) return false;
        if (dpr->is_inf) return false;
        const double v = dpr->value;
        return std::min(v, v > 0.0 ? 1.0 / v : std::numeric_limits<double>::infinity()) >= thresholds.tau;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["acc"] = acc;
        j["dp"] = dp ? nlohmann::json(*dp) : nlohmann::json(nullptr);
        j["dpr"] = (dpr && !dpr->is_inf) ? nlohmann::json(dpr->value) : nlohmann::json(nullptr);
        j["dpr_is_inf"] = dpr ? dpr->is_inf : false;
        j["eo"] = eo ? nlohmann::json(*eo) : nlohmann::json(nullptr);
        j["undefined"] = undefined;
        j["group_stats"] = {
            {"n", {groups.n[0], groups.n[1]}},
            {"pred_pos", {groups.pred_pos[0], groups.pred_pos[1]}},
            {"actual_pos", {groups.actual_pos[0], groups.actual_pos[1]}},
            {"true_pos", {groups.true_pos[0], groups.true_pos[1]}},
            {"correct", groups.correct},
            {"total", groups.total},
        };
        return j;
    }

    static FairnessReport from_json(const nlohmann::json& j) {
        FairnessReport r;
        r.acc = j.at("acc").get<double>();
        if (!j.at("dp").is_null()) r.dp = j.at("dp").get<double>();
        if (j.at("dpr_is_inf").get<bool>())
            r.dpr = DprValue{std::numeric_limits<double>::infinity(), true};
        else if (!j.at("dpr").is_null())
            r.dpr = DprValue{j.at("dpr").get<double>(), false};
        if (!j.at("eo").is_null()) r.eo = j.at("eo").get<double>();
        r.undefined = j.at("undefined").get<std::vector<std::string>>();
        const auto& g = j.at("group_stats");
        for (int i : {0, 1}) {
            r.groups.n[i] = g.at("n").at(i).get<long>();
            r.groups.pred_pos[i] = g.at("pred_pos").at(i).get<long>();
            r.groups.actual_pos[i] = g.at("actual_pos").at(i).get<long>();
            r.groups.true_pos[i] = g.at("true_pos").at(i).get<long>();
        }
        r.groups.correct = g.at("correct").get<long>();
        r.groups.total = g.at("total").get<long>();
        return r;
    }
};

inline FairnessReport report_from_predictions(const PredictionSet& p,
                                              const FairnessThresholds& thresholds = {}) {
    thresholds.validate();
    FairnessReport r;
    r.thresholds = thresholds;
    r.groups = GroupStats::from(p);
    r.acc = accuracy(p);
    try {
        r.dp = demographic_parity(p);
    } catch (const UndefinedGroupError&) {
        r.undefined.push_back("dp");
    }
    try {
        r.dpr = demographic_parity_ratio(p);
    } catch (const UndefinedGroupError&) {
        r.undefined.push_back("dpr");
    }
    try {
        r.eo = equal_opportunity(p);
    } catch (const UndefinedGroupError&) {
        r.undefined.push_back("eo");
    }
    return r;
}

/// Score of the positive class in [0, 1]: softmax probability of class 1, or
/// the (clamped) raw output of a linear head.
inline Vector positive_scores(const Network& net, const Matrix& x_rows) {
    if (x_rows.cols() != net.config.input_size())
        throw ShapeError("dataset has " + std::to_string(x_rows.cols()) + " features, network expects " +
                         std::to_string(net.config.input_size()));
    Rng unused(0);
    const detail::BatchForward fwd = detail::forward_batch(net, x_rows.transpose(), false, unused);
    const Matrix& z = fwd.pre.back();
    Vector scores(z.cols());
    if (net.config.output_head == OutputHead::softmax) {
        if (net.config.output_size() != 2) throw ShapeError("softmax scoring expects 2 output neurons");
        for (Eigen::Index b = 0; b < z.cols(); ++b) {
            const double m = std::max(z(0, b), z(1, b));
            const double e0 = std::exp(z(0, b) - m);
            const double e1 = std::exp(z(1, b) - m);
            scores[b] = e1 / (e0 + e1);
        }
    } else {
        if (net.config.output_size() != 1) throw ShapeError("linear scoring expects 1 output neuron");
        for (Eigen::Index b = 0; b < z.cols(); ++b)
            scores[b] = std::clamp(z(0, b), 0.0, 1.0);
    }
    return scores;
}

/// Binary prediction: positive iff the raw positive-class score exceeds 0.5.
/// Ties go to the negative class.
inline std::vector<int> predict(const Network& net, const Matrix& x_rows) {
    if (x_rows.cols() != net.config.input_size())
        throw ShapeError("dataset has " + std::to_string(x_rows.cols()) + " features, network expects " +
                         std::to_string(net.config.input_size()));
    Rng unused(0);
    const detail::BatchForward fwd = detail::forward_batch(net, x_rows.transpose(), false, unused);
    const Matrix& z = fwd.pre.back();
    std::vector<int> out(static_cast<std::size_t>(z.cols()));
    if (net.config.output_head == OutputHead::softmax) {
        if (net.config.output_size() != 2) throw ShapeError("binary prediction expects 2 output neurons");
        for (Eigen::Index b = 0; b < z.cols(); ++b)
            out[static_cast<std::size_t>(b)] = z(1, b) > z(0, b) ? 1 : 0;
    } else {
        if (net.config.output_size() != 1) throw ShapeError("linear prediction expects 1 output neuron");
        for (Eigen::Index b = 0; b < z.cols(); ++b)
            out[static_cast<std::size_t>(b)] = z(0, b) > 0.5 ? 1 : 0;
    }
    return out;
}

inline FairnessReport evaluate(const Network& net, const EncodedDataset& data,
                               const FairnessThresholds& thresholds = {}) {
    if (data.n_rows() == 0) throw DataError("cannot evaluate on an empty dataset");
    PredictionSet p;
    p.y_hat = predict(net, data.X);
    p.y = data.y;
    p.s = data.s;
    return report_from_predictions(p, thresholds);
}

}  // namespace fairneuron
