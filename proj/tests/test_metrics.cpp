#include "fairneuron/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace fairneuron;

namespace {

PredictionSet hand_example() {
    PredictionSet p;
    p.y_hat = {1, 0, 1, 1, 0, 0, 1, 0};
    p.y = {1, 0, 0, 1, 1, 0, 1, 0};
    p.s = {0, 0, 0, 0, 1, 1, 1, 1};
    return p;
}

// Direct-counting reference, deliberately written with plain loops and
// doubles so it shares no code with the library implementation.
struct Reference {
    double acc, dp, eo, dpr;
    bool dp_ok, eo_ok, dpr_ok, dpr_inf;
};

Reference reference_metrics(const PredictionSet& p) {
    Reference r{};
    double n0 = 0, n1 = 0, pp0 = 0, pp1 = 0, ap0 = 0, ap1 = 0, tp0 = 0, tp1 = 0, correct = 0;
    for (std::size_t i = 0; i < p.y.size(); ++i) {
        if (p.s[i] == 0) {
            n0 += 1;
            pp0 += p.y_hat[i];
            ap0 += p.y[i];
            tp0 += p.y[i] == 1 && p.y_hat[i] == 1;
        } else {
            n1 += 1;
            pp1 += p.y_hat[i];
            ap1 += p.y[i];
            tp1 += p.y[i] == 1 && p.y_hat[i] == 1;
        }
        correct += p.y_hat[i] == p.y[i];
    }
    r.acc = correct / (n0 + n1);
    r.dp_ok = n0 > 0 && n1 > 0;
    if (r.dp_ok) r.dp = std::abs(pp0 / n0 - pp1 / n1);
    r.dpr_ok = r.dp_ok;
    if (r.dpr_ok) {
        const double r0 = pp0 / n0, r1 = pp1 / n1;
        if (r0 == 0 && r1 == 0) {
            r.dpr = 1.0;
        } else if (r0 == 0) {
            r.dpr_inf = true;
        } else {
            r.dpr = r1 / r0;
        }
    }
    r.eo_ok = ap0 > 0 && ap1 > 0;
    if (r.eo_ok) r.eo = std::abs(tp0 / ap0 - tp1 / ap1);
    return r;
}

PredictionSet random_set(std::uint64_t seed) {
    Rng rng(seed);
    const int n = 1 + static_cast<int>(bounded_uint(rng, 200));
    const double p_s = uniform01(rng);
    const double p_y = uniform01(rng);
    const double p_hat = uniform01(rng);
    PredictionSet p;
    for (int i = 0; i < n; ++i) {
        p.s.push_back(uniform01(rng) < p_s);
        p.y.push_back(uniform01(rng) < p_y);
        p.y_hat.push_back(uniform01(rng) < p_hat);
    }
    return p;
}

}  // namespace

TEST(Metrics, HandComputedExample) {
    const PredictionSet p = hand_example();
    EXPECT_DOUBLE_EQ(accuracy(p), 0.75);
    EXPECT_DOUBLE_EQ(demographic_parity(p), 0.5);
    const DprValue dpr = demographic_parity_ratio(p);
    EXPECT_FALSE(dpr.is_inf);
    EXPECT_NEAR(dpr.value, (0.25) / (0.75), 1e-15);
    EXPECT_DOUBLE_EQ(equal_opportunity(p), 0.5);
}

TEST(Metrics, MatchesDirectCountingOnRandomSets) {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const PredictionSet p = random_set(seed);
        const Reference ref = reference_metrics(p);
        EXPECT_DOUBLE_EQ(accuracy(p), ref.acc);
        if (ref.dp_ok) {
            EXPECT_DOUBLE_EQ(demographic_parity(p), ref.dp);
            const DprValue dpr = demographic_parity_ratio(p);
            EXPECT_EQ(dpr.is_inf, ref.dpr_inf);
            if (!ref.dpr_inf) EXPECT_DOUBLE_EQ(dpr.value, ref.dpr);
        } else {
            EXPECT_THROW(demographic_parity(p), UndefinedGroupError);
            EXPECT_THROW(demographic_parity_ratio(p), UndefinedGroupError);
        }
        if (ref.eo_ok)
            EXPECT_DOUBLE_EQ(equal_opportunity(p), ref.eo);
        else
            EXPECT_THROW(equal_opportunity(p), UndefinedGroupError);
    }
}

TEST(Metrics, RangesAndInvariances) {
    for (std::uint64_t seed = 2000; seed < 2200; ++seed) {
        PredictionSet p = random_set(seed);
        const Reference ref = reference_metrics(p);
        if (!ref.dp_ok || !ref.eo_ok) continue;
        const double dp = demographic_parity(p);
        const double eo = equal_opportunity(p);
        EXPECT_GE(dp, 0.0);
        EXPECT_LE(dp, 1.0);
        EXPECT_GE(eo, 0.0);
        EXPECT_LE(eo, 1.0);

        // permutation invariance
        Rng rng(seed + 1);
        const auto perm = shuffled_indices(p.y.size(), rng);
        PredictionSet q;
        for (int i : perm) {
            q.y_hat.push_back(p.y_hat[static_cast<std::size_t>(i)]);
            q.y.push_back(p.y[static_cast<std::size_t>(i)]);
            q.s.push_back(p.s[static_cast<std::size_t>(i)]);
        }
        EXPECT_DOUBLE_EQ(demographic_parity(q), dp);
        EXPECT_DOUBLE_EQ(equal_opportunity(q), eo);

        // duplicating every sample changes nothing
        PredictionSet d = p;
        d.y_hat.insert(d.y_hat.end(), p.y_hat.begin(), p.y_hat.end());
        d.y.insert(d.y.end(), p.y.begin(), p.y.end());
        d.s.insert(d.s.end(), p.s.begin(), p.s.end());
        EXPECT_DOUBLE_EQ(demographic_parity(d), dp);
        EXPECT_DOUBLE_EQ(equal_opportunity(d), eo);
        EXPECT_DOUBLE_EQ(accuracy(d), accuracy(p));

        // swapping the group labels mirrors DP/EO and inverts DPR
        PredictionSet sw = p;
        for (auto& v : sw.s) v = 1 - v;
        EXPECT_DOUBLE_EQ(demographic_parity(sw), dp);
        EXPECT_DOUBLE_EQ(equal_opportunity(sw), eo);
        const DprValue a = demographic_parity_ratio(p);
        const DprValue b = demographic_parity_ratio(sw);
        if (!a.is_inf && !b.is_inf && a.value > 0.0)
            EXPECT_NEAR(b.value, 1.0 / a.value, 1e-12);
    }
}

TEST(Metrics, DprConventions) {
    PredictionSet none;
    none.y_hat = {0, 0, 0, 0};
    none.y = {0, 1, 0, 1};
    none.s = {0, 0, 1, 1};
    const DprValue both_zero = demographic_parity_ratio(none);
    EXPECT_FALSE(both_zero.is_inf);
    EXPECT_EQ(both_zero.value, 1.0);

    PredictionSet only_disadvantaged;
    only_disadvantaged.y_hat = {0, 0, 1, 0};
    only_disadvantaged.y = {0, 1, 1, 1};
    only_disadvantaged.s = {0, 0, 1, 1};
    const DprValue inf = demographic_parity_ratio(only_disadvantaged);
    EXPECT_TRUE(inf.is_inf);
}

TEST(Metrics, UndefinedGroupsThrow) {
    PredictionSet one_group;
    one_group.y_hat = {1, 0};
    one_group.y = {1, 0};
    one_group.s = {0, 0};
    EXPECT_THROW(demographic_parity(one_group), UndefinedGroupError);
    EXPECT_THROW(demographic_parity_ratio(one_group), UndefinedGroupError);

    PredictionSet no_pos;
    no_pos.y_hat = {1, 0, 1, 0};
    no_pos.y = {0, 0, 1, 1};
    no_pos.s = {0, 0, 1, 1};
    EXPECT_THROW(equal_opportunity(no_pos), UndefinedGroupError);
    EXPECT_NO_THROW(demographic_parity(no_pos));
}

TEST(Metrics, ValidatesInput) {
    PredictionSet bad;
    bad.y_hat = {1, 0};
    bad.y = {1};
    bad.s = {0, 1};
    EXPECT_THROW(accuracy(bad), ShapeError);
    PredictionSet empty;
    EXPECT_THROW(accuracy(empty), DataError);
    PredictionSet two;
    two.y_hat = {2, 0};
    two.y = {1, 0};
    two.s = {0, 1};
    EXPECT_THROW(accuracy(two), DataError);
}

TEST(Report, CollectsUndefinedMetricsInsteadOfThrowing) {
    PredictionSet p;
    p.y_hat = {1, 0, 1};
    p.y = {0, 0, 1};
    p.s = {0, 0, 0};
    const FairnessReport r = report_from_predictions(p);
    EXPECT_NEAR(r.acc, 2.0 / 3.0, 1e-15);
    EXPECT_FALSE(r.dp.has_value());
    EXPECT_FALSE(r.dpr.has_value());
    EXPECT_FALSE(r.eo.has_value());
    EXPECT_EQ(r.undefined, (std::vector<std::string>{"dp", "dpr", "eo"}));
    EXPECT_FALSE(r.dp_fair());
    EXPECT_FALSE(r.dpr_fair());
}

TEST(Report, ThresholdsUseStrictAndClosedComparisons) {
    FairnessThresholds t;
    FairnessReport r;
    r.thresholds = t;
    r.dp = 0.1;
    EXPECT_FALSE(r.dp_fair());  // strict <
    r.dp = 0.0999;
    EXPECT_TRUE(r.dp_fair());
    r.eo = 0.1;
    EXPECT_FALSE(r.eo_fair());
    r.eo = 0.05;
    EXPECT_TRUE(r.eo_fair());
    r.dpr = DprValue{0.8, false};
    EXPECT_TRUE(r.dpr_fair());  // min(dpr, 1/dpr) >= tau is closed
    r.dpr = DprValue{1.25, false};
    EXPECT_TRUE(r.dpr_fair());
    r.dpr = DprValue{1.0 / 0.79, false};
    EXPECT_FALSE(r.dpr_fair());
    r.dpr = DprValue{std::numeric_limits<double>::infinity(), true};
    EXPECT_FALSE(r.dpr_fair());
    r.dpr = DprValue{0.0, false};
    EXPECT_FALSE(r.dpr_fair());
}

TEST(Report, JsonShape) {
    const FairnessReport r = report_from_predictions(hand_example());
    const nlohmann::json j = r.to_json();
    EXPECT_DOUBLE_EQ(j.at("acc").get<double>(), 0.75);
    EXPECT_DOUBLE_EQ(j.at("dp").get<double>(), 0.5);
    EXPECT_NEAR(j.at("dpr").get<double>(), 1.0 / 3.0, 1e-15);
    EXPECT_FALSE(j.at("dpr_is_inf").get<bool>());
    EXPECT_DOUBLE_EQ(j.at("eo").get<double>(), 0.5);
    EXPECT_EQ(j.at("group_stats").at("n")[0].get<long>(), 4);
    EXPECT_EQ(j.at("group_stats").at("pred_pos")[1].get<long>(), 1);

    PredictionSet inf_case;
    inf_case.y_hat = {0, 0, 1, 0};
    inf_case.y = {0, 1, 1, 1};
    inf_case.s = {0, 0, 1, 1};
    const nlohmann::json ji = report_from_predictions(inf_case).to_json();
    EXPECT_TRUE(ji.at("dpr").is_null());
    EXPECT_TRUE(ji.at("dpr_is_inf").get<bool>());
}

TEST(Predict, SoftmaxUsesArgmaxWithTiesToNegative) {
    NetworkConfig cfg;
    cfg.layer_sizes = {2, 2};
    cfg.output_head = OutputHead::softmax;
    cfg.seed = 0;
    Network net = Network::init(cfg);
    net.weights[0] << 1.0, 0.0, 0.0, 1.0;  // identity: outputs echo inputs
    net.biases[0].setZero();
    Matrix x(3, 2);
    x << 0.2, 0.8,   // class 1 wins
        0.9, 0.1,    // class 0 wins
        0.5, 0.5;    // tie goes negative
    EXPECT_EQ(predict(net, x), (std::vector<int>{1, 0, 0}));
    const Vector scores = positive_scores(net, x);
    EXPECT_GT(scores[0], 0.5);
    EXPECT_LT(scores[1], 0.5);
    EXPECT_DOUBLE_EQ(scores[2], 0.5);
}

TEST(Predict, LinearHeadThresholdsAtHalf) {
    NetworkConfig cfg;
    cfg.layer_sizes = {1, 1};
    cfg.output_head = OutputHead::linear;
    cfg.seed = 0;
    Network net = Network::init(cfg);
    net.weights[0](0, 0) = 1.0;
    net.biases[0][0] = 0.0;
    Matrix x(4, 1);
    x << 0.49, 0.5, 0.51, 1.7;
    EXPECT_EQ(predict(net, x), (std::vector<int>{0, 0, 1, 1}));
    const Vector scores = positive_scores(net, x);
    EXPECT_DOUBLE_EQ(scores[0], 0.49);
    EXPECT_DOUBLE_EQ(scores[3], 1.0);  // clamped into [0, 1]
}

TEST(Evaluate, EndToEndMatchesManualComposition) {
    NetworkConfig cfg;
    cfg.layer_sizes = {3, 6, 2};
    cfg.seed = 50;
    const Network net = Network::init(cfg);
    Rng rng(51);
    EncodedDataset data;
    data.X = Matrix(30, 3);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 3; ++j) data.X(i, j) = uniform01(rng);
        data.y.push_back(uniform01(rng) < 0.5);
        data.s.push_back(uniform01(rng) < 0.5);
    }
    const FairnessReport r = evaluate(net, data);
    PredictionSet p;
    p.y_hat = predict(net, data.X);
    p.y = data.y;
    p.s = data.s;
    const FairnessReport manual = report_from_predictions(p);
    EXPECT_EQ(r.acc, manual.acc);
    EXPECT_EQ(r.dp.has_value(), manual.dp.has_value());
    if (r.dp) EXPECT_DOUBLE_EQ(*r.dp, *manual.dp);
    EXPECT_EQ(r.groups.correct, manual.groups.correct);
}
