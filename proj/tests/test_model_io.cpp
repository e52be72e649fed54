#include "fairneuron/model_io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace fairneuron;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fairneuron_model_io_" + name);
}

Network sample_net() {
    NetworkConfig cfg;
    cfg.layer_sizes = {3, 5, 4, 2};
    cfg.output_head = OutputHead::softmax;
    cfg.dropout_rate = 0.3;
    cfg.seed = 1234;
    return Network::init(cfg);
}

}  // namespace

TEST(ModelIo, RoundTripIsExact) {
    Network net = set_dropout(sample_net(), true);
    // advance the rng so a non-initial stream state gets serialized
    for (int i = 0; i < 17; ++i) uniform01(net.rng);
    const auto path = temp_file("roundtrip.json");
    save_model(net, path.string());
    Network back = load_model(path.string());

    EXPECT_EQ(back.config.layer_sizes, net.config.layer_sizes);
    EXPECT_EQ(back.config.output_head, net.config.output_head);
    EXPECT_EQ(back.config.dropout_rate, net.config.dropout_rate);
    EXPECT_EQ(back.config.seed, net.config.seed);
    EXPECT_EQ(back.dropout_enabled, true);
    ASSERT_EQ(back.weights.size(), net.weights.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        EXPECT_EQ((back.weights[l] - net.weights[l]).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ((back.biases[l] - net.biases[l]).cwiseAbs().maxCoeff(), 0.0);
    }
    EXPECT_EQ(back.parameter_checksum(), net.parameter_checksum());
    // the rng stream continues identically after the round trip
    for (int i = 0; i < 8; ++i) EXPECT_EQ(uniform01(back.rng), uniform01(net.rng));
    std::filesystem::remove(path);
}

TEST(ModelIo, LinearHeadRoundTrip) {
    NetworkConfig cfg;
    cfg.layer_sizes = {4, 6, 1};
    cfg.output_head = OutputHead::linear;
    cfg.dropout_rate = 0.0;
    cfg.seed = 9;
    const Network net = Network::init(cfg);
    const auto path = temp_file("linear.json");
    save_model(net, path.string());
    const Network back = load_model(path.string());
    EXPECT_EQ(back.config.output_head, OutputHead::linear);
    EXPECT_EQ(back.parameter_checksum(), net.parameter_checksum());
    std::filesystem::remove(path);
}

TEST(ModelIo, RejectsUnsupportedVersion) {
    const Network net = sample_net();
    nlohmann::json j = model_to_json(net);
    j["version"] = 3;
    try {
        model_from_json(j);
        FAIL() << "expected ModelVersionError";
    } catch (const ModelVersionError& e) {
        EXPECT_EQ(e.found, 3);
        EXPECT_EQ(e.expected, kModelFormatVersion);
    }
}

TEST(ModelIo, RejectsWrongFormatTag) {
    nlohmann::json j = model_to_json(sample_net());
    j["format"] = "something-else";
    EXPECT_THROW(model_from_json(j), ModelParseError);
}

TEST(ModelIo, ParseErrorCarriesByteOffset) {
    const auto path = temp_file("garbage.json");
    {
        std::ofstream out(path);
        out << "{\"format\": \"fairneuron-model\", \"version\": 1, !!!";
    }
    try {
        load_model(path.string());
        FAIL() << "expected ModelParseError";
    } catch (const ModelParseError& e) {
        EXPECT_GT(e.byte_offset, 0u);
    }
    std::filesystem::remove(path);
}

TEST(ModelIo, RejectsTamperedWeightShape) {
    nlohmann::json j = model_to_json(sample_net());
    j["layers"][0]["weights"][2].erase(1);
    EXPECT_THROW(model_from_json(j), ModelParseError);
    nlohmann::json j2 = model_to_json(sample_net());
    j2["layers"][1]["bias"].push_back(0.5);
    EXPECT_THROW(model_from_json(j2), ModelParseError);
}

TEST(ModelIo, RejectsMissingFile) {
    EXPECT_THROW(load_model("/nonexistent/missing_model.json"), Error);
}

TEST(ModelIo, SavedFileIsStableAcrossIdenticalNets) {
    const auto p1 = temp_file("stable1.json");
    const auto p2 = temp_file("stable2.json");
    save_model(sample_net(), p1.string());
    save_model(sample_net(), p2.string());
    std::ifstream f1(p1), f2(p2);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s1, s2);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}
