#include "fairneuron/experiment.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

using namespace fairneuron;

namespace {

// FAIRNEURON_CLI_PATH is injected by the build; these tests drive the real
// binary through a shell, capturing exit codes and output files.
#ifndef FAIRNEURON_CLI_PATH
#error "FAIRNEURON_CLI_PATH must point at the built cli binary"
#endif

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string out_file = ::testing::TempDir() + "cli_stdout.txt";
    const std::string cmd =
        std::string(FAIRNEURON_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = ::testing::TempDir() + "cli_work/";
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string dir_;
};

}  // namespace

TEST_F(CliTest, VersionAndHelpExitZero) {
    const RunResult v = run_cli("--version");
    EXPECT_EQ(v.exit_code, 0);
    EXPECT_NE(v.output.find(kVersion), std::string::npos);
    EXPECT_EQ(run_cli("--help").exit_code, 0);
    EXPECT_EQ(run_cli("repair --help").exit_code, 0);
}

TEST_F(CliTest, BadInvocationsExitThree) {
    EXPECT_EQ(run_cli("bogus").exit_code, 3);
    EXPECT_EQ(run_cli("train").exit_code, 3);  // no dataset given
    EXPECT_EQ(run_cli("train --replica nope").exit_code, 3);
    EXPECT_EQ(run_cli("datagen --name unknown_replica").exit_code, 3);
    EXPECT_EQ(run_cli("evaluate --replica compas_replica --model " + dir_ + "missing.json").exit_code,
              3);
    EXPECT_EQ(run_cli("train --replica compas_replica --dataset x.csv --schema y.json").exit_code, 3);

    const std::string bad_config = dir_ + "bad.json";
    std::ofstream(bad_config) << "]";
    EXPECT_EQ(run_cli("train --config " + bad_config).exit_code, 3);
}

TEST_F(CliTest, DatagenWritesLoadableDataset) {
    const RunResult r = run_cli("datagen --name credit_replica --rows 150 --out " + dir_);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const std::string csv = dir_ + "credit_replica.csv";
    const std::string schema_path = dir_ + "credit_replica.schema.json";
    ASSERT_TRUE(std::filesystem::exists(csv));
    ASSERT_TRUE(std::filesystem::exists(schema_path));
    const EncodedDataset data = load_dataset(csv, load_schema(schema_path));
    EXPECT_EQ(data.n_rows(), 150);
}

TEST_F(CliTest, TrainRepairExperimentPipeline) {
    ASSERT_EQ(run_cli("datagen --name compas_replica --rows 900 --out " + dir_).exit_code, 0);
    const std::string config = dir_ + "config.json";
    std::ofstream(config) << R"({
        "dataset": ")" << dir_ << R"(compas_replica.csv",
        "schema": ")" << dir_ << R"(compas_replica.schema.json",
        "output_head": "linear",
        "seed": 5,
        "hidden_layers": [8, 8],
        "training": {"max_epochs": 3},
        "repair": {"retrain_epochs": 2}
    })";

    const std::string model = dir_ + "model.json";
    const RunResult train = run_cli("train --config " + config + " --out " + model);
    ASSERT_EQ(train.exit_code, 0) << train.output;
    ASSERT_TRUE(std::filesystem::exists(model));
    EXPECT_NE(train.output.find("acc="), std::string::npos);

    // same seed, same split: evaluate must reproduce the train-time test line
    const RunResult eval = run_cli("evaluate --config " + config + " --model " + model);
    ASSERT_EQ(eval.exit_code, 0) << eval.output;
    const auto acc_at = train.output.find("acc=");
    ASSERT_NE(acc_at, std::string::npos);
    EXPECT_NE(eval.output.find(train.output.substr(acc_at, 10)), std::string::npos);

    const RunResult rep = run_cli("repair --config " + config + " --model " + model + " --out " +
                                  dir_ + "repair.json --model-out " + dir_ + "repaired.json");
    ASSERT_EQ(rep.exit_code, 0) << rep.output;
    std::ifstream rj(dir_ + "repair.json");
    const nlohmann::json repair_json = nlohmann::json::parse(rj);
    EXPECT_TRUE(repair_json.contains("before"));
    EXPECT_TRUE(repair_json.contains("after"));
    EXPECT_TRUE(repair_json.at("timings").contains("slicing"));
    EXPECT_TRUE(std::filesystem::exists(dir_ + "repaired.json"));

    const RunResult slice = run_cli("slice --config " + config + " --model " + model + " --out " +
                                    dir_ + "paths.jsonl --split-out " + dir_ + "division.json");
    ASSERT_EQ(slice.exit_code, 0) << slice.output;
    const auto paths = load_paths(dir_ + "paths.jsonl");
    EXPECT_EQ(static_cast<int>(paths.size()), 630);  // 0.7 * 900

    const RunResult exp = run_cli("experiment --config " + config + " --trials 2 --out " + dir_ +
                                  "reports --table csv --table-out " + dir_ + "table.csv");
    ASSERT_EQ(exp.exit_code, 0) << exp.output;
    const std::string report_path = dir_ + "reports/compas_replica_fairneuron.json";
    ASSERT_TRUE(std::filesystem::exists(report_path));
    const ReportRecord rec = load_report(report_path);
    EXPECT_EQ(rec.trials, 2);
    EXPECT_EQ(rec.method, Method::fairneuron);

    const RunResult tab = run_cli("report " + report_path);
    ASSERT_EQ(tab.exit_code, 0) << tab.output;
    EXPECT_NE(tab.output.find("fairneuron"), std::string::npos);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
    const std::string config = dir_ + "config.json";
    std::ofstream(config) << R"({
        "replica": "compas_replica",
        "seed": 5,
        "hidden_layers": [8],
        "training": {"max_epochs": 2},
        "trials": 1
    })";
    // --seed on the command line wins over the config file's seed
    const RunResult a = run_cli("train --config " + config + " --seed 9 --out " + dir_ + "a.json");
    ASSERT_EQ(a.exit_code, 0) << a.output;
    const RunResult b = run_cli("train --config " + config + " --out " + dir_ + "b.json");
    ASSERT_EQ(b.exit_code, 0) << b.output;
    const RunResult c = run_cli("train --replica compas_replica --seed 9 --epochs 2 --out " + dir_ +
                                "c.json 2>/dev/null");
    ASSERT_EQ(c.exit_code, 0) << c.output;

    const auto line = [](const std::string& s) {
        const auto at = s.find("test");
        return s.substr(at, s.find('\n', at) - at);
    };
    EXPECT_NE(line(a.output), line(b.output));
    // c uses the same seed as a but default width, so it differs from both
    EXPECT_NE(line(c.output), line(a.output));
}
