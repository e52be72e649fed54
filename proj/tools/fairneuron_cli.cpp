// Command-line front end. Every artifact is a file: datasets are CSV +
// schema JSON, models and reports are JSON, paths are JSON lines. Exit
// codes: 0 success, 1 runtime failure, 2 partial trial failure, 3 bad
// configuration.

#include "fairneuron/fairneuron.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace fairneuron;

int g_exit = 0;

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
    return j;
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

void apply_training_json(const nlohmann::json& j, TrainConfig& cfg) {
    take(j, "learning_rate", cfg.learning_rate);
    take(j, "beta1", cfg.beta1);
    take(j, "beta2", cfg.beta2);
    take(j, "adam_epsilon", cfg.adam_epsilon);
    take(j, "batch_size", cfg.batch_size);
    take(j, "max_epochs", cfg.max_epochs);
    take(j, "plateau_factor", cfg.plateau_factor);
    take(j, "plateau_patience", cfg.plateau_patience);
}

void apply_repair_json(const nlohmann::json& j, RepairConfig& cfg) {
    take(j, "theta", cfg.theta);
    take(j, "gamma", cfg.gamma);
    take(j, "dropout_rate", cfg.dropout_rate);
    take(j, "retrain_epochs", cfg.retrain_epochs);
    take(j, "slice_threads", cfg.slice_threads);
    if (j.contains("interleave"))
        cfg.interleave = interleave_from_string(j.at("interleave").get<std::string>());
    if (j.contains("seed_rule")) {
        const std::string s = j.at("seed_rule").get<std::string>();
        if (s == "argmax")
            cfg.seed_rule = SeedRule::argmax;
        else if (s == "true_label")
            cfg.seed_rule = SeedRule::true_label;
        else
            throw ConfigError("unknown seed_rule: " + s);
    }
    if (j.contains("retrain")) apply_training_json(j.at("retrain"), cfg.retrain);
}

void apply_grid_json(const nlohmann::json& j, GridSpec& grid) {
    take(j, "theta_grid", grid.theta_grid);
    take(j, "gamma_grid", grid.gamma_grid);
    take(j, "subset_fraction", grid.subset_fraction);
    take(j, "w_acc", grid.w_acc);
    take(j, "w_dp", grid.w_dp);
    take(j, "w_eo", grid.w_eo);
    take(j, "w_dpr", grid.w_dpr);
}

// Dataset selection plus the layered experiment configuration. Precedence:
// built-in defaults (or the replica preset), then the --config file, then
// explicitly passed flags, which the subcommand callbacks apply last.
struct InputArgs {
    std::string dataset_path, schema_path, replica, config_path;
    GridSpec grid;

    void attach(CLI::App* cmd, bool dataset_required = true) {
        auto* d = cmd->add_option("--dataset", dataset_path, "dataset CSV with header row");
        auto* s = cmd->add_option("--schema", schema_path, "schema JSON describing the CSV");
        auto* r = cmd->add_option("--replica", replica,
                                  "bundled dataset: census_replica, compas_replica or credit_replica");
        cmd->add_option("--config", config_path, "JSON config file (flags override it)");
        s->needs(d);
        d->needs(s);
        d->excludes(r);
        if (dataset_required) {
            // one of --dataset/--replica, possibly via the config file;
            // checked in resolve() so the config file can supply them
        }
    }

    nlohmann::json config_json() const {
        return config_path.empty() ? nlohmann::json::object() : load_json_file(config_path);
    }

    // Layers defaults/preset and the config file; flag overrides happen in
    // the caller. Fills `data` and returns the starting config.
    ExperimentConfig resolve(const nlohmann::json& j, EncodedDataset& data) {
        take(j, "replica", replica);
        take(j, "dataset", dataset_path);
        take(j, "schema", schema_path);
        if (!replica.empty() && !dataset_path.empty())
            throw ConfigError("pass either --replica or --dataset/--schema, not both");

        ExperimentConfig cfg;
        if (!replica.empty()) {
            cfg = replica_config(replica);
            const auto [gen_seed, rows] = replica_defaults(replica);
            const ReplicaData rep = make_replica(replica, gen_seed, rows);
            data = encode_rows(rep.rows, rep.schema);
        } else if (!dataset_path.empty()) {
            if (schema_path.empty()) throw ConfigError("--dataset requires --schema");
            if (!std::filesystem::exists(dataset_path))
                throw ConfigError("dataset file not found: " + dataset_path);
            if (!std::filesystem::exists(schema_path))
                throw ConfigError("schema file not found: " + schema_path);
            const DatasetSchema schema = load_schema(schema_path);
            data = load_dataset(dataset_path, schema);
            cfg.dataset_name = schema.name;
        } else {
            throw ConfigError("no dataset: pass --replica or --dataset/--schema");
        }

        take(j, "trials", cfg.trials);
        take(j, "seed", cfg.master_seed);
        take(j, "hidden_layers", cfg.hidden_layers);
        take(j, "dropout_rate", cfg.dropout_rate);
        take(j, "naive_dropout", cfg.naive_dropout);
        if (j.contains("output_head")) {
            const std::string h = j.at("output_head").get<std::string>();
            if (h == "softmax")
                cfg.output_head = OutputHead::softmax;
            else if (h == "linear")
                cfg.output_head = OutputHead::linear;
            else
                throw ConfigError("unknown output_head: " + h);
        }
        if (j.contains("method")) cfg.method = method_from_string(j.at("method").get<std::string>());
        if (j.contains("training")) apply_training_json(j.at("training"), cfg.training);
        if (j.contains("repair")) apply_repair_json(j.at("repair"), cfg.repair);
        if (j.contains("grid")) apply_grid_json(j.at("grid"), grid);
        return cfg;
    }
};

std::string out_path(const std::string& out_flag, const std::string& fallback_name) {
    if (!out_flag.empty()) return out_flag;
    return (std::filesystem::path(default_output_dir()) / fallback_name).string();
}

void ensure_parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

Network train_or_load(const std::string& model_path, const ExperimentConfig& cfg,
                      const EncodedDataset& data, const SplitDataset& parts) {
    if (!model_path.empty()) {
        if (!std::filesystem::exists(model_path))
            throw ConfigError("model file not found: " + model_path);
        Network net = load_model(model_path);
        if (net.config.input_size() != parts.train.n_features())
            throw ConfigError("model expects " + std::to_string(net.config.input_size()) +
                              " inputs but the dataset encodes to " +
                              std::to_string(parts.train.n_features()) + " features");
        return net;
    }
    const TrialArtifacts art = make_trial_artifacts(cfg, data, 0);
    std::fprintf(stderr, "trained naive model in %.2fs\n", art.naive_seconds);
    return art.naive_net;
}

const EncodedDataset& pick_part(const SplitDataset& parts, const EncodedDataset& full,
                                const std::string& part) {
    if (part == "train") return parts.train;
    if (part == "validation") return parts.validation;
    if (part == "test") return parts.test;
    if (part == "full") return full;
    throw ConfigError("unknown part: " + part);
}

void print_report_line(const FairnessReport& r, const char* tag) {
    std::printf("%-8s acc=%.4f", tag, r.acc);
    if (r.dp) std::printf(" dp=%.4f", *r.dp);
    if (r.eo) std::printf(" eo=%.4f", *r.eo);
    if (r.dpr) {
        if (r.dpr->is_inf)
            std::printf(" dpr=inf");
        else
            std::printf(" dpr=%.4f", r.dpr->value);
    }
    for (const auto& u : r.undefined) std::printf(" %s=undefined", u.c_str());
    std::printf("\n");
}

void cmd_datagen(CLI::App* cmd) {
    auto name = std::make_shared<std::string>();
    auto rows = std::make_shared<int>(-1);
    auto gen_seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    cmd->add_option("--name", *name, "replica to materialize")
        ->required()
        ->check(CLI::IsMember(replica_names()));
    auto* rows_opt = cmd->add_option("--rows", *rows, "row count (default: replica's own)");
    auto* seed_opt = cmd->add_option("--gen-seed", *gen_seed, "generator seed (default: replica's own)");
    cmd->add_option("--out", *out, "output directory (default: FAIRNEURON_OUT or .)");

    cmd->callback([=] {
        auto [seed, n] = replica_defaults(*name);
        if (rows_opt->count()) n = *rows;
        if (seed_opt->count()) seed = *gen_seed;
        const ReplicaData rep = make_replica(*name, seed, n);
        const std::string dir = out->empty() ? default_output_dir() : *out;
        const std::string csv = write_replica(rep, dir);
        std::printf("wrote %s (%zu rows) and %s/%s.schema.json\n", csv.c_str(), rep.rows.size(),
                    dir.c_str(), rep.schema.name.c_str());
    });
}

void cmd_train(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto epochs = std::make_shared<int>(0);
    auto out = std::make_shared<std::string>();
    in->attach(cmd);
    auto* seed_opt = cmd->add_option("--seed", *seed, "split and init seed");
    auto* epochs_opt = cmd->add_option("--epochs", *epochs, "training epochs");
    cmd->add_option("--out", *out, "model JSON path (default <out dir>/<dataset>_model.json)");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        if (epochs_opt->count()) cfg.training.max_epochs = *epochs;
        cfg.validate();

        const TrialArtifacts art = make_trial_artifacts(cfg, data, 0);
        const FairnessReport r = evaluate(art.naive_net, art.parts.test, cfg.thresholds);
        std::printf("%s: %d rows, %d features, split %d/%d/%d, %.2fs\n", cfg.dataset_name.c_str(),
                    data.n_rows(), data.n_features(), art.parts.train.n_rows(),
                    art.parts.validation.n_rows(), art.parts.test.n_rows(), art.naive_seconds);
        print_report_line(r, "test");

        const std::string path = out_path(*out, cfg.dataset_name + "_model.json");
        ensure_parent_dir(path);
        save_model(art.naive_net, path);
        std::printf("model -> %s\n", path.c_str());
    });
}

void cmd_evaluate(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto model = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto part = std::make_shared<std::string>("test");
    auto out = std::make_shared<std::string>();
    in->attach(cmd);
    cmd->add_option("--model", *model, "model JSON from a train run")->required();
    auto* seed_opt = cmd->add_option("--seed", *seed, "split seed (must match the train run)");
    cmd->add_option("--part", *part, "train, validation, test or full")
        ->check(CLI::IsMember({"train", "validation", "test", "full"}));
    cmd->add_option("--out", *out, "write the full report JSON here");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        const SplitDataset parts = split(data, cfg.master_seed);
        const Network net = train_or_load(*model, cfg, data, parts);
        const FairnessReport r = evaluate(net, pick_part(parts, data, *part), cfg.thresholds);
        print_report_line(r, part->c_str());
        if (!out->empty()) {
            ensure_parent_dir(*out);
            std::ofstream f(*out);
            if (!f) throw Error("cannot open " + *out + " for writing");
            f << r.to_json().dump(2) << "\n";
            std::printf("report -> %s\n", out->c_str());
        }
    });
}

void cmd_slice(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto model = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto gamma = std::make_shared<double>(1.0);
    auto theta = std::make_shared<double>(0.03);
    auto out = std::make_shared<std::string>();
    auto split_out = std::make_shared<std::string>();
    in->attach(cmd);
    cmd->add_option("--model", *model, "model JSON from a train run")->required();
    auto* seed_opt = cmd->add_option("--seed", *seed, "split seed (must match the train run)");
    auto* gamma_opt = cmd->add_option("--gamma", *gamma, "slicing contribution threshold");
    auto* theta_opt = cmd->add_option("--theta", *theta, "clustering frequency threshold");
    cmd->add_option("--out", *out, "paths JSONL (default <out dir>/<dataset>_paths.jsonl)");
    cmd->add_option("--split-out", *split_out, "also cluster and write the sample division JSON");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        if (gamma_opt->count()) cfg.repair.gamma = *gamma;
        if (theta_opt->count()) cfg.repair.theta = *theta;

        const SplitDataset parts = split(data, cfg.master_seed);
        const Network net = train_or_load(*model, cfg, data, parts);
        SliceParams sp;
        sp.gamma = cfg.repair.gamma;
        sp.seed_rule = cfg.repair.seed_rule;
        const auto paths = slice_dataset(net, parts.train, sp, nullptr, cfg.repair.slice_threads);

        const std::string path = out_path(*out, cfg.dataset_name + "_paths.jsonl");
        ensure_parent_dir(path);
        dump_paths(paths, path);
        const PathTable table = build_path_table(paths);
        std::printf("%zu paths over %zu clusters, max frequency %d -> %s\n", paths.size(),
                    table.groups.size(), table.max_frequency, path.c_str());

        if (!split_out->empty()) {
            ClusterParams cp;
            cp.theta = cfg.repair.theta;
            const SampleSplit division = get_samples_divided(table, cp);
            ensure_parent_dir(*split_out);
            save_split(division, *split_out);
            std::printf("division: %zu biased / %zu ordinary (theta=%.3g) -> %s\n",
                        division.biased_sample_ids.size(), division.ordinary_sample_ids.size(),
                        cfg.repair.theta, split_out->c_str());
        }
    });
}

void cmd_repair(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto model = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto theta = std::make_shared<double>(0.03);
    auto gamma = std::make_shared<double>(1.0);
    auto out = std::make_shared<std::string>();
    auto model_out = std::make_shared<std::string>();
    in->attach(cmd);
    cmd->add_option("--model", *model, "model JSON to repair (omit to train a fresh naive model)");
    auto* seed_opt = cmd->add_option("--seed", *seed, "split seed (must match the train run)");
    auto* theta_opt = cmd->add_option("--theta", *theta, "clustering frequency threshold");
    auto* gamma_opt = cmd->add_option("--gamma", *gamma, "slicing contribution threshold");
    cmd->add_option("--out", *out, "repair report JSON (default <out dir>/<dataset>_repair.json)");
    cmd->add_option("--model-out", *model_out, "write the repaired model JSON here");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        if (theta_opt->count()) cfg.repair.theta = *theta;
        if (gamma_opt->count()) cfg.repair.gamma = *gamma;
        cfg.validate();

        const SplitDataset parts = split(data, cfg.master_seed);
        const Network net = train_or_load(*model, cfg, data, parts);
        const RepairOutcome outcome = fairneuron_repair(net, parts.train, parts.test, cfg.repair);

        print_report_line(outcome.before, "before");
        print_report_line(outcome.after, "after");
        std::printf("division: %zu biased / %zu ordinary; stages %.2fs slice, %.2fs cluster, %.2fs train\n",
                    outcome.split.biased_sample_ids.size(), outcome.split.ordinary_sample_ids.size(),
                    outcome.timings.slicing_seconds, outcome.timings.clustering_seconds,
                    outcome.timings.training_seconds);

        const std::string path = out_path(*out, cfg.dataset_name + "_repair.json");
        ensure_parent_dir(path);
        std::ofstream f(path);
        if (!f) throw Error("cannot open " + path + " for writing");
        f << outcome_to_json(outcome).dump(2) << "\n";
        std::printf("report -> %s\n", path.c_str());
        if (!model_out->empty()) {
            ensure_parent_dir(*model_out);
            save_model(outcome.repaired, *model_out);
            std::printf("repaired model -> %s\n", model_out->c_str());
        }
    });
}

void cmd_tune(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto model = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    auto report_out = std::make_shared<std::string>();
    in->attach(cmd);
    cmd->add_option("--model", *model, "model JSON to tune against (omit to train one)");
    auto* seed_opt = cmd->add_option("--seed", *seed, "subset and split seed");
    cmd->add_option("--out", *out, "score surface CSV (default <out dir>/<dataset>_surface.csv)");
    cmd->add_option("--report-out", *report_out, "full tuning result JSON");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        in->grid.validate();

        const SplitDataset parts = split(data, cfg.master_seed);
        const Network net = train_or_load(*model, cfg, data, parts);
        const TuningResult result = tune(net, parts.train, in->grid, cfg.repair, cfg.master_seed);
        int failed = 0;
        for (const auto& t : result.trials) failed += t.failed ? 1 : 0;
        std::printf("best theta=%.3g gamma=%.3g score=%.4f (%zu grid points, %d failed)\n",
                    result.best_theta, result.best_gamma, result.best_score, result.trials.size(),
                    failed);

        const std::string path = out_path(*out, cfg.dataset_name + "_surface.csv");
        ensure_parent_dir(path);
        export_score_surface(result, path);
        std::printf("surface -> %s\n", path.c_str());
        if (!report_out->empty()) {
            ensure_parent_dir(*report_out);
            std::ofstream f(*report_out);
            if (!f) throw Error("cannot open " + *report_out + " for writing");
            f << tuning_to_json(result).dump(2) << "\n";
            std::printf("report -> %s\n", report_out->c_str());
        }
        if (failed > 0) g_exit = 2;
    });
}

void run_methods(const ExperimentConfig& cfg, const std::vector<Method>& methods,
                 const EncodedDataset& data, const std::string& out_dir,
                 const std::string& table_fmt, const std::string& table_out) {
    const auto records = run_comparison(cfg, methods, data);
    const TableFormat fmt = table_fmt == "csv" ? TableFormat::csv : TableFormat::text;
    emit_table(records, fmt, std::cout);
    if (!table_out.empty()) {
        ensure_parent_dir(table_out);
        save_table(records, fmt, table_out);
    }

    const std::string dir = out_dir.empty() ? default_output_dir() : out_dir;
    std::filesystem::create_directories(dir);
    for (const auto& rec : records) {
        const std::string path =
            (std::filesystem::path(dir) / (rec.dataset + "_" + method_to_string(rec.method) + ".json"))
                .string();
        save_report(rec, path);
    }
    std::printf("reports -> %s\n", dir.c_str());

    for (const auto& rec : records) {
        if (rec.failed_trials == 0) continue;
        g_exit = 2;
        for (const auto& t : rec.trial_records)
            if (t.failed)
                std::fprintf(stderr, "%s trial %d failed: %s\n",
                             method_to_string(rec.method).c_str(), t.trial, t.error.c_str());
    }
}

void cmd_baseline(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto method = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto trials = std::make_shared<int>(10);
    auto out = std::make_shared<std::string>();
    auto table_fmt = std::make_shared<std::string>("text");
    in->attach(cmd);
    cmd->add_option("--method", *method, "reference fixer to run")
        ->required()
        ->check(CLI::IsMember({"reweighing", "roc", "random_control", "pure_dropout", "pure_ordinary"}));
    auto* seed_opt = cmd->add_option("--seed", *seed, "master seed");
    auto* trials_opt = cmd->add_option("--trials", *trials, "seeded trials");
    cmd->add_option("--out", *out, "report directory (default FAIRNEURON_OUT or .)");
    cmd->add_option("--table", *table_fmt, "table format: text or csv")
        ->check(CLI::IsMember({"text", "csv"}));

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        if (trials_opt->count()) cfg.trials = *trials;
        cfg.validate();
        run_methods(cfg, {method_from_string(*method)}, data, *out, *table_fmt, "");
    });
}

void cmd_experiment(CLI::App* cmd) {
    auto in = std::make_shared<InputArgs>();
    auto method = std::make_shared<std::string>("fairneuron");
    auto compare = std::make_shared<bool>(false);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto trials = std::make_shared<int>(10);
    auto out = std::make_shared<std::string>();
    auto table_fmt = std::make_shared<std::string>("text");
    auto table_out = std::make_shared<std::string>();
    in->attach(cmd);
    auto* method_opt =
        cmd->add_option("--method", *method, "single method to run (default fairneuron)")
            ->check(CLI::IsMember({"naive", "fairneuron", "reweighing", "roc", "random_control",
                                   "pure_dropout", "pure_ordinary"}));
    cmd->add_flag("--compare", *compare, "run every method against shared trial artifacts")
        ->excludes(method_opt);
    auto* seed_opt = cmd->add_option("--seed", *seed, "master seed; trial i uses seed + i");
    auto* trials_opt = cmd->add_option("--trials", *trials, "seeded trials");
    cmd->add_option("--out", *out, "report directory (default FAIRNEURON_OUT or .)");
    cmd->add_option("--table", *table_fmt, "table format: text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    cmd->add_option("--table-out", *table_out, "also write the table to this file");

    cmd->callback([=] {
        EncodedDataset data;
        ExperimentConfig cfg = in->resolve(in->config_json(), data);
        if (seed_opt->count()) cfg.master_seed = *seed;
        if (trials_opt->count()) cfg.trials = *trials;
        if (method_opt->count()) cfg.method = method_from_string(*method);
        cfg.validate();

        std::vector<Method> methods;
        if (*compare)
            methods = {Method::naive,        Method::fairneuron,   Method::reweighing,
                       Method::roc,          Method::random_control, Method::pure_dropout,
                       Method::pure_ordinary};
        else
            methods = {cfg.method};
        run_methods(cfg, methods, data, *out, *table_fmt, *table_out);
    });
}

void cmd_report(CLI::App* cmd) {
    auto files = std::make_shared<std::vector<std::string>>();
    auto table_fmt = std::make_shared<std::string>("text");
    auto out = std::make_shared<std::string>();
    cmd->add_option("files", *files, "report JSON files from experiment runs")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--format", *table_fmt, "table format: text or csv")
        ->check(CLI::IsMember({"text", "csv"}));
    cmd->add_option("--out", *out, "write the table to this file");

    cmd->callback([=] {
        std::vector<ReportRecord> records;
        for (const auto& f : *files) records.push_back(load_report(f));
        const TableFormat fmt = *table_fmt == "csv" ? TableFormat::csv : TableFormat::text;
        emit_table(records, fmt, std::cout);
        if (!out->empty()) {
            ensure_parent_dir(*out);
            save_table(records, fmt, *out);
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairness repair toolkit: slice activation paths, divide samples, retrain selectively"};
    app.set_version_flag("--version", fairneuron::kVersion);
    app.require_subcommand(1);

    cmd_datagen(app.add_subcommand("datagen", "materialize a bundled synthetic dataset"));
    cmd_train(app.add_subcommand("train", "train a naive model and save it"));
    cmd_evaluate(app.add_subcommand("evaluate", "fairness metrics for a saved model"));
    cmd_slice(app.add_subcommand("slice", "dump per-sample activation paths"));
    cmd_repair(app.add_subcommand("repair", "run the full repair pipeline"));
    cmd_tune(app.add_subcommand("tune", "grid-search theta and gamma on a training subset"));
    cmd_baseline(app.add_subcommand("baseline", "run a reference fixer or ablation"));
    cmd_experiment(app.add_subcommand("experiment", "multi-trial seeded runs with shared artifacts"));
    cmd_report(app.add_subcommand("report", "render saved report JSONs as a table"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    } catch (const fairneuron::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const fairneuron::SchemaError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return g_exit;
}
