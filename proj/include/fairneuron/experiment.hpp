#pragma once

// Experiment runner. Trains the baseline model once per trial, applies one or
// more mitigation methods to the shared per-trial artifacts, and aggregates
// fairness metrics across trials. Reports serialize to JSON deterministically
// (timings can be excluded) and render as text or CSV tables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairneuron/baselines.hpp"
#include "fairneuron/clustering.hpp"
#include "fairneuron/common.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/metrics.hpp"
#include "fairneuron/network.hpp"
#include "fairneuron/repair.hpp"
#include "fairneuron/slicing.hpp"
#include "fairneuron/train.hpp"
#include "fairneuron/version.hpp"

namespace fairneuron {

enum class Method {
    naive,           // baseline model, no mitigation
    fairneuron,      // path slicing + sample division + selective retraining
    reweighing,      // per-sample training weights
    roc,             // reject option classification post-processing
    random_control,  // size-matched random sample division
    pure_dropout,    // retrain every sample with dropout active
    pure_ordinary,   // retrain every sample with dropout inactive
};

inline std::string method_to_string(Method m) {
    switch (m) {
        case Method::naive: return "naive";
        case Method::fairneuron: return "fairneuron";
        case Method::reweighing: return "reweighing";
        case Method::roc: return "roc";
        case Method::random_control: return "random_control";
        case Method::pure_dropout: return "pure_dropout";
        case Method::pure_ordinary: return "pure_ordinary";
    }
    throw ConfigError("unknown method");
}

inline Method method_from_string(const std::string& s) {
    for (Method m : {Method::naive, Method::fairneuron, Method::reweighing, Method::roc,
                     Method::random_control, Method::pure_dropout, Method::pure_ordinary})
        if (method_to_string(m) == s) return m;
    throw ConfigError("unknown method: " + s);
}

struct ExperimentConfig {
    std::string dataset_name = "dataset";
    Method method = Method::fairneuron;
    int trials = 10;
    std::uint64_t master_seed = 0;
    std::vector<int> hidden_layers = {32, 32, 32};
    OutputHead output_head = OutputHead::softmax;
    double dropout_rate = 0.5;
    bool naive_dropout = false;  // dropout layers stay inactive outside repair
    TrainConfig training;
    RepairConfig repair;
    FairnessThresholds thresholds;
    double roc_max_accuracy_drop = 0.05;

    void validate() const {
        if (dataset_name.empty()) throw ConfigError("dataset_name must not be empty");
        if (trials < 1) throw ConfigError("trials must be at least 1");
        if (hidden_layers.empty()) throw ConfigError("at least one hidden layer is required");
        for (int h : hidden_layers)
            if (h < 1) throw ConfigError("hidden layer sizes must be positive");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
            throw ConfigError("dropout_rate must be in [0, 1)");
        if (!(roc_max_accuracy_drop >= 0.0))
            throw ConfigError("roc_max_accuracy_drop must be non-negative");
        training.validate();
        repair.validate();
        thresholds.validate();
    }

    NetworkConfig network_config(int n_features, std::uint64_t seed) const {
        NetworkConfig ncfg;
        ncfg.layer_sizes.reserve(hidden_layers.size() + 2);
        ncfg.layer_sizes.push_back(n_features);
        for (int h : hidden_layers) ncfg.layer_sizes.push_back(h);
        ncfg.layer_sizes.push_back(output_head == OutputHead::softmax ? 2 : 1);
        ncfg.output_head = output_head;
        ncfg.dropout_rate = dropout_rate;
        ncfg.seed = seed;
        return ncfg;
    }
};

/// FNV-1a over feature bytes, labels and sensitive values. Chainable.
inline std::uint64_t dataset_checksum(const EncodedDataset& d,
                                      std::uint64_t h = 0xcbf29ce484222325ull) {
    h = fnv1a(d.X.data(), sizeof(double) * static_cast<std::size_t>(d.X.size()), h);
    h = fnv1a(d.y.data(), sizeof(int) * d.y.size(), h);
    h = fnv1a(d.s.data(), sizeof(int) * d.s.size(), h);
    return h;
}

/// Per-trial state shared by every method in a comparison: the seeded split
/// and the trained baseline model.
struct TrialArtifacts {
    SplitDataset parts;
    Network naive_net;
    double naive_seconds = 0.0;
    std::uint64_t split_checksum = 0;
    std::uint64_t naive_checksum = 0;
};

inline TrialArtifacts make_trial_artifacts(const ExperimentConfig& cfg, const EncodedDataset& data,
                                           int trial) {
    const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(trial);
    TrialArtifacts art;
    art.parts = split(data, seed);

    Network net = Network::init(cfg.network_config(art.parts.train.n_features(), seed));
    net.dropout_enabled = cfg.naive_dropout;
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult trained = train(std::move(net), art.parts.train, cfg.training, &art.parts.validation);
    art.naive_seconds = detail::seconds_since(t0);
    art.naive_net = std::move(trained.net);
    art.naive_net.dropout_enabled = false;

    std::uint64_t h = dataset_checksum(art.parts.train);
    h = dataset_checksum(art.parts.validation, h);
    h = dataset_checksum(art.parts.test, h);
    art.split_checksum = h;
    art.naive_checksum = art.naive_net.parameter_checksum();
    return art;
}

struct MethodResult {
    FairnessReport report;
    StageTimings timings;
};

namespace detail {

inline std::vector<double> to_std(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

/// Run one method against the shared artifacts of one trial.
inline MethodResult apply_method(Method method, const ExperimentConfig& cfg,
                                 const TrialArtifacts& art, std::uint64_t seed) {
    RepairConfig rc = cfg.repair;
    rc.thresholds = cfg.thresholds;
    const EncodedDataset& tr = art.parts.train;
    const EncodedDataset& val = art.parts.validation;
    const EncodedDataset& te = art.parts.test;
    MethodResult res;

    switch (method) {
        case Method::naive: {
            res.report = evaluate(art.naive_net, te, cfg.thresholds);
            res.timings.training_seconds = art.naive_seconds;
            res.timings.total_seconds = art.naive_seconds;
            return res;
        }
        case Method::fairneuron: {
            RepairOutcome out = fairneuron_repair(art.naive_net, tr, te, rc);
            return {std::move(out.after), out.timings};
        }
        case Method::reweighing: {
            const auto t0 = std::chrono::steady_clock::now();
            TrainConfig tc = cfg.training;
            tc.per_sample_weights = reweigh(tr).weights;
            Network net = Network::init(cfg.network_config(tr.n_features(), seed));
            net.dropout_enabled = cfg.naive_dropout;
            TrainResult trained = train(std::move(net), tr, tc, &val);
            trained.net.dropout_enabled = false;
            res.report = evaluate(trained.net, te, cfg.thresholds);
            res.timings.training_seconds = detail::seconds_since(t0);
            res.timings.total_seconds = res.timings.training_seconds;
            return res;
        }
        case Method::roc: {
            const auto t0 = std::chrono::steady_clock::now();
            const ROCConfig margin =
                select_roc_margin(detail::to_std(positive_scores(art.naive_net, val.X)), val.y,
                                  val.s, cfg.roc_max_accuracy_drop);
            PredictionSet p;
            p.y_hat = roc_postprocess(detail::to_std(positive_scores(art.naive_net, te.X)), te.s,
                                      margin);
            p.y = te.y;
            p.s = te.s;
            res.report = report_from_predictions(p, cfg.thresholds);
            res.timings.total_seconds = detail::seconds_since(t0);
            return res;
        }
        case Method::random_control: {
            const auto t_total = std::chrono::steady_clock::now();
            SliceParams sp;
            sp.gamma = rc.gamma;
            sp.seed_rule = rc.seed_rule;
            auto t_stage = std::chrono::steady_clock::now();
            const std::vector<ActivationPath> paths =
                slice_dataset(art.naive_net, tr, sp, nullptr, rc.slice_threads);
            const double slicing_seconds = detail::seconds_since(t_stage);

            t_stage = std::chrono::steady_clock::now();
            ClusterParams cp;
            cp.theta = rc.theta;
            const SampleSplit reference = get_samples_divided(build_path_table(paths), cp);
            Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
            const SampleSplit randomized = random_split_like(reference, tr.n_rows(), rng);
            const double clustering_seconds = detail::seconds_since(t_stage);

            RepairOutcome out = repair_with_split(art.naive_net, tr, te, rc, randomized);
            out.timings.slicing_seconds = slicing_seconds;
            out.timings.clustering_seconds = clustering_seconds;
            out.timings.total_seconds = detail::seconds_since(t_total);
            return {std::move(out.after), out.timings};
        }
        case Method::pure_dropout: {
            const auto t0 = std::chrono::steady_clock::now();
            const Network net = selective_train(art.naive_net, EncodedDataset{}, tr, rc);
            res.report = evaluate(net, te, cfg.thresholds);
            res.timings.training_seconds = detail::seconds_since(t0);
            res.timings.total_seconds = res.timings.training_seconds;
            return res;
        }
        case Method::pure_ordinary: {
            const auto t0 = std::chrono::steady_clock::now();
            const Network net = selective_train(art.naive_net, tr, EncodedDataset{}, rc);
            res.report = evaluate(net, te, cfg.thresholds);
            res.timings.training_seconds = detail::seconds_since(t0);
            res.timings.total_seconds = res.timings.training_seconds;
            return res;
        }
    }
    throw ConfigError("unknown method");
}

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    FairnessReport report;
    StageTimings timings;
    double naive_seconds = 0.0;
    std::uint64_t split_checksum = 0;
    std::uint64_t naive_checksum = 0;
};

struct MetricAggregate {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for fewer than 2 values
    int n = 0;
    int skipped = 0;  // trials whose value was undefined or infinite

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["mean"] = n > 0 ? nlohmann::json(mean) : nlohmann::json(nullptr);
        j["stddev"] = n > 0 ? nlohmann::json(stddev) : nlohmann::json(nullptr);
        j["n"] = n;
        j["skipped"] = skipped;
        return j;
    }
};

inline MetricAggregate aggregate(const std::vector<double>& values, int skipped = 0) {
    MetricAggregate a;
    a.n = static_cast<int>(values.size());
    a.skipped = skipped;
    if (a.n == 0) return a;
    double sum = 0.0;
    for (double v : values) sum += v;
    a.mean = sum / a.n;
    if (a.n > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(sq / (a.n - 1));
    }
    return a;
}

struct ReportRecord {
    std::string dataset;
    Method method = Method::naive;
    int trials = 0;
    int failed_trials = 0;
    std::uint64_t master_seed = 0;
    std::string version = kVersion;
    std::vector<TrialRecord> trial_records;
    MetricAggregate acc, dp, eo, dpr;

    /// True when every defined DPR across the trials diverged.
    bool dpr_all_infinite() const {
        if (dpr.n > 0) return false;
        for (const TrialRecord& t : trial_records)
            if (!t.failed && t.report.dpr && t.report.dpr->is_inf) return true;
        return false;
    }

    nlohmann::json to_json(bool include_timings = true) const {
        nlohmann::json j;
        j["version"] = version;
        j["dataset"] = dataset;
        j["method"] = method_to_string(method);
        j["trials"] = trials;
        j["failed_trials"] = failed_trials;
        j["master_seed"] = master_seed;
        j["aggregates"] = {{"acc", acc.to_json()},
                           {"dp", dp.to_json()},
                           {"eo", eo.to_json()},
                           {"dpr", dpr.to_json()}};
        nlohmann::json arr = nlohmann::json::array();
        for (const TrialRecord& t : trial_records) {
            nlohmann::json tj;
            tj["trial"] = t.trial;
            tj["seed"] = t.seed;
            tj["failed"] = t.failed;
            tj["error"] = t.error;
            tj["split_checksum"] = t.split_checksum;
            tj["naive_checksum"] = t.naive_checksum;
            if (!t.failed) tj["report"] = t.report.to_json();
            if (include_timings) {
                tj["timings"] = timings_to_json(t.timings);
                tj["naive_seconds"] = t.naive_seconds;
            }
            arr.push_back(std::move(tj));
        }
        j["trial_records"] = std::move(arr);
        return j;
    }

    /// Deterministic serialization: identical config and data give identical
    /// bytes run to run, so wall-clock timings are left out.
    std::string canonical_bytes() const { return to_json(false).dump(); }
};

namespace detail {

inline void finalize_aggregates(ReportRecord& rec) {
    std::vector<double> acc_v, dp_v, eo_v, dpr_v;
    int dp_skip = 0, eo_skip = 0, dpr_skip = 0, failed = 0;
    for (const TrialRecord& t : rec.trial_records) {
        if (t.failed) {
            ++failed;
            continue;
        }
        acc_v.push_back(t.report.acc);
        if (t.report.dp)
            dp_v.push_back(*t.report.dp);
        else
            ++dp_skip;
        if (t.report.eo)
            eo_v.push_back(*t.report.eo);
        else
            ++eo_skip;
        if (t.report.dpr && !t.report.dpr->is_inf)
            dpr_v.push_back(t.report.dpr->value);
        else
            ++dpr_skip;
    }
    rec.failed_trials = failed;
    rec.acc = aggregate(acc_v);
    rec.dp = aggregate(dp_v, dp_skip);
    rec.eo = aggregate(eo_v, eo_skip);
    rec.dpr = aggregate(dpr_v, dpr_skip);
}

}  // namespace detail

/// Run every method against the same per-trial artifacts: one seeded split
/// and one trained baseline per trial, shared across methods. A trial that
/// fails for one method is recorded and the run continues.
inline std::vector<ReportRecord> run_comparison(const ExperimentConfig& cfg,
                                                const std::vector<Method>& methods,
                                                const EncodedDataset& data) {
    cfg.validate();
    if (methods.empty()) throw ConfigError("no methods to run");

    std::vector<ReportRecord> records(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
        records[i].dataset = cfg.dataset_name;
        records[i].method = methods[i];
        records[i].trials = cfg.trials;
        records[i].master_seed = cfg.master_seed;
    }

    for (int trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t seed = cfg.master_seed + static_cast<std::uint64_t>(trial);
        TrialRecord base;
        base.trial = trial;
        base.seed = seed;

        TrialArtifacts art;
        bool artifacts_ok = true;
        try {
            art = make_trial_artifacts(cfg, data, trial);
            base.naive_seconds = art.naive_seconds;
            base.split_checksum = art.split_checksum;
            base.naive_checksum = art.naive_checksum;
        } catch (const std::exception& e) {
            artifacts_ok = false;
            base.failed = true;
            base.error = std::string("baseline: ") + e.what();
        }

        for (std::size_t i = 0; i < methods.size(); ++i) {
            TrialRecord rec = base;
            if (artifacts_ok) {
                try {
                    MethodResult r = apply_method(methods[i], cfg, art, seed);
                    rec.report = std::move(r.report);
                    rec.timings = r.timings;
                } catch (const std::exception& e) {
                    rec.failed = true;
                    rec.error = e.what();
                }
            }
            records[i].trial_records.push_back(std::move(rec));
        }
    }

    for (ReportRecord& rec : records) detail::finalize_aggregates(rec);
    return records;
}

inline ReportRecord run_experiment(const ExperimentConfig& cfg, const EncodedDataset& data) {
    return std::move(run_comparison(cfg, {cfg.method}, data).front());
}

enum class TableFormat { text, csv };

namespace detail {

inline std::string cell3(const MetricAggregate& a, const char* when_empty) {
    if (a.n == 0) return when_empty;
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << a.mean;
    return os.str();
}

inline void csv_metric(std::ostream& out, const MetricAggregate& a) {
    out << ',';
    if (a.n > 0) out << std::setprecision(std::numeric_limits<double>::max_digits10) << a.mean;
    out << ',';
    if (a.n > 0) out << std::setprecision(std::numeric_limits<double>::max_digits10) << a.stddev;
    out << ',' << a.n << ',' << a.skipped;
}

}  // namespace detail

/// Render aggregated records as an aligned text table or as CSV. Text cells
/// show three decimals; a DPR whose every defined value diverged prints
/// "inf", other fully-undefined metrics print "n/a". CSV carries full-
/// precision means so a reparse reproduces the report values exactly.
inline void emit_table(const std::vector<ReportRecord>& records, TableFormat format,
                       std::ostream& out) {
    if (format == TableFormat::csv) {
        out << "dataset,method,trials,failed_trials"
               ",acc_mean,acc_stddev,acc_n,acc_skipped"
               ",dp_mean,dp_stddev,dp_n,dp_skipped"
               ",eo_mean,eo_stddev,eo_n,eo_skipped"
               ",dpr_mean,dpr_stddev,dpr_n,dpr_skipped\n";
        for (const ReportRecord& r : records) {
            out << r.dataset << ',' << method_to_string(r.method) << ',' << r.trials << ','
                << r.failed_trials;
            detail::csv_metric(out, r.acc);
            detail::csv_metric(out, r.dp);
            detail::csv_metric(out, r.eo);
            detail::csv_metric(out, r.dpr);
            out << '\n';
        }
        return;
    }

    std::size_t name_w = 7, method_w = 6;
    for (const ReportRecord& r : records) {
        name_w = std::max(name_w, r.dataset.size());
        method_w = std::max(method_w, method_to_string(r.method).size());
    }
    out << std::left << std::setw(static_cast<int>(name_w + 2)) << "dataset"
        << std::setw(static_cast<int>(method_w + 2)) << "method" << std::right << std::setw(7)
        << "acc" << std::setw(7) << "dp" << std::setw(7) << "eo" << std::setw(7) << "dpr" << '\n';
    for (const ReportRecord& r : records) {
        const std::string dpr_cell =
            r.dpr.n > 0 ? detail::cell3(r.dpr, "") : (r.dpr_all_infinite() ? "inf" : "n/a");
        out << std::left << std::setw(static_cast<int>(name_w + 2)) << r.dataset
            << std::setw(static_cast<int>(method_w + 2)) << method_to_string(r.method)
            << std::right << std::setw(7) << detail::cell3(r.acc, "n/a") << std::setw(7)
            << detail::cell3(r.dp, "n/a") << std::setw(7) << detail::cell3(r.eo, "n/a")
            << std::setw(7) << dpr_cell << '\n';
    }
}

inline std::string table_to_string(const std::vector<ReportRecord>& records, TableFormat format) {
    std::ostringstream os;
    emit_table(records, format, os);
    return os.str();
}

inline void save_table(const std::vector<ReportRecord>& records, TableFormat format,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    emit_table(records, format, out);
}

inline void save_report(const ReportRecord& record, const std::string& path,
                        bool include_timings = true) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << record.to_json(include_timings).dump(2) << '\n';
}

inline MetricAggregate aggregate_from_json(const nlohmann::json& j) {
    MetricAggregate a;
    a.n = j.at("n").get<int>();
    a.skipped = j.at("skipped").get<int>();
    if (a.n > 0) {
        a.mean = j.at("mean").get<double>();
        a.stddev = j.at("stddev").get<double>();
    }
    return a;
}

inline ReportRecord report_from_json(const nlohmann::json& j) {
    ReportRecord rec;
    rec.version = j.at("version").get<std::string>();
    rec.dataset = j.at("dataset").get<std::string>();
    rec.method = method_from_string(j.at("method").get<std::string>());
    rec.trials = j.at("trials").get<int>();
    rec.failed_trials = j.at("failed_trials").get<int>();
    rec.master_seed = j.at("master_seed").get<std::uint64_t>();
    rec.acc = aggregate_from_json(j.at("aggregates").at("acc"));
    rec.dp = aggregate_from_json(j.at("aggregates").at("dp"));
    rec.eo = aggregate_from_json(j.at("aggregates").at("eo"));
    rec.dpr = aggregate_from_json(j.at("aggregates").at("dpr"));
    for (const auto& tj : j.at("trial_records")) {
        TrialRecord t;
        t.trial = tj.at("trial").get<int>();
        t.seed = tj.at("seed").get<std::uint64_t>();
        t.failed = tj.at("failed").get<bool>();
        t.error = tj.at("error").get<std::string>();
        t.split_checksum = tj.at("split_checksum").get<std::uint64_t>();
        t.naive_checksum = tj.at("naive_checksum").get<std::uint64_t>();
        if (!t.failed) t.report = FairnessReport::from_json(tj.at("report"));
        if (tj.contains("timings")) {
            const auto& w = tj.at("timings");
            t.timings.slicing_seconds = w.at("slicing").get<double>();
            t.timings.clustering_seconds = w.at("clustering").get<double>();
            t.timings.training_seconds = w.at("training").get<double>();
            t.timings.total_seconds = w.at("total").get<double>();
            t.naive_seconds = tj.at("naive_seconds").get<double>();
        }
        rec.trial_records.push_back(std::move(t));
    }
    return rec;
}

inline ReportRecord load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    try {
        return report_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": not a report file: " + e.what());
    }
}

}  // namespace fairneuron
