#pragma once

// Bundled synthetic benchmarks shaped after the three public fairness
// datasets commonly used for repair experiments: adult income (census),
// two-year recidivism (compas), and credit scoring (credit).
//
// Each replica mixes two row populations:
//   - majority rows drawn from a small pool of recurring feature patterns
//     ("archetypes") with label noise, and
//   - tail rows with near-unique feature combinations, an out-of-band
//     numeric value, and a label that leans on the sensitive attribute.
// Majority rows give every dataset its headline accuracy; tail rows carry
// the group disparity that slicing isolates and selective retraining
// removes. Generation is a pure function of (seed, n_rows).

#include "fairneuron/common.hpp"
#include "fairneuron/dataset.hpp"
#include "fairneuron/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace fairneuron {

/// Raw generated rows (schema column order, no header row) plus the schema
/// that loads them. `tail_flags[i]` marks row i as a tail row; the flag is
/// generator bookkeeping for tests and demos and is not written to disk.
struct ReplicaData {
    std::vector<std::vector<std::string>> rows;
    DatasetSchema schema;
    std::vector<int> tail_flags;
};

namespace detail {

struct Archetype {
    std::vector<int> cats;
    double numeric = 0.0;
    int label = 0;
    double weight = 0.0;
};

/// Fixed archetype pool: category picks and the coarse numeric come from a
/// pool-specific RNG so the patterns do not depend on the row seed; weights
/// follow a power law over rank and are normalized to sum to one.
inline std::vector<Archetype> make_archetype_pool(std::uint64_t pool_seed, int count,
                                                  const std::vector<std::vector<std::string>>& cat_values,
                                                  const std::vector<double>& coarse_numeric) {
    Rng rng(pool_seed);
    std::vector<Archetype> pool(static_cast<std::size_t>(count));
    double total = 0.0;
    for (int i = 0; i < count; ++i) {
        auto& a = pool[static_cast<std::size_t>(i)];
        for (const auto& vals : cat_values)
            a.cats.push_back(static_cast<int>(uniform01(rng) * static_cast<double>(vals.size())));
        a.numeric = coarse_numeric[static_cast<std::size_t>(uniform01(rng) *
                                                            static_cast<double>(coarse_numeric.size()))];
        a.weight = std::pow(static_cast<double>(i + 2), -0.85);
        total += a.weight;
    }
    for (auto& a : pool) a.weight /= total;
    return pool;
}

/// Label the pool so roughly `pos_mass` of the archetype weight is positive.
/// Walking from the heaviest archetype concentrates the positives; walking
/// from the lightest spreads them over many small patterns.
inline void assign_labels(std::vector<Archetype>& pool, double pos_mass, bool from_lightest) {
    double cum = 0.0;
    if (from_lightest) {
        for (auto it = pool.rbegin(); it != pool.rend(); ++it) {
            it->label = cum < pos_mass ? 1 : 0;
            cum += it->weight;
        }
    } else {
        for (auto& a : pool) {
            a.label = cum < pos_mass ? 1 : 0;
            cum += a.weight;
        }
    }
}

inline const Archetype& pick_archetype(const std::vector<Archetype>& pool, double u) {
    std::size_t i = 0;
    while (i + 1 < pool.size() && u > pool[i].weight) { u -= pool[i].weight; ++i; }
    return pool[i];
}

inline std::string format_numeric(double v, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace detail

/// Adult-income-style replica: 32,561 rows, eight categorical attributes,
/// one numeric, binary income label, gender sensitive. Tail rows (9%) sit in
/// an 80+ hours band with a male-leaning label coin.
inline ReplicaData make_census_replica(std::uint64_t seed = 13, int n_rows = 32561) {
    if (n_rows < 0) throw ConfigError("n_rows must be non-negative");
    Rng rng(seed);
    const std::vector<std::vector<std::string>> cat_values = {
        {"17to25", "26to35", "36to45", "46to55", "56to65", "66plus"},
        {"private", "selfemp", "federal", "state", "local"},
        {"hs", "somecollege", "bachelors", "masters", "doctorate", "assoc", "11th", "9th"},
        {"nevermarried", "married", "divorced", "separated", "widowed"},
        {"tech", "craft", "sales", "exec", "profspec", "clerical", "service", "transport"},
        {"husband", "wife", "ownchild", "notinfamily", "unmarried"},
        {"White", "Black", "AsianPacIslander", "AmerIndianEskimo", "Other"},
    };
    const std::vector<double> coarse_hours = {20, 35, 40, 45, 50, 60};
    const double tail_fraction = 0.09;
    const double rho = 0.15;    // tail label lean toward the advantaged group
    const double eta = 0.129;   // majority label flip rate
    const double pos_mass = 0.142;

    auto pool = detail::make_archetype_pool(7411, 40, cat_values, coarse_hours);
    detail::assign_labels(pool, pos_mass, true);

    ReplicaData r;
    r.schema.name = "census_replica";
    r.schema.columns = {{"age_bucket", ColumnKind::categorical},
                        {"workclass", ColumnKind::categorical},
                        {"education", ColumnKind::categorical},
                        {"marital_status", ColumnKind::categorical},
                        {"occupation", ColumnKind::categorical},
                        {"relationship", ColumnKind::categorical},
                        {"race", ColumnKind::categorical},
                        {"gender", ColumnKind::categorical},
                        {"hours_per_week", ColumnKind::numeric},
                        {"income", ColumnKind::categorical}};
    r.schema.label_column = "income";
    r.schema.positive_label_value = "gt50k";
    r.schema.sensitive_column = "gender";
    r.schema.disadvantaged_value = "Female";

    for (int i = 0; i < n_rows; ++i) {
        const bool tail = uniform01(rng) < tail_fraction;
        const int s = uniform01(rng) < 0.5 ? 1 : 0;  // 1 = Female
        std::vector<int> cats(cat_values.size());
        double hours = 0.0;
        int y = 0;
        if (tail) {
            for (std::size_t c = 0; c < cat_values.size(); ++c)
                cats[c] = static_cast<int>(uniform01(rng) * static_cast<double>(cat_values[c].size()));
            static const double tail_hours[] = {80, 82, 84, 86, 88, 90, 92, 94, 96, 98};
            hours = tail_hours[static_cast<std::size_t>(uniform01(rng) * 10)];
            const double p = 0.5 + (s == 0 ? rho : -rho);
            y = uniform01(rng) < p ? 1 : 0;
        } else {
            const auto& a = detail::pick_archetype(pool, uniform01(rng));
            cats = a.cats;
            hours = a.numeric;
            y = a.label;
            if (uniform01(rng) < eta) y ^= 1;
        }
        std::vector<std::string> row;
        for (std::size_t c = 0; c < cat_values.size(); ++c)
            row.push_back(cat_values[c][static_cast<std::size_t>(cats[c])]);
        row.insert(row.begin() + 7, s == 1 ? "Female" : "Male");
        row.push_back(detail::format_numeric(hours, 0));
        row.push_back(y == 1 ? "gt50k" : "le50k");
        r.rows.push_back(std::move(row));
        r.tail_flags.push_back(tail ? 1 : 0);
    }
    return r;
}

/// Recidivism-style replica: 6,172 rows, six categorical attributes plus
/// race, one numeric, two-year recidivism label. Tail rows dominate (75%)
/// with a thin race-leaning label coin; majority rows are nearly clean, so
/// the disparity lives almost entirely in the tail.
inline ReplicaData make_compas_replica(std::uint64_t seed = 3, int n_rows = 6172) {
    if (n_rows < 0) throw ConfigError("n_rows must be non-negative");
    Rng rng(seed);
    const std::vector<std::vector<std::string>> cat_values = {
        {"Male", "Female"},
        {"under25", "25to45", "over45"},
        {"F", "M"},
        {"0", "1to3", "4to9", "10plus"},
        {"none", "some"},
        {"none", "short", "long"},
    };
    const std::vector<double> coarse_days = {0, 3, 7, 14, 21, 30, 45, 60, 70};
    const double tail_fraction = 0.75;
    const double rho = 0.05;
    const double eta = 0.03;
    const double pos_mass = 0.75;

    auto pool = detail::make_archetype_pool(9001, 12, cat_values, coarse_days);
    detail::assign_labels(pool, pos_mass, false);

    ReplicaData r;
    r.schema.name = "compas_replica";
    r.schema.columns = {{"sex", ColumnKind::categorical},
                        {"age_cat", ColumnKind::categorical},
                        {"charge_degree", ColumnKind::categorical},
                        {"priors_bucket", ColumnKind::categorical},
                        {"juvenile_record", ColumnKind::categorical},
                        {"custody_bucket", ColumnKind::categorical},
                        {"race", ColumnKind::categorical},
                        {"days_screening", ColumnKind::numeric},
                        {"two_year_recid", ColumnKind::categorical}};
    r.schema.label_column = "two_year_recid";
    r.schema.positive_label_value = "yes";
    r.schema.sensitive_column = "race";
    r.schema.disadvantaged_value = "AfricanAmerican";

    for (int i = 0; i < n_rows; ++i) {
        const bool tail = uniform01(rng) < tail_fraction;
        const int s = uniform01(rng) < 0.5 ? 1 : 0;  // 1 = AfricanAmerican
        std::vector<int> cats(cat_values.size());
        double days = 0.0;
        int y = 0;
        if (tail) {
            for (std::size_t c = 0; c < cat_values.size(); ++c)
                cats[c] = static_cast<int>(uniform01(rng) * static_cast<double>(cat_values[c].size()));
            static const double tail_days[] = {78, 80, 82, 84, 86, 88, 90, 92, 94, 96, 98};
            days = tail_days[static_cast<std::size_t>(uniform01(rng) * 11)];
            const double p = 0.5 + (s == 1 ? rho : -rho);
            y = uniform01(rng) < p ? 1 : 0;
        } else {
            const auto& a = detail::pick_archetype(pool, uniform01(rng));
            cats = a.cats;
            days = a.numeric;
            y = a.label;
            if (uniform01(rng) < eta) y ^= 1;
        }
        std::vector<std::string> row;
        for (std::size_t c = 0; c < cat_values.size(); ++c)
            row.push_back(cat_values[c][static_cast<std::size_t>(cats[c])]);
        row.push_back(s == 1 ? "AfricanAmerican" : "Caucasian");
        row.push_back(detail::format_numeric(days, 2));
        row.push_back(y == 1 ? "yes" : "no");
        r.rows.push_back(std::move(row));
        r.tail_flags.push_back(tail ? 1 : 0);
    }
    return r;
}

/// Credit-scoring-style replica: 600 rows, nineteen categorical attributes
/// including gender, one numeric amount, binary risk label. The small row
/// count keeps most path frequencies near one, so default clustering finds
/// only a handful of biased samples; repair barely moves the metrics, which
/// is the expected behavior at this scale.
inline ReplicaData make_credit_replica(std::uint64_t seed = 1, int n_rows = 600) {
    if (n_rows < 0) throw ConfigError("n_rows must be non-negative");
    Rng rng(seed);
    const std::vector<std::vector<std::string>> cat_values = {
        {"none", "lt0", "0to200", "gt200"},
        {"lt12", "12to24", "24to36", "gt36"},
        {"critical", "delayed", "paid", "current", "nohistory"},
        {"car", "furniture", "radio_tv", "education", "business", "repairs"},
        {"lt100", "100to500", "500to1000", "gt1000", "unknown"},
        {"unemployed", "lt1", "1to4", "4to7", "gt7"},
        {"r1", "r2", "r3", "r4"},
        {"none", "coapplicant", "guarantor"},
        {"y1", "y2", "y3", "y4"},
        {"realestate", "insurance", "car", "unknown"},
        {"lt25", "25to35", "35to45", "45to60", "gt60"},
        {"bank", "stores", "none"},
        {"own", "rent", "free"},
        {"one", "twoplus"},
        {"unskilled", "skilled", "management", "selfemployed"},
        {"one", "twoplus"},
        {"yes", "no"},
        {"yes", "no"},
    };
    const std::vector<double> coarse_amounts = {800, 1500, 2500, 4000, 6000, 8000};
    const double tail_fraction = 0.10;
    const double rho = 0.10;
    const double eta = 0.25;
    const double pos_mass = 0.06;

    auto pool = detail::make_archetype_pool(5303, 20, cat_values, coarse_amounts);
    detail::assign_labels(pool, pos_mass, true);

    ReplicaData r;
    r.schema.name = "credit_replica";
    r.schema.columns = {{"checking_status", ColumnKind::categorical},
                        {"duration_bucket", ColumnKind::categorical},
                        {"credit_history", ColumnKind::categorical},
                        {"purpose", ColumnKind::categorical},
                        {"savings", ColumnKind::categorical},
                        {"employment", ColumnKind::categorical},
                        {"installment_rate", ColumnKind::categorical},
                        {"gender", ColumnKind::categorical},
                        {"other_debtors", ColumnKind::categorical},
                        {"residence_since", ColumnKind::categorical},
                        {"property", ColumnKind::categorical},
                        {"age_bucket", ColumnKind::categorical},
                        {"other_plans", ColumnKind::categorical},
                        {"housing", ColumnKind::categorical},
                        {"existing_credits", ColumnKind::categorical},
                        {"job", ColumnKind::categorical},
                        {"dependents", ColumnKind::categorical},
                        {"telephone", ColumnKind::categorical},
                        {"foreign_worker", ColumnKind::categorical},
                        {"credit_amount", ColumnKind::numeric},
                        {"credit_risk", ColumnKind::categorical}};
    r.schema.label_column = "credit_risk";
    r.schema.positive_label_value = "bad";
    r.schema.sensitive_column = "gender";
    r.schema.disadvantaged_value = "female";

    for (int i = 0; i < n_rows; ++i) {
        const bool tail = uniform01(rng) < tail_fraction;
        const int s = uniform01(rng) < 0.5 ? 1 : 0;  // 1 = female
        std::vector<int> cats(cat_values.size());
        double amount = 0.0;
        int y = 0;
        if (tail) {
            for (std::size_t c = 0; c < cat_values.size(); ++c)
                cats[c] = static_cast<int>(uniform01(rng) * static_cast<double>(cat_values[c].size()));
            amount = 15000.0 + 500.0 * std::floor(uniform01(rng) * 10.0);
            const double p = 0.5 + (s == 0 ? rho : -rho);
            y = uniform01(rng) < p ? 1 : 0;
        } else {
            const auto& a = detail::pick_archetype(pool, uniform01(rng));
            cats = a.cats;
            amount = a.numeric;
            y = a.label;
            if (uniform01(rng) < eta) y ^= 1;
        }
        std::vector<std::string> row;
        for (std::size_t c = 0; c < 7; ++c)
            row.push_back(cat_values[c][static_cast<std::size_t>(cats[c])]);
        row.push_back(s == 1 ? "female" : "male");
        for (std::size_t c = 7; c < cat_values.size(); ++c)
            row.push_back(cat_values[c][static_cast<std::size_t>(cats[c])]);
        row.push_back(detail::format_numeric(amount, 0));
        row.push_back(y == 1 ? "bad" : "good");
        r.rows.push_back(std::move(row));
        r.tail_flags.push_back(tail ? 1 : 0);
    }
    return r;
}

inline ReplicaData make_replica(const std::string& name, std::uint64_t seed, int n_rows) {
    if (name == "census_replica") return make_census_replica(seed, n_rows);
    if (name == "compas_replica") return make_compas_replica(seed, n_rows);
    if (name == "credit_replica") return make_credit_replica(seed, n_rows);
    throw ConfigError("unknown replica '" + name + "'");
}

/// Default (seed, n_rows) per replica, matching the one-argument makers.
inline std::pair<std::uint64_t, int> replica_defaults(const std::string& name) {
    if (name == "census_replica") return {13, 32561};
    if (name == "compas_replica") return {3, 6172};
    if (name == "credit_replica") return {1, 600};
    throw ConfigError("unknown replica '" + name + "'");
}

inline const std::vector<std::string>& replica_names() {
    static const std::vector<std::string> names = {"census_replica", "compas_replica",
                                                   "credit_replica"};
    return names;
}

namespace detail {

inline std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

/// Write `<name>.csv` (header row + data rows) and `<name>.schema.json`
/// under `dir`, creating the directory if needed. Returns the CSV path.
inline std::string write_replica(const ReplicaData& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::string csv_path = (fs::path(dir) / (r.schema.name + ".csv")).string();
    const std::string schema_path = (fs::path(dir) / (r.schema.name + ".schema.json")).string();

    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw Error("cannot open " + csv_path + " for writing");
    for (std::size_t c = 0; c < r.schema.columns.size(); ++c)
        csv << (c ? "," : "") << detail::csv_field(r.schema.columns[c].name);
    csv << "\n";
    for (const auto& row : r.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            csv << (c ? "," : "") << detail::csv_field(row[c]);
        csv << "\n";
    }
    if (!csv.good()) throw Error("failed while writing " + csv_path);
    csv.close();

    std::ofstream schema(schema_path, std::ios::binary);
    if (!schema) throw Error("cannot open " + schema_path + " for writing");
    schema << schema_to_json(r.schema).dump(2) << "\n";
    if (!schema.good()) throw Error("failed while writing " + schema_path);
    return csv_path;
}

/// Calibrated experiment configuration for the census replica: softmax head,
/// 30 naive epochs, and a strong 0.7 dropout during the biased passes.
inline ExperimentConfig census_replica_config() {
    ExperimentConfig cfg;
    cfg.dataset_name = "census_replica";
    cfg.hidden_layers = {32, 32, 32};
    cfg.output_head = OutputHead::softmax;
    cfg.training.max_epochs = 30;
    cfg.repair.dropout_rate = 0.7;
    cfg.repair.retrain_epochs = 15;
    cfg.repair.retrain.learning_rate = 0.003;
    return cfg;
}

/// Calibrated experiment configuration for the compas replica: linear head
/// and 20 naive epochs; repair keeps the default 0.5 dropout.
inline ExperimentConfig compas_replica_config() {
    ExperimentConfig cfg;
    cfg.dataset_name = "compas_replica";
    cfg.hidden_layers = {32, 32, 32};
    cfg.output_head = OutputHead::linear;
    cfg.training.max_epochs = 20;
    cfg.repair.dropout_rate = 0.5;
    cfg.repair.retrain_epochs = 15;
    cfg.repair.retrain.learning_rate = 0.003;
    return cfg;
}

/// Calibrated experiment configuration for the credit replica: linear head,
/// 30 naive epochs.
inline ExperimentConfig credit_replica_config() {
    ExperimentConfig cfg;
    cfg.dataset_name = "credit_replica";
    cfg.hidden_layers = {32, 32, 32};
    cfg.output_head = OutputHead::linear;
    cfg.training.max_epochs = 30;
    cfg.repair.dropout_rate = 0.5;
    cfg.repair.retrain_epochs = 15;
    cfg.repair.retrain.learning_rate = 0.003;
    return cfg;
}

inline ExperimentConfig replica_config(const std::string& name) {
    if (name == "census_replica") return census_replica_config();
    if (name == "compas_replica") return compas_replica_config();
    if (name == "credit_replica") return credit_replica_config();
    throw ConfigError("unknown replica '" + name + "'");
}

}  // namespace fairneuron
