#pragma once

// Schema-driven CSV ingestion, one-hot/min-max encoding, sensitive-attribute
// tagging, and the 7:1:2 split. Encoding is a pure function of (rows, schema);
// categorical order is first-appearance order among kept rows.

#include "fairneuron/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fairneuron {

enum class ColumnKind { categorical, numeric, drop };

inline std::string to_string(ColumnKind k) {
    switch (k) {
        case ColumnKind::categorical: return "categorical";
        case ColumnKind::numeric: return "numeric";
        case ColumnKind::drop: return "drop";
    }
    return "?";
}

inline ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "numeric") return ColumnKind::numeric;
    if (s == "drop") return ColumnKind::drop;
    throw SchemaError("unknown column kind '" + s + "'");
}

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
};

/// Column layout plus label/sensitive declarations. The label column is never
/// a feature. The sensitive column feeds S and is also one-hot encoded into X
/// unless its kind is `drop`.
struct DatasetSchema {
    std::string name;
    std::vector<ColumnSpec> columns;
    std::string label_column;
    std::string positive_label_value;
    std::string sensitive_column;
    std::string disadvantaged_value;  // maps to S=1
    std::vector<std::string> missing_values = {"", "?", "NA"};

    const ColumnSpec* find(const std::string& column) const {
        for (const auto& c : columns)
            if (c.name == column) return &c;
        return nullptr;
    }

    void validate() const {
        if (columns.empty()) throw SchemaError("schema has no columns");
        for (std::size_t i = 0; i < columns.size(); ++i)
            for (std::size_t j = i + 1; j < columns.size(); ++j)
                if (columns[i].name == columns[j].name)
                    throw SchemaError("duplicate column '" + columns[i].name + "'");
        if (label_column.empty() || sensitive_column.empty())
            throw SchemaError("schema must declare a label column and a sensitive column");
        if (label_column == sensitive_column)
            throw SchemaError("label and sensitive column must differ");
        const ColumnSpec* label = find(label_column);
        const ColumnSpec* sensitive = find(sensitive_column);
        if (!label) throw SchemaError("label column '" + label_column + "' not in schema");
        if (!sensitive) throw SchemaError("sensitive column '" + sensitive_column + "' not in schema");
        if (sensitive->kind == ColumnKind::numeric)
            throw SchemaError("sensitive column must be categorical (or drop to exclude it from X)");
    }

    bool is_missing(const std::string& value) const {
        return std::find(missing_values.begin(), missing_values.end(), value) != missing_values.end();
    }
};

inline nlohmann::json schema_to_json(const DatasetSchema& s) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : s.columns) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
    return nlohmann::json{
        {"name", s.name},
        {"columns", cols},
        {"label", {{"column", s.label_column}, {"positive", s.positive_label_value}}},
        {"sensitive", {{"column", s.sensitive_column}, {"disadvantaged", s.disadvantaged_value}}},
        {"missing_values", s.missing_values},
    };
}

inline DatasetSchema schema_from_json(const nlohmann::json& j) {
    try {
        DatasetSchema s;
        s.name = j.value("name", "");
        for (const auto& c : j.at("columns"))
            s.columns.push_back({c.at("name").get<std::string>(),
                                 column_kind_from_string(c.at("kind").get<std::string>())});
        s.label_column = j.at("label").at("column").get<std::string>();
        s.positive_label_value = j.at("label").at("positive").get<std::string>();
        s.sensitive_column = j.at("sensitive").at("column").get<std::string>();
        s.disadvantaged_value = j.at("sensitive").at("disadvantaged").get<std::string>();
        if (j.contains("missing_values"))
            s.missing_values = j.at("missing_values").get<std::vector<std::string>>();
        s.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed schema document: ") + e.what());
    }
}

inline DatasetSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("schema parse error: ") + e.what());
    }
    return schema_from_json(j);
}

/// One encoded column group: a one-hot block or a single scaled numeric.
struct FeatureBlock {
    std::string column;
    ColumnKind kind = ColumnKind::categorical;
    int start = 0;
    int width = 1;
    std::vector<std::string> categories;  // categorical only, first-appearance order
    double raw_min = 0.0, raw_max = 0.0;  // numeric only, stats of the encoded rows
};

struct EncodedDataset {
    Matrix X;                // n x d
    std::vector<int> y;      // binary label
    std::vector<int> s;      // binary sensitive attribute, 1 = disadvantaged
    std::vector<std::string> feature_names;
    std::vector<FeatureBlock> blocks;
    std::size_t dropped_rows = 0;

    int n_rows() const { return static_cast<int>(X.rows()); }
    int n_features() const { return static_cast<int>(X.cols()); }

    EncodedDataset subset(const std::vector<int>& rows) const {
        EncodedDataset out;
        out.X = X(rows, Eigen::all);
        out.y.reserve(rows.size());
        out.s.reserve(rows.size());
        for (int r : rows) {
            out.y.push_back(y[static_cast<std::size_t>(r)]);
            out.s.push_back(s[static_cast<std::size_t>(r)]);
        }
        out.feature_names = feature_names;
        out.blocks = blocks;
        return out;
    }

    const FeatureBlock* find_block(const std::string& column) const {
        for (const auto& b : blocks)
            if (b.column == column) return &b;
        return nullptr;
    }
};

/// Recover category labels from a one-hot block (argmax per row).
inline std::vector<std::string> decode_categorical(const EncodedDataset& data, const std::string& column) {
    const FeatureBlock* b = data.find_block(column);
    if (!b || b->kind != ColumnKind::categorical)
        throw SchemaError("no categorical block for column '" + column + "'");
    std::vector<std::string> out;
    out.reserve(data.X.rows());
    for (Eigen::Index r = 0; r < data.X.rows(); ++r) {
        int best = 0;
        for (int k = 1; k < b->width; ++k)
            if (data.X(r, b->start + k) > data.X(r, b->start + best)) best = k;
        out.push_back(b->categories[static_cast<std::size_t>(best)]);
    }
    return out;
}

namespace detail {

/// RFC-4180 CSV reader: quoted fields, doubled quotes, CR/LF line ends.
/// Returns one vector of fields per record and the 1-based line number where
/// each record starts.
struct CsvFile {
    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> line_numbers;
};

inline CsvFile parse_csv(const std::string& text) {
    CsvFile out;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t line = 1, record_line = 1;
    bool any = false;
    auto end_field = [&] {
        fields.push_back(field);
        field.clear();
        any = true;
    };
    auto end_record = [&] {
        if (any || !fields.empty() || !field.empty()) {
            end_field();
            out.records.push_back(std::move(fields));
            out.line_numbers.push_back(record_line);
            fields.clear();
            any = false;
        }
        record_line = line;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // consumed with the following '\n' (or alone)
            if (i + 1 < text.size() && text[i + 1] == '\n') continue;
            ++line;
            end_record();
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field += c;
        }
    }
    if (quoted) throw CsvParseError("unterminated quoted field", record_line);
    if (!field.empty() || !fields.empty() || any) {
        end_field();
        out.records.push_back(std::move(fields));
        out.line_numbers.push_back(record_line);
    }
    return out;
}

inline double parse_numeric(const std::string& raw, std::size_t line) {
    const char* begin = raw.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0'))
        throw CsvParseError("non-numeric value '" + raw + "' in numeric column", line);
    if (!std::isfinite(v)) throw CsvParseError("non-finite value in numeric column", line);
    return v;
}

}  // namespace detail

/// Encode already-parsed rows (each row = one field per schema column, in
/// schema column order). Rows with missing values in used columns are dropped
/// and counted.
inline EncodedDataset encode_rows(const std::vector<std::vector<std::string>>& rows,
                                  const DatasetSchema& schema,
                                  const std::vector<std::size_t>* line_numbers = nullptr) {
    schema.validate();
    const std::size_t n_cols = schema.columns.size();
    auto line_of = [&](std::size_t r) {
        return line_numbers ? (*line_numbers)[r] : r + 1;
    };

    std::size_t label_idx = 0, sensitive_idx = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (schema.columns[c].name == schema.label_column) label_idx = c;
        if (schema.columns[c].name == schema.sensitive_column) sensitive_idx = c;
    }

    // Pass 1: drop rows with missing values in used columns.
    std::vector<std::size_t> kept;
    std::size_t dropped = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != n_cols)
            throw CsvParseError("expected " + std::to_string(n_cols) + " fields, found " +
                                    std::to_string(rows[r].size()),
                                line_of(r));
        bool missing = false;
        for (std::size_t c = 0; c < n_cols && !missing; ++c) {
            const bool used = c == label_idx || c == sensitive_idx ||
                              schema.columns[c].kind != ColumnKind::drop;
            if (used && schema.is_missing(rows[r][c])) missing = true;
        }
        if (missing)
            ++dropped;
        else
            kept.push_back(r);
    }

    // Pass 2: category vocabularies in first-appearance order.
    std::vector<std::vector<std::string>> vocab(n_cols);
    std::vector<std::map<std::string, int>> vocab_index(n_cols);
    for (std::size_t r : kept) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (c == label_idx || schema.columns[c].kind != ColumnKind::categorical) continue;
            auto& index = vocab_index[c];
            const std::string& v = rows[r][c];
            if (index.emplace(v, static_cast<int>(vocab[c].size())).second) vocab[c].push_back(v);
        }
    }
    // The sensitive column needs a vocabulary even when its kind is drop.
    {
        auto& index = vocab_index[sensitive_idx];
        auto& voc = vocab[sensitive_idx];
        if (voc.empty()) {
            for (std::size_t r : kept) {
                const std::string& v = rows[r][sensitive_idx];
                if (index.emplace(v, static_cast<int>(voc.size())).second) voc.push_back(v);
            }
        }
        if (!kept.empty()) {
            if (voc.size() != 2)
                throw SchemaError("sensitive column '" + schema.sensitive_column + "' has " +
                                  std::to_string(voc.size()) + " values after cleaning, expected 2");
            if (!index.count(schema.disadvantaged_value))
                throw SchemaError("disadvantaged value '" + schema.disadvantaged_value +
                                  "' not present in sensitive column");
        }
    }

    // Feature layout in schema column order.
    EncodedDataset out;
    out.dropped_rows = dropped;
    int width = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (c == label_idx || schema.columns[c].kind == ColumnKind::drop) continue;
        FeatureBlock b;
        b.column = schema.columns[c].name;
        b.kind = schema.columns[c].kind;
        b.start = width;
        if (b.kind == ColumnKind::categorical) {
            b.width = static_cast<int>(vocab[c].size());
            b.categories = vocab[c];
            for (const auto& v : b.categories) out.feature_names.push_back(b.column + "=" + v);
        } else {
            b.width = 1;
            out.feature_names.push_back(b.column);
        }
        width += b.width;
        out.blocks.push_back(std::move(b));
    }

    // Pass 3: fill the matrix.
    out.X = Matrix::Zero(static_cast<Eigen::Index>(kept.size()), width);
    out.y.resize(kept.size());
    out.s.resize(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const std::size_t r = kept[i];
        out.y[i] = rows[r][label_idx] == schema.positive_label_value ? 1 : 0;
        out.s[i] = rows[r][sensitive_idx] == schema.disadvantaged_value ? 1 : 0;
        std::size_t block = 0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (c == label_idx || schema.columns[c].kind == ColumnKind::drop) continue;
            const FeatureBlock& b = out.blocks[block++];
            if (b.kind == ColumnKind::categorical) {
                out.X(static_cast<Eigen::Index>(i), b.start + vocab_index[c].at(rows[r][c])) = 1.0;
            } else {
                out.X(static_cast<Eigen::Index>(i), b.start) = detail::parse_numeric(rows[r][c], line_of(r));
            }
        }
    }

    // Min-max scale numerics over the loaded rows; constant columns map to 0.
    for (auto& b : out.blocks) {
        if (b.kind != ColumnKind::numeric || kept.empty()) continue;
        const auto col = out.X.col(b.start);
        b.raw_min = col.minCoeff();
        b.raw_max = col.maxCoeff();
        if (b.raw_max > b.raw_min)
            out.X.col(b.start) = (col.array() - b.raw_min) / (b.raw_max - b.raw_min);
        else
            out.X.col(b.start).setZero();
    }
    return out;
}

/// Load a CSV with a header row matching the schema column names.
inline EncodedDataset load_dataset(const std::string& csv_path, const DatasetSchema& schema) {
    schema.validate();
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw Error("cannot open " + csv_path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    detail::CsvFile csv = detail::parse_csv(buffer.str());
    if (csv.records.empty()) throw CsvParseError("empty file", 1);

    const auto& header = csv.records.front();
    for (const auto& name : header)
        if (!schema.find(name)) throw SchemaError("unknown column '" + name + "' in header");
    if (header.size() != schema.columns.size())
        throw SchemaError("header has " + std::to_string(header.size()) + " columns, schema declares " +
                          std::to_string(schema.columns.size()));

    // Reorder fields into schema column order.
    std::vector<std::size_t> order(schema.columns.size());
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), schema.columns[c].name);
        if (it == header.end())
            throw SchemaError("column '" + schema.columns[c].name + "' missing from header");
        order[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;
    rows.reserve(csv.records.size() - 1);
    for (std::size_t r = 1; r < csv.records.size(); ++r) {
        if (csv.records[r].size() != header.size())
            throw CsvParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(csv.records[r].size()),
                                csv.line_numbers[r]);
        std::vector<std::string> row(schema.columns.size());
        for (std::size_t c = 0; c < schema.columns.size(); ++c) row[c] = csv.records[r][order[c]];
        rows.push_back(std::move(row));
        lines.push_back(csv.line_numbers[r]);
    }
    return encode_rows(rows, schema, &lines);
}

struct SplitDataset {
    EncodedDataset train, validation, test;
    std::uint64_t split_seed = 0;
};

/// Seeded 7:1:2 split. Numeric features are re-scaled by training-split
/// min-max; validation/test values are clamped into [0, 1].
inline SplitDataset split(const EncodedDataset& data, std::uint64_t seed) {
    const int n = data.n_rows();
    if (n < 10) throw DataError("dataset too small to split: " + std::to_string(n) + " rows");
    Rng rng(seed);
    const std::vector<int> perm = shuffled_indices(static_cast<std::size_t>(n), rng);
    const int n_train = static_cast<int>(std::floor(0.7 * n));
    const int n_val = static_cast<int>(std::floor(0.1 * n));
    std::vector<int> train_idx(perm.begin(), perm.begin() + n_train);
    std::vector<int> val_idx(perm.begin() + n_train, perm.begin() + n_train + n_val);
    std::vector<int> test_idx(perm.begin() + n_train + n_val, perm.end());

    SplitDataset out;
    out.split_seed = seed;
    out.train = data.subset(train_idx);
    out.validation = data.subset(val_idx);
    out.test = data.subset(test_idx);

    for (std::size_t bi = 0; bi < data.blocks.size(); ++bi) {
        if (data.blocks[bi].kind != ColumnKind::numeric) continue;
        const int col = data.blocks[bi].start;
        const double lo = out.train.X.col(col).minCoeff();
        const double hi = out.train.X.col(col).maxCoeff();
        auto rescale = [&](EncodedDataset& part, bool clamp) {
            if (hi > lo)
                part.X.col(col) = (part.X.col(col).array() - lo) / (hi - lo);
            else
                part.X.col(col).setZero();
            if (clamp) part.X.col(col) = part.X.col(col).cwiseMax(0.0).cwiseMin(1.0);
        };
        rescale(out.train, false);
        rescale(out.validation, true);
        rescale(out.test, true);
    }
    return out;
}

/// Cache an encoded dataset to the columnar text format:
/// line 1 is a JSON header, then one line per feature column ("x<i> v v ..."),
/// then the "y" and "s" lines. Values use shortest-round-trip encoding.
inline void save_encoded(const EncodedDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    nlohmann::json meta;
    meta["format"] = "fairneuron-encoded";
    meta["version"] = 1;
    meta["n_rows"] = data.n_rows();
    meta["feature_names"] = data.feature_names;
    meta["dropped_rows"] = data.dropped_rows;
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : data.blocks)
        blocks.push_back({{"column", b.column},
                          {"kind", to_string(b.kind)},
                          {"start", b.start},
                          {"width", b.width},
                          {"categories", b.categories},
                          {"raw_min", b.raw_min},
                          {"raw_max", b.raw_max}});
    meta["blocks"] = std::move(blocks);
    out << meta.dump() << "\n";
    for (int c = 0; c < data.n_features(); ++c) {
        out << "x" << c;
        for (int r = 0; r < data.n_rows(); ++r) out << ' ' << nlohmann::json(data.X(r, c)).dump();
        out << "\n";
    }
    out << "y";
    for (int v : data.y) out << ' ' << v;
    out << "\ns";
    for (int v : data.s) out << ' ' << v;
    out << "\n";
    if (!out) throw Error("write failed for " + path);
}

inline EncodedDataset load_encoded(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw Error("empty encoded dataset file");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(header);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("encoded dataset header: ") + e.what());
    }
    if (meta.value("format", "") != "fairneuron-encoded" || meta.value("version", 0) != 1)
        throw Error("not a fairneuron-encoded v1 file");
    EncodedDataset data;
    const int n = meta.at("n_rows").get<int>();
    data.feature_names = meta.at("feature_names").get<std::vector<std::string>>();
    data.dropped_rows = meta.at("dropped_rows").get<std::size_t>();
    for (const auto& jb : meta.at("blocks")) {
        FeatureBlock b;
        b.column = jb.at("column").get<std::string>();
        b.kind = column_kind_from_string(jb.at("kind").get<std::string>());
        b.start = jb.at("start").get<int>();
        b.width = jb.at("width").get<int>();
        b.categories = jb.at("categories").get<std::vector<std::string>>();
        b.raw_min = jb.at("raw_min").get<double>();
        b.raw_max = jb.at("raw_max").get<double>();
        data.blocks.push_back(std::move(b));
    }
    const int d = static_cast<int>(data.feature_names.size());
    data.X = Matrix::Zero(n, d);
    for (int c = 0; c < d; ++c) {
        std::string tag;
        in >> tag;
        if (tag != "x" + std::to_string(c)) throw Error("encoded dataset: expected column x" + std::to_string(c));
        for (int r = 0; r < n; ++r) in >> data.X(r, c);
    }
    std::string tag;
    in >> tag;
    if (tag != "y") throw Error("encoded dataset: expected y row");
    data.y.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) in >> data.y[static_cast<std::size_t>(r)];
    in >> tag;
    if (tag != "s") throw Error("encoded dataset: expected s row");
    data.s.resize(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) in >> data.s[static_cast<std::size_t>(r)];
    if (!in) throw Error("encoded dataset: truncated data section");
    return data;
}

}  // namespace fairneuron
