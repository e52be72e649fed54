#include "fairneuron/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

using namespace fairneuron;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("fairneuron_dataset_" + name);
}

std::filesystem::path write_file(const std::string& name, const std::string& content) {
    const auto path = temp_file(name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

DatasetSchema toy_schema() {
    DatasetSchema s;
    s.name = "toy";
    s.columns = {
        {"age", ColumnKind::numeric},
        {"job", ColumnKind::categorical},
        {"sex", ColumnKind::categorical},
        {"note", ColumnKind::drop},
        {"income", ColumnKind::drop},
    };
    s.label_column = "income";
    s.positive_label_value = "high";
    s.sensitive_column = "sex";
    s.disadvantaged_value = "F";
    return s;
}

const char* kToyCsv =
    "age,job,sex,note,income\n"
    "30,eng,M,a,high\n"
    "40,doc,F,b,low\n"
    "20,eng,F,c,high\n"
    "60,art,M,d,low\n";

}  // namespace

TEST(Schema, ValidationCatchesBrokenDeclarations) {
    DatasetSchema s = toy_schema();
    EXPECT_NO_THROW(s.validate());
    DatasetSchema dup = s;
    dup.columns.push_back({"age", ColumnKind::numeric});
    EXPECT_THROW(dup.validate(), SchemaError);
    DatasetSchema nolabel = s;
    nolabel.label_column = "wage";
    EXPECT_THROW(nolabel.validate(), SchemaError);
    DatasetSchema numsens = s;
    numsens.columns[2].kind = ColumnKind::numeric;
    EXPECT_THROW(numsens.validate(), SchemaError);
    DatasetSchema same = s;
    same.sensitive_column = "income";
    EXPECT_THROW(same.validate(), SchemaError);
}

TEST(Schema, JsonRoundTrip) {
    const DatasetSchema s = toy_schema();
    const DatasetSchema back = schema_from_json(schema_to_json(s));
    EXPECT_EQ(back.name, s.name);
    ASSERT_EQ(back.columns.size(), s.columns.size());
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
        EXPECT_EQ(back.columns[i].name, s.columns[i].name);
        EXPECT_EQ(back.columns[i].kind, s.columns[i].kind);
    }
    EXPECT_EQ(back.label_column, s.label_column);
    EXPECT_EQ(back.positive_label_value, s.positive_label_value);
    EXPECT_EQ(back.sensitive_column, s.sensitive_column);
    EXPECT_EQ(back.disadvantaged_value, s.disadvantaged_value);
    EXPECT_EQ(back.missing_values, s.missing_values);
    EXPECT_THROW(schema_from_json(nlohmann::json{{"name", "x"}}), SchemaError);
}

TEST(Csv, ParsesQuotedFieldsAndCrlf) {
    const auto f = detail::parse_csv("a,b\r\n\"x,y\",\"he said \"\"hi\"\"\"\r\n1,2\n");
    ASSERT_EQ(f.records.size(), 3u);
    EXPECT_EQ(f.records[1][0], "x,y");
    EXPECT_EQ(f.records[1][1], "he said \"hi\"");
    EXPECT_EQ(f.records[2][0], "1");
}

TEST(Csv, QuotedFieldMayContainNewline) {
    const auto f = detail::parse_csv("a,b\n\"line1\nline2\",2\n");
    ASSERT_EQ(f.records.size(), 2u);
    EXPECT_EQ(f.records[1][0], "line1\nline2");
}

TEST(Csv, UnterminatedQuoteThrows) {
    EXPECT_THROW(detail::parse_csv("a,b\n\"oops,2\n"), CsvParseError);
}

TEST(LoadDataset, EncodesToyFile) {
    const auto path = write_file("toy.csv", kToyCsv);
    const EncodedDataset d = load_dataset(path.string(), toy_schema());
    ASSERT_EQ(d.n_rows(), 4);
    // age scaled to [0,1], then job one-hot (eng,doc,art first-appearance), then sex (M,F)
    ASSERT_EQ(d.n_features(), 1 + 3 + 2);
    EXPECT_EQ(d.feature_names[0], "age");
    EXPECT_EQ(d.feature_names[1], "job=eng");
    EXPECT_EQ(d.feature_names[2], "job=doc");
    EXPECT_EQ(d.feature_names[3], "job=art");
    EXPECT_EQ(d.feature_names[4], "sex=M");
    EXPECT_EQ(d.feature_names[5], "sex=F");
    EXPECT_EQ(d.X(0, 0), (30.0 - 20.0) / 40.0);
    EXPECT_EQ(d.X(2, 0), 0.0);
    EXPECT_EQ(d.X(3, 0), 1.0);
    EXPECT_EQ(d.X(0, 1), 1.0);
    EXPECT_EQ(d.X(1, 2), 1.0);
    EXPECT_EQ(d.X(3, 3), 1.0);
    EXPECT_EQ(d.y, (std::vector<int>{1, 0, 1, 0}));
    EXPECT_EQ(d.s, (std::vector<int>{0, 1, 1, 0}));
    EXPECT_EQ(d.dropped_rows, 0u);
    // the drop-kind note column and the label never become features
    for (const auto& n : d.feature_names) {
        EXPECT_EQ(n.find("note"), std::string::npos);
        EXPECT_EQ(n.find("income"), std::string::npos);
    }
}

TEST(LoadDataset, HeaderOrderMayDifferFromSchema) {
    const auto path = write_file("reordered.csv",
                                 "income,sex,age,job,note\n"
                                 "high,M,30,eng,a\n"
                                 "low,F,40,doc,b\n"
                                 "high,F,20,eng,c\n"
                                 "low,M,60,art,d\n");
    const EncodedDataset a = load_dataset(path.string(), toy_schema());
    const auto path2 = write_file("ordered.csv", kToyCsv);
    const EncodedDataset b = load_dataset(path2.string(), toy_schema());
    EXPECT_EQ(a.feature_names, b.feature_names);
    EXPECT_EQ((a.X - b.X).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.s, b.s);
}

TEST(LoadDataset, DropsRowsWithMissingValues) {
    const auto path = write_file("missing.csv",
                                 "age,job,sex,note,income\n"
                                 "30,eng,M,a,high\n"
                                 "?,doc,F,b,low\n"
                                 "20,,F,c,high\n"
                                 "60,art,M,,low\n"  // missing only in drop-kind column
                                 "25,art,NA,x,low\n"
                                 "35,doc,F,y,high\n");
    const EncodedDataset d = load_dataset(path.string(), toy_schema());
    EXPECT_EQ(d.n_rows(), 3);
    EXPECT_EQ(d.dropped_rows, 3u);
    EXPECT_EQ(d.y, (std::vector<int>{1, 0, 1}));
}

TEST(LoadDataset, ReportsParseErrorsWithLineNumbers) {
    const auto ragged = write_file("ragged.csv",
                                   "age,job,sex,note,income\n"
                                   "30,eng,M,a,high\n"
                                   "40,doc,F,b\n");
    try {
        load_dataset(ragged.string(), toy_schema());
        FAIL() << "expected CsvParseError";
    } catch (const CsvParseError& e) {
        EXPECT_EQ(e.line, 3u);
    }
    const auto bad_num = write_file("badnum.csv",
                                    "age,job,sex,note,income\n"
                                    "30,eng,M,a,high\n"
                                    "4x,doc,F,b,low\n");
    try {
        load_dataset(bad_num.string(), toy_schema());
        FAIL() << "expected CsvParseError";
    } catch (const CsvParseError& e) {
        EXPECT_EQ(e.line, 3u);
    }
}

TEST(LoadDataset, RejectsHeaderSchemaMismatch) {
    const auto unknown = write_file("unknown.csv", "age,job,sex,note,income,extra\n");
    EXPECT_THROW(load_dataset(unknown.string(), toy_schema()), SchemaError);
    const auto missing_col = write_file("missingcol.csv", "age,job,sex,note\n");
    EXPECT_THROW(load_dataset(missing_col.string(), toy_schema()), SchemaError);
}

TEST(LoadDataset, RejectsBadSensitiveColumn) {
    const auto three = write_file("threevals.csv",
                                  "age,job,sex,note,income\n"
                                  "30,eng,M,a,high\n"
                                  "40,doc,F,b,low\n"
                                  "50,doc,X,c,low\n");
    EXPECT_THROW(load_dataset(three.string(), toy_schema()), SchemaError);
    const auto nodis = write_file("nodisadv.csv",
                                  "age,job,sex,note,income\n"
                                  "30,eng,M,a,high\n"
                                  "40,doc,N,b,low\n");
    EXPECT_THROW(load_dataset(nodis.string(), toy_schema()), SchemaError);
}

TEST(LoadDataset, SensitiveCanBeExcludedFromFeatures) {
    DatasetSchema s = toy_schema();
    s.columns[2].kind = ColumnKind::drop;
    const auto path = write_file("sensdrop.csv", kToyCsv);
    const EncodedDataset d = load_dataset(path.string(), s);
    EXPECT_EQ(d.n_features(), 1 + 3);
    for (const auto& n : d.feature_names) EXPECT_EQ(n.find("sex"), std::string::npos);
    // S is still populated from the raw column
    EXPECT_EQ(d.s, (std::vector<int>{0, 1, 1, 0}));
}

TEST(LoadDataset, ConstantNumericColumnMapsToZero) {
    const auto path = write_file("constant.csv",
                                 "age,job,sex,note,income\n"
                                 "50,eng,M,a,high\n"
                                 "50,doc,F,b,low\n");
    const EncodedDataset d = load_dataset(path.string(), toy_schema());
    EXPECT_EQ(d.X.col(0).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DecodeCategorical, InvertsOneHotEncoding) {
    const auto path = write_file("decode.csv", kToyCsv);
    const EncodedDataset d = load_dataset(path.string(), toy_schema());
    EXPECT_EQ(decode_categorical(d, "job"),
              (std::vector<std::string>{"eng", "doc", "eng", "art"}));
    EXPECT_EQ(decode_categorical(d, "sex"), (std::vector<std::string>{"M", "F", "F", "M"}));
    EXPECT_THROW(decode_categorical(d, "age"), SchemaError);
}

namespace {

EncodedDataset synthetic(int n, std::uint64_t seed) {
    Rng rng(seed);
    EncodedDataset d;
    d.X = Matrix(n, 3);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = uniform01(rng);
        d.X(i, 1) = uniform01(rng) * 5.0;
        d.X(i, 2) = uniform01(rng) < 0.5 ? 0.0 : 1.0;
        d.y.push_back(uniform01(rng) < 0.4);
        d.s.push_back(uniform01(rng) < 0.3);
    }
    d.feature_names = {"a", "b", "c"};
    FeatureBlock fa{"a", ColumnKind::numeric, 0, 1, {}, 0.0, 1.0};
    FeatureBlock fb{"b", ColumnKind::numeric, 1, 1, {}, 0.0, 5.0};
    FeatureBlock fc{"c", ColumnKind::categorical, 2, 1, {"x"}, 0.0, 0.0};
    d.blocks = {fa, fb, fc};
    return d;
}

}  // namespace

TEST(Split, SizesFollowSevenOneTwo) {
    const SplitDataset sp = split(synthetic(600, 1), 9);
    EXPECT_EQ(sp.train.n_rows(), 420);
    EXPECT_EQ(sp.validation.n_rows(), 60);
    EXPECT_EQ(sp.test.n_rows(), 120);
    const SplitDataset sp2 = split(synthetic(101, 2), 9);
    EXPECT_EQ(sp2.train.n_rows(), 70);
    EXPECT_EQ(sp2.validation.n_rows(), 10);
    EXPECT_EQ(sp2.test.n_rows(), 21);
    EXPECT_THROW(split(synthetic(9, 3), 1), DataError);
}

TEST(Split, PartitionIsDisjointAndComplete) {
    EncodedDataset d = synthetic(200, 4);
    // tag each row through a feature so identity survives the shuffle
    for (int i = 0; i < 200; ++i) d.X(i, 1) = i;
    d.blocks[1].kind = ColumnKind::categorical;  // keep the tag unscaled
    const SplitDataset sp = split(d, 77);
    std::multiset<int> seen;
    for (const auto* part : {&sp.train, &sp.validation, &sp.test})
        for (int i = 0; i < part->n_rows(); ++i) seen.insert(static_cast<int>(part->X(i, 1)));
    ASSERT_EQ(seen.size(), 200u);
    for (int i = 0; i < 200; ++i) EXPECT_EQ(seen.count(i), 1u);
}

TEST(Split, RowAlignmentSurvivesSubsetting) {
    EncodedDataset d = synthetic(150, 5);
    for (int i = 0; i < 150; ++i) {
        d.X(i, 1) = i;
        d.y[static_cast<std::size_t>(i)] = i % 2;
        d.s[static_cast<std::size_t>(i)] = (i / 2) % 2;
    }
    d.blocks[1].kind = ColumnKind::categorical;
    const SplitDataset sp = split(d, 31);
    for (const auto* part : {&sp.train, &sp.validation, &sp.test})
        for (int i = 0; i < part->n_rows(); ++i) {
            const int orig = static_cast<int>(part->X(i, 1));
            EXPECT_EQ(part->y[static_cast<std::size_t>(i)], orig % 2);
            EXPECT_EQ(part->s[static_cast<std::size_t>(i)], (orig / 2) % 2);
        }
}

TEST(Split, DeterministicPerSeed) {
    const EncodedDataset d = synthetic(100, 6);
    const SplitDataset a = split(d, 5);
    const SplitDataset b = split(d, 5);
    const SplitDataset c = split(d, 6);
    EXPECT_EQ((a.train.X - b.train.X).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(a.train.y, b.train.y);
    EXPECT_NE(a.train.y, c.train.y);
}

TEST(Split, RefitsNumericScalingOnTrain) {
    const EncodedDataset d = synthetic(400, 7);
    const SplitDataset sp = split(d, 11);
    for (int col : {0, 1}) {
        EXPECT_NEAR(sp.train.X.col(col).minCoeff(), 0.0, 1e-12);
        EXPECT_NEAR(sp.train.X.col(col).maxCoeff(), 1.0, 1e-12);
        EXPECT_GE(sp.validation.X.col(col).minCoeff(), 0.0);
        EXPECT_LE(sp.validation.X.col(col).maxCoeff(), 1.0);
        EXPECT_GE(sp.test.X.col(col).minCoeff(), 0.0);
        EXPECT_LE(sp.test.X.col(col).maxCoeff(), 1.0);
    }
}

TEST(EncodedCache, RoundTripsExactly) {
    const auto csv = write_file("cache_src.csv", kToyCsv);
    const EncodedDataset d = load_dataset(csv.string(), toy_schema());
    const auto path = temp_file("cache.txt");
    save_encoded(d, path.string());
    const EncodedDataset back = load_encoded(path.string());
    EXPECT_EQ(back.n_rows(), d.n_rows());
    EXPECT_EQ(back.feature_names, d.feature_names);
    EXPECT_EQ(back.dropped_rows, d.dropped_rows);
    EXPECT_EQ((back.X - d.X).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(back.y, d.y);
    EXPECT_EQ(back.s, d.s);
    ASSERT_EQ(back.blocks.size(), d.blocks.size());
    for (std::size_t i = 0; i < d.blocks.size(); ++i) {
        EXPECT_EQ(back.blocks[i].column, d.blocks[i].column);
        EXPECT_EQ(back.blocks[i].kind, d.blocks[i].kind);
        EXPECT_EQ(back.blocks[i].start, d.blocks[i].start);
        EXPECT_EQ(back.blocks[i].width, d.blocks[i].width);
        EXPECT_EQ(back.blocks[i].categories, d.blocks[i].categories);
    }
    std::filesystem::remove(path);
}

TEST(EncodedCache, RejectsForeignFiles) {
    const auto path = write_file("not_encoded.txt", "{\"format\":\"other\"}\n");
    EXPECT_THROW(load_encoded(path.string()), Error);
}
