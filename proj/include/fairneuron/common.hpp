#pragma once

// Shared aliases, error types, and deterministic RNG helpers.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairneuron {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values (bad ranges, malformed grids, bad CLI input).
struct ConfigError : Error {
    using Error::Error;
};

/// Input/weight dimensions that do not match the network layout.
struct ShapeError : Error {
    using Error::Error;
};

/// Schema violations: unknown columns, missing label/sensitive declarations.
struct SchemaError : Error {
    using Error::Error;
};

/// Row-level CSV failure; `line` is the 1-based line number in the file.
struct CsvParseError : Error {
    CsvParseError(const std::string& msg, std::size_t line_number)
        : Error(msg + " (line " + std::to_string(line_number) + ")"), line(line_number) {}
    std::size_t line;
};

/// Dataset-content failures: too few rows, degenerate (S,Y) cells.
struct DataError : Error {
    using Error::Error;
};

/// Model file could not be parsed; `byte_offset` points at the failure.
struct ModelParseError : Error {
    ModelParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::size_t byte_offset;
};

/// Model file has an unsupported format version.
struct ModelVersionError : Error {
    ModelVersionError(int found_version, int expected_version)
        : Error("unsupported model format version " + std::to_string(found_version) +
                ", expected " + std::to_string(expected_version)),
          found(found_version),
          expected(expected_version) {}
    int found;
    int expected;
};

/// Training produced a non-finite loss; `epoch` is the 0-based epoch index.
struct TrainingDivergedError : Error {
    explicit TrainingDivergedError(int epoch_index)
        : Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch_index)),
          epoch(epoch_index) {}
    int epoch;
};

/// A fairness metric is undefined because a group (or its positives) is empty.
struct UndefinedGroupError : Error {
    UndefinedGroupError(const std::string& metric_name, const std::string& msg)
        : Error(metric_name + ": " + msg), metric(metric_name) {}
    std::string metric;
};

/// Every tuning trial failed; carries the per-trial failure messages.
struct TuningError : Error {
    TuningError(const std::string& msg, std::vector<std::string> trial_failures)
        : Error(msg), failures(std::move(trial_failures)) {}
    std::vector<std::string> failures;
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased uniform integer in [0, n). n must be > 0.
inline std::uint64_t bounded_uint(Rng& rng, std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % n;
    }
}

/// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<int> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<int> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded_uint(rng, i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

/// FNV-1a over a byte view; used for cheap content checksums in reports.
inline std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

}  // namespace fairneuron
