#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pidcast {

/// A uniformly sampled periodic time series. Immutable after ingestion;
/// safe to share read-only across threads.
struct Series {
    std::vector<double> values;
    std::vector<std::int64_t> timestamps; // epoch seconds, strictly increasing, constant spacing
    int period = 0;                       // steps per seasonal cycle, >= 2
    std::string unit_label;

    std::size_t size() const { return values.size(); }

    /// Sampling interval in seconds. Requires size >= 2.
    std::int64_t spacing() const;

    /// Throws Error{validation} when any invariant is broken: non-finite
    /// values, empty series, period < 2, or uneven timestamp spacing.
    void validate() const;
};

/// Chronological train/validation/test fractions. Must sum to 1.
struct SplitSpec {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;

    void validate() const;
};

struct SplitResult {
    Series train;
    Series validation;
    Series test;
};

/// One or more ordered sets of positive lags (steps back from the target
/// index). Feature vectors are drawn per set, in the order listed.
struct LagWindowSpec {
    std::vector<std::vector<int>> lag_sets;

    static LagWindowSpec single(std::vector<int> lags);

    /// Three five-lag windows at the most recent steps, one day back and two
    /// days back of a 96-step daily cycle: {1..5}, {94..98}, {190..194}.
    static LagWindowSpec daily_default();

    int max_lag() const;
    std::size_t total_lags() const;
    void validate() const;
};

/// Names of the timestamp and value columns in a CSV file.
struct ColumnSpec {
    std::string timestamp = "timestamp";
    std::string value = "value";
};

struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t interpolated = 0;                // single missing steps filled linearly
    std::vector<std::int64_t> interpolated_at;   // timestamps of the inserted samples
};

/// Reads a CSV file with a header row into a Series sorted by time.
/// Duplicate timestamps and gaps longer than one missing step are hard
/// errors; a single missing step is filled by linear interpolation and
/// reported. Malformed rows are reported with their line number.
Series ingest_csv(const std::filesystem::path& path, const ColumnSpec& columns, int period,
                  const std::string& unit_label = {}, IngestReport* report = nullptr);

/// Writes the same CSV dialect ingest_csv reads: header row, ISO-8601
/// timestamps, dot-decimal values with round-trip precision. Ingesting the
/// output reproduces the series bit-identically.
void write_csv(const Series& series, const std::filesystem::path& path,
               const ColumnSpec& columns = {});

/// Chronological partition: lengths are floor(fraction * N) for validation
/// and test, with the remainder assigned to train. Requires N >= 3 * period.
SplitResult split(const Series& series, const SplitSpec& spec);

/// Appends b to a; the two must be contiguous slices of the same sampling grid.
Series concat(const Series& a, const Series& b);

using FeatureSet = std::vector<std::vector<double>>;

/// Values at indices t - lag for each lag set, in the order listed.
/// Never reads at or after index t. Requires max lag <= t <= buffer size.
FeatureSet build_features(std::span<const double> buffer, std::size_t t,
                          const LagWindowSpec& spec);

/// ISO-8601 timestamp ("YYYY-MM-DD HH:MM:SS", 'T' separator also accepted,
/// seconds and time-of-day optional) to epoch seconds.
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t epoch_seconds);

/// Lag-set grammar: sets separated by ';', entries by ',', 'a-b' is an
/// inclusive range. Example: "1-5;94-98;190-194".
LagWindowSpec parse_lag_spec(std::string_view text);

/// FNV-1a content hash over timestamps and value bits, for report provenance.
std::uint64_t content_hash(const Series& series);

} // namespace pidcast
