#include "pidcast/series.hpp"

#include "pidcast/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

namespace pidcast {

using detail::trim;

const char* to_string(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::io: return "io";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::state: return "state";
        case ErrorCategory::usage: return "usage";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Timestamps. Civil-calendar arithmetic keeps epoch math exact and
// timezone-free (all timestamps are naive local instants).

namespace {

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
    y = static_cast<int>(yy + (m <= 2));
}

int parse_field(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
    long long v = 0;
    if (pos + len > s.size() || !detail::try_parse_int(s.substr(pos, len), v)) {
        throw Error(ErrorCategory::parse, "bad timestamp '" + std::string(whole) + "'");
    }
    return static_cast<int>(v);
}

} // namespace

std::int64_t parse_timestamp(std::string_view text) {
    const std::string_view s = trim(text);
    // YYYY-MM-DD[( |T)HH:MM[:SS]]
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
        throw Error(ErrorCategory::parse, "bad timestamp '" + std::string(s) + "'");
    }
    const int year = parse_field(s, 0, 4, s);
    const int month = parse_field(s, 5, 2, s);
    const int day = parse_field(s, 8, 2, s);
    int hour = 0, minute = 0, second = 0;
    if (s.size() > 10) {
        if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':') {
            throw Error(ErrorCategory::parse, "bad timestamp '" + std::string(s) + "'");
        }
        hour = parse_field(s, 11, 2, s);
        minute = parse_field(s, 14, 2, s);
        if (s.size() > 16) {
            if (s[16] != ':' || s.size() != 19) {
                throw Error(ErrorCategory::parse, "bad timestamp '" + std::string(s) + "'");
            }
            second = parse_field(s, 17, 2, s);
        }
    }
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) {
        throw Error(ErrorCategory::parse, "timestamp out of range '" + std::string(s) + "'");
    }
    return days_from_civil(year, month, day) * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_timestamp(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int y = 0, m = 0, d = 0;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                  static_cast<int>(rem % 60));
    return buf;
}

// ---------------------------------------------------------------------------
// Series

std::int64_t Series::spacing() const {
    if (timestamps.size() < 2) {
        throw Error(ErrorCategory::state, "spacing undefined for a series of length < 2");
    }
    return timestamps[1] - timestamps[0];
}

void Series::validate() const {
    if (values.empty()) {
        throw Error(ErrorCategory::validation, "series is empty");
    }
    if (values.size() != timestamps.size()) {
        throw Error(ErrorCategory::validation, "series values/timestamps size mismatch");
    }
    if (period < 2) {
        throw Error(ErrorCategory::validation, "series period must be >= 2");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCategory::validation, "series contains a non-finite value");
        }
    }
    if (timestamps.size() >= 2) {
        const std::int64_t dt = timestamps[1] - timestamps[0];
        if (dt <= 0) {
            throw Error(ErrorCategory::validation, "timestamps not strictly increasing");
        }
        for (std::size_t i = 1; i < timestamps.size(); ++i) {
            if (timestamps[i] - timestamps[i - 1] != dt) {
                throw Error(ErrorCategory::validation,
                            "uneven timestamp spacing at " + format_timestamp(timestamps[i]));
            }
        }
    }
}

void SplitSpec::validate() const {
    if (!(train > 0.0 && train < 1.0) || !(validation > 0.0 && validation < 1.0) ||
        !(test > 0.0 && test < 1.0)) {
        throw Error(ErrorCategory::validation, "split fractions must lie in (0,1)");
    }
    if (std::abs(train + validation + test - 1.0) > 1e-9) {
        throw Error(ErrorCategory::validation, "split fractions must sum to 1");
    }
}

LagWindowSpec LagWindowSpec::single(std::vector<int> lags) {
    LagWindowSpec spec;
    spec.lag_sets.push_back(std::move(lags));
    spec.validate();
    return spec;
}

LagWindowSpec LagWindowSpec::daily_default() {
    LagWindowSpec spec;
    spec.lag_sets = {{1, 2, 3, 4, 5}, {94, 95, 96, 97, 98}, {190, 191, 192, 193, 194}};
    return spec;
}

int LagWindowSpec::max_lag() const {
    int m = 0;
    for (const auto& set : lag_sets) {
        for (int lag : set) m = std::max(m, lag);
    }
    return m;
}

std::size_t LagWindowSpec::total_lags() const {
    std::size_t n = 0;
    for (const auto& set : lag_sets) n += set.size();
    return n;
}

void LagWindowSpec::validate() const {
    if (lag_sets.empty()) {
        throw Error(ErrorCategory::validation, "lag spec has no lag sets");
    }
    for (const auto& set : lag_sets) {
        if (set.empty()) {
            throw Error(ErrorCategory::validation, "lag set is empty");
        }
        std::unordered_set<int> seen;
        for (int lag : set) {
            if (lag < 1) {
                throw Error(ErrorCategory::validation, "lags must be >= 1");
            }
            if (!seen.insert(lag).second) {
                throw Error(ErrorCategory::validation,
                            "duplicate lag " + std::to_string(lag) + " within a set");
            }
        }
    }
}

LagWindowSpec parse_lag_spec(std::string_view text) {
    LagWindowSpec spec;
    for (std::string_view set_text : detail::split_on(text, ';')) {
        std::vector<int> lags;
        for (std::string_view entry : detail::split_on(set_text, ',')) {
            entry = trim(entry);
            if (entry.empty()) continue;
            const auto dash = entry.find('-');
            long long lo = 0, hi = 0;
            if (dash == std::string_view::npos) {
                if (!detail::try_parse_int(entry, lo)) {
                    throw Error(ErrorCategory::parse, "bad lag '" + std::string(entry) + "'");
                }
                hi = lo;
            } else {
                if (!detail::try_parse_int(trim(entry.substr(0, dash)), lo) ||
                    !detail::try_parse_int(trim(entry.substr(dash + 1)), hi) || hi < lo) {
                    throw Error(ErrorCategory::parse, "bad lag range '" + std::string(entry) + "'");
                }
            }
            for (long long lag = lo; lag <= hi; ++lag) lags.push_back(static_cast<int>(lag));
        }
        if (!lags.empty()) spec.lag_sets.push_back(std::move(lags));
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

struct RawRow {
    std::int64_t ts;
    double value;
    std::size_t line;
};

std::size_t find_column(const std::vector<std::string_view>& header, const std::string& name,
                        const std::filesystem::path& path) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (trim(header[i]) == name) return i;
    }
    throw Error(ErrorCategory::parse,
                "column '" + name + "' not found in header of " + path.string());
}

} // namespace

Series ingest_csv(const std::filesystem::path& path, const ColumnSpec& columns, int period,
                  const std::string& unit_label, IngestReport* report) {
    if (period < 2) {
        throw Error(ErrorCategory::validation, "period must be >= 2");
    }
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCategory::parse, "empty file " + path.string());
    }
    const auto header = detail::split_on(line, ',');
    const std::size_t ts_col = find_column(header, columns.timestamp, path);
    const std::size_t val_col = find_column(header, columns.value, path);

    std::vector<RawRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = detail::split_on(line, ',');
        if (fields.size() <= std::max(ts_col, val_col)) {
            throw Error(ErrorCategory::parse,
                        "line " + std::to_string(line_no) + ": expected at least " +
                            std::to_string(std::max(ts_col, val_col) + 1) + " fields");
        }
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(fields[ts_col]);
        } catch (const Error& e) {
            throw Error(ErrorCategory::parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
        double value = 0.0;
        if (!detail::try_parse_double(trim(fields[val_col]), value)) {
            throw Error(ErrorCategory::parse, "line " + std::to_string(line_no) +
                                                  ": cannot parse value '" +
                                                  std::string(trim(fields[val_col])) + "'");
        }
        if (!std::isfinite(value)) {
            throw Error(ErrorCategory::validation,
                        "line " + std::to_string(line_no) + ": non-finite value");
        }
        rows.push_back({ts, value, line_no});
    }
    if (rows.empty()) {
        throw Error(ErrorCategory::parse, "no data rows in " + path.string());
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const RawRow& a, const RawRow& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].ts == rows[i - 1].ts) {
            throw Error(ErrorCategory::validation,
                        "duplicate timestamp " + format_timestamp(rows[i].ts) + " (line " +
                            std::to_string(rows[i].line) + ")");
        }
    }

    Series series;
    series.period = period;
    series.unit_label = unit_label;
    if (report) {
        *report = {};
        report->rows_read = rows.size();
    }

    if (rows.size() == 1) {
        series.values.push_back(rows[0].value);
        series.timestamps.push_back(rows[0].ts);
        series.validate();
        return series;
    }

    // Base spacing = most common positive difference (smallest on ties).
    std::map<std::int64_t, std::size_t> diff_counts;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        ++diff_counts[rows[i].ts - rows[i - 1].ts];
    }
    std::int64_t dt = 0;
    std::size_t best_count = 0;
    for (const auto& [diff, count] : diff_counts) {
        if (count > best_count) {
            dt = diff;
            best_count = count;
        }
    }

    series.values.reserve(rows.size());
    series.timestamps.reserve(rows.size());
    series.values.push_back(rows[0].value);
    series.timestamps.push_back(rows[0].ts);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::int64_t gap = rows[i].ts - rows[i - 1].ts;
        if (gap == dt) {
            // fallthrough to append
        } else if (gap == 2 * dt) {
            // One missing step: fill by linear interpolation.
            const double mid = 0.5 * (rows[i - 1].value + rows[i].value);
            series.values.push_back(mid);
            series.timestamps.push_back(rows[i - 1].ts + dt);
            if (report) {
                ++report->interpolated;
                report->interpolated_at.push_back(rows[i - 1].ts + dt);
            }
        } else {
            throw Error(ErrorCategory::validation,
                        "spacing violation between " + format_timestamp(rows[i - 1].ts) + " and " +
                            format_timestamp(rows[i].ts) + " (line " + std::to_string(rows[i].line) +
                            "): gap of " + std::to_string(gap) + "s vs base spacing " +
                            std::to_string(dt) + "s");
        }
        series.values.push_back(rows[i].value);
        series.timestamps.push_back(rows[i].ts);
    }

    series.validate();
    return series;
}

void write_csv(const Series& series, const std::filesystem::path& path, const ColumnSpec& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << columns.timestamp << ',' << columns.value << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << format_timestamp(series.timestamps[i]) << ',' << detail::format_double(series.values[i])
            << '\n';
    }
    if (!out) {
        throw Error(ErrorCategory::io, "short write to " + path.string());
    }
}

// ---------------------------------------------------------------------------
// Splitting and windowing

namespace {

Series slice(const Series& series, std::size_t begin, std::size_t count) {
    Series out;
    out.period = series.period;
    out.unit_label = series.unit_label;
    out.values.assign(series.values.begin() + begin, series.values.begin() + begin + count);
    out.timestamps.assign(series.timestamps.begin() + begin,
                          series.timestamps.begin() + begin + count);
    return out;
}

} // namespace

SplitResult split(const Series& series, const SplitSpec& spec) {
    spec.validate();
    series.validate();
    const std::size_t n = series.size();
    if (n < 3 * static_cast<std::size_t>(series.period)) {
        throw Error(ErrorCategory::validation,
                    "series too short to split: " + std::to_string(n) + " < 3 * period " +
                        std::to_string(series.period));
    }
    const auto n_validation = static_cast<std::size_t>(spec.validation * static_cast<double>(n));
    const auto n_test = static_cast<std::size_t>(spec.test * static_cast<double>(n));
    const std::size_t n_train = n - n_validation - n_test; // floor remainder goes to train
    if (n_train == 0 || n_validation == 0 || n_test == 0) {
        throw Error(ErrorCategory::validation, "split produces an empty part");
    }
    return {slice(series, 0, n_train), slice(series, n_train, n_validation),
            slice(series, n_train + n_validation, n_test)};
}

Series concat(const Series& a, const Series& b) {
    if (a.period != b.period) {
        throw Error(ErrorCategory::validation, "concat: period mismatch");
    }
    Series out = a;
    out.values.insert(out.values.end(), b.values.begin(), b.values.end());
    out.timestamps.insert(out.timestamps.end(), b.timestamps.begin(), b.timestamps.end());
    out.validate();
    return out;
}

FeatureSet build_features(std::span<const double> buffer, std::size_t t, const LagWindowSpec& spec) {
    spec.validate();
    if (t > buffer.size()) {
        throw Error(ErrorCategory::validation, "feature target index beyond buffer end");
    }
    if (static_cast<std::size_t>(spec.max_lag()) > t) {
        throw Error(ErrorCategory::validation,
                    "insufficient history: max lag " + std::to_string(spec.max_lag()) +
                        " exceeds target index " + std::to_string(t));
    }
    FeatureSet features;
    features.reserve(spec.lag_sets.size());
    for (const auto& set : spec.lag_sets) {
        std::vector<double> row;
        row.reserve(set.size());
        for (int lag : set) {
            row.push_back(buffer[t - static_cast<std::size_t>(lag)]);
        }
        features.push_back(std::move(row));
    }
    return features;
}

std::uint64_t content_hash(const Series& series) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        mix(&series.timestamps[i], sizeof(series.timestamps[i]));
        mix(&series.values[i], sizeof(series.values[i]));
    }
    mix(&series.period, sizeof(series.period));
    return h;
}

} // namespace pidcast
