#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidcast/errors.hpp"
#include "pidcast/series.hpp"
#include "support/synthetic.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace pidcast;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "pidcast_series_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("timestamp parsing round-trips and accepts both separators") {
    const auto ts = parse_timestamp("2004-12-31 01:00:00");
    CHECK(format_timestamp(ts) == "2004-12-31 01:00:00");
    CHECK(parse_timestamp("2004-12-31T01:00:00") == ts);
    CHECK(parse_timestamp("2004-12-31 01:00") == ts);
    CHECK(parse_timestamp("2004-12-31") == ts - 3600);
    CHECK_THROWS_AS(parse_timestamp("31/12/2004"), Error);
    CHECK_THROWS_AS(parse_timestamp("2004-13-01 00:00:00"), Error);
}

TEST_CASE("ingest: minimal well-formed file") {
    const auto path = temp_dir() / "minimal.csv";
    write_file(path,
               "timestamp,value\n"
               "2016-01-01 00:00:00,10.5\n"
               "2016-01-01 00:15:00,11.5\n"
               "2016-01-01 00:30:00,12.5\n"
               "2016-01-01 00:45:00,13.5\n");
    const Series s = ingest_csv(path, {}, 96);
    CHECK(s.size() == 4);
    CHECK(s.period == 96);
    CHECK(s.spacing() == 900);
    CHECK(s.values[2] == 12.5);
}

TEST_CASE("ingest: duplicate timestamp names the offending line") {
    const auto path = temp_dir() / "dup.csv";
    write_file(path,
               "timestamp,value\n"
               "2016-01-01 00:00:00,1\n"
               "2016-01-01 00:15:00,2\n"
               "2016-01-01 00:15:00,3\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(ingest_csv(path, {}, 96)),
                         doctest::Contains("line 4"), Error);
}

TEST_CASE("ingest: one missing step is interpolated, longer gaps are errors") {
    const auto path = temp_dir() / "gap1.csv";
    write_file(path,
               "timestamp,value\n"
               "2016-01-01 00:00:00,10\n"
               "2016-01-01 01:00:00,20\n"
               "2016-01-01 03:00:00,40\n"
               "2016-01-01 04:00:00,50\n");
    IngestReport report;
    const Series s = ingest_csv(path, {}, 24, "", &report);
    CHECK(s.size() == 5);
    CHECK(report.interpolated == 1);
    CHECK(s.values[2] == 30.0); // midpoint of 20 and 40

    const auto path2 = temp_dir() / "gap2.csv";
    write_file(path2,
               "timestamp,value\n"
               "2016-01-01 00:00:00,10\n"
               "2016-01-01 01:00:00,20\n"
               "2016-01-01 04:00:00,50\n"
               "2016-01-01 05:00:00,60\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(ingest_csv(path2, {}, 24)),
                         doctest::Contains("spacing violation"), Error);
}

TEST_CASE("ingest: malformed and non-finite values carry line numbers") {
    const auto path = temp_dir() / "bad_value.csv";
    write_file(path,
               "timestamp,value\n"
               "2016-01-01 00:00:00,1.0\n"
               "2016-01-01 01:00:00,oops\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(ingest_csv(path, {}, 24)),
                         doctest::Contains("line 3"), Error);

    const auto path2 = temp_dir() / "nan_value.csv";
    write_file(path2,
               "timestamp,value\n"
               "2016-01-01 00:00:00,nan\n");
    CHECK_THROWS_AS(static_cast<void>(ingest_csv(path2, {}, 24)), Error);
}

TEST_CASE("ingest: configurable column names, extra columns ignored, rows sorted") {
    const auto path = temp_dir() / "cols.csv";
    write_file(path,
               "Datetime,DAYTON_MW,junk\n"
               "2016-01-01 02:00:00,3.0,x\n"
               "2016-01-01 00:00:00,1.0,y\n"
               "2016-01-01 01:00:00,2.0,z\n");
    const Series s = ingest_csv(path, {"Datetime", "DAYTON_MW"}, 24);
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("ingest: DAYTON-scale hourly file") {
    const auto path = temp_dir() / "dayton_scale.csv";
    {
        std::ofstream out(path, std::ios::binary);
        out << "timestamp,value\n";
        std::int64_t ts = parse_timestamp("2004-10-01 01:00:00");
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> dist(982.0, 3764.0);
        for (int i = 0; i < 121250; ++i) {
            out << format_timestamp(ts) << ',' << dist(rng) << '\n';
            ts += 3600;
        }
    }
    const Series s = ingest_csv(path, {}, 24);
    CHECK(s.size() == 121250);
    CHECK(s.period == 24);
}

TEST_CASE("ingest/serialize/ingest is idempotent bit-for-bit") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(30.0, 157.0);
    std::vector<double> values(500);
    for (auto& v : values) v = dist(rng);
    const Series original = testing::make_series(values, 96, parse_timestamp("2016-03-01 00:00:00"), 900);

    const auto path = temp_dir() / "roundtrip.csv";
    write_csv(original, path);
    const Series again = ingest_csv(path, {}, 96);
    REQUIRE(again.size() == original.size());
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(std::memcmp(&again.values[i], &original.values[i], sizeof(double)) == 0);
        CHECK(again.timestamps[i] == original.timestamps[i]);
    }

    const auto path2 = temp_dir() / "roundtrip2.csv";
    write_csv(again, path2);
    std::ifstream a(path), b(path2);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("split: floor rule with remainder to train") {
    SUBCASE("exact division") {
        const Series s = testing::periodic_series(10, 100); // N = 1000
        const auto parts = split(s, {0.8, 0.1, 0.1});
        CHECK(parts.train.size() == 800);
        CHECK(parts.validation.size() == 100);
        CHECK(parts.test.size() == 100);
    }
    SUBCASE("remainder assigned to train") {
        Series s = testing::periodic_series(10, 101);
        s.values.resize(1003);
        s.timestamps.resize(1003);
        const auto parts = split(s, {0.8, 0.1, 0.1});
        CHECK(parts.train.size() == 803);
        CHECK(parts.validation.size() == 100);
        CHECK(parts.test.size() == 100);
    }
    SUBCASE("shorter than three cycles is an error") {
        Series s = testing::periodic_series(10, 3);
        s.values.resize(25);
        s.timestamps.resize(25);
        CHECK_THROWS_AS(static_cast<void>(split(s, {0.8, 0.1, 0.1})), Error);
    }
}

TEST_CASE("split is a partition: concatenation reproduces the original") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> len_dist(30, 400);
        std::vector<double> values(static_cast<std::size_t>(len_dist(rng)));
        for (auto& v : values) v = dist(rng);
        const Series s = testing::make_series(values, 10);
        const auto parts = split(s, {0.7, 0.15, 0.15});
        const Series joined = concat(concat(parts.train, parts.validation), parts.test);
        REQUIRE(joined.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(joined.values[i] == s.values[i]);
            CHECK(joined.timestamps[i] == s.timestamps[i]);
        }
    }
}

TEST_CASE("split spec validation") {
    const Series s = testing::periodic_series(10, 10);
    CHECK_THROWS_AS(static_cast<void>(split(s, {0.8, 0.1, 0.2})), Error);  // sums to 1.1
    CHECK_THROWS_AS(static_cast<void>(split(s, {1.0, 0.0, 0.0})), Error);  // zero fractions
}

TEST_CASE("build_features: direct indexing") {
    const std::vector<double> buffer = {10, 20, 30, 40, 50};
    SUBCASE("lags {1,2}") {
        const auto f = build_features(buffer, 5, LagWindowSpec::single({1, 2}));
        CHECK(f == FeatureSet{{50, 40}});
    }
    SUBCASE("lags {1..5}") {
        const auto f = build_features(buffer, 5, LagWindowSpec::single({1, 2, 3, 4, 5}));
        CHECK(f == FeatureSet{{50, 40, 30, 20, 10}});
    }
    SUBCASE("insufficient history") {
        CHECK_THROWS_AS(static_cast<void>(build_features(buffer, 3, LagWindowSpec::single({4}))),
                        Error);
    }
}

TEST_CASE("build_features: default three-window spec") {
    std::vector<double> buffer(250);
    for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = static_cast<double>(i);
    const auto f = build_features(buffer, 200, LagWindowSpec::daily_default());
    REQUIRE(f.size() == 3);
    CHECK(f[0] == std::vector<double>{199, 198, 197, 196, 195});
    CHECK(f[1] == std::vector<double>{106, 105, 104, 103, 102});
    CHECK(f[2] == std::vector<double>{10, 9, 8, 7, 6});
}

TEST_CASE("build_features never reads at or after the target index") {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> lag_dist(1, 30);
    std::uniform_real_distribution<double> val_dist(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> buffer(80);
        std::uniform_int_distribution<std::size_t> t_dist(30, buffer.size());
        const std::size_t t = t_dist(rng);
        for (std::size_t i = 0; i < buffer.size(); ++i) {
            // Poison at and after t: any read there would surface as NaN.
            buffer[i] = i < t ? val_dist(rng) : std::numeric_limits<double>::quiet_NaN();
        }
        std::vector<int> lags;
        for (int j = 0; j < 6; ++j) lags.push_back(lag_dist(rng));
        std::sort(lags.begin(), lags.end());
        lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
        const auto f = build_features(buffer, t, LagWindowSpec::single(lags));
        for (const auto& row : f) {
            for (double v : row) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("lag spec parsing and validation") {
    const auto spec = parse_lag_spec("1-5;94-98;190-194");
    CHECK(spec.lag_sets == LagWindowSpec::daily_default().lag_sets);
    CHECK(parse_lag_spec("1,2,3").lag_sets == std::vector<std::vector<int>>{{1, 2, 3}});
    CHECK(parse_lag_spec("1-5,23-25").lag_sets ==
          std::vector<std::vector<int>>{{1, 2, 3, 4, 5, 23, 24, 25}});
    CHECK_THROWS_AS(static_cast<void>(parse_lag_spec("0-3")), Error);   // lags must be >= 1
    CHECK_THROWS_AS(static_cast<void>(parse_lag_spec("1,1")), Error);   // duplicates
    CHECK_THROWS_AS(static_cast<void>(parse_lag_spec("")), Error);
}

TEST_CASE("series validation rejects broken invariants") {
    Series s = testing::periodic_series(10, 3);
    SUBCASE("period too small") {
        s.period = 1;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("uneven spacing") {
        s.timestamps.back() += 7;
        CHECK_THROWS_AS(s.validate(), Error);
    }
    SUBCASE("non-finite value") {
        s.values[4] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(s.validate(), Error);
    }
}
