#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidcast/errors.hpp"
#include "pidcast/eval.hpp"
#include "pidcast/tuner.hpp"
#include "support/synthetic.hpp"

#include <filesystem>
#include <fstream>

using namespace pidcast;
using pidcast::testing::BiasedSeasonal;

namespace {

struct Fixture {
    int period;
    Series history;
    Series validation;
};

Fixture biased_fixture(int period, int validation_rounds) {
    const Series data = testing::periodic_series(period, validation_rounds + 3);
    Fixture f{period, {}, {}};
    f.history = testing::make_series(
        std::vector<double>(data.values.begin(), data.values.begin() + 2 * period), period);
    f.validation.period = period;
    f.validation.values.assign(data.values.begin() + 2 * period, data.values.end());
    f.validation.timestamps.assign(data.timestamps.begin() + 2 * period, data.timestamps.end());
    return f;
}

} // namespace

TEST_CASE("grid candidate enumeration stays within bounds") {
    const GridSpec grid{0.1, 0.1, 1.0};
    const auto c = grid.candidates(1.0);
    REQUIRE(c.size() == 10);
    CHECK(c.front() == 0.1);
    CHECK(c.back() == 1.0);
    for (double v : c) CHECK(v <= 1.0);

    const GridSpec fine{0.0001, 0.0001, 1.0};
    const auto bounded = fine.candidates(0.0005);
    CHECK(bounded.size() == 5);

    CHECK(fine.candidates(0.00005).empty());
    CHECK_THROWS_AS(static_cast<void>(GridSpec{0.1, 0.0, 1.0}.validate()), Error);
    CHECK_THROWS_AS(static_cast<void>(GridSpec{0.1, 0.1, 1.5}.validate()), Error);
}

TEST_CASE("degenerate single-candidate grids pin the result") {
    const auto f = biased_fixture(6, 8);
    BiasedSeasonal base(f.period, 2.0);

    TuneSpec spec;
    spec.kp = {0.4, 0.1, 0.4};
    spec.ki = {0.01, 0.01, 0.01};
    spec.kd = {0.001, 0.001, 0.001};
    const TuneResult result = tune(base, f.history, f.validation, spec);

    CHECK(result.best.kp == 0.4);
    CHECK(result.best.ki == 0.01);
    CHECK(result.best.kd == 0.001);
    CHECK(result.trace.size() == 4); // guard + one candidate per coordinate
    CHECK(result.evaluations == 4);
}

TEST_CASE("exact base predictor: all candidates tie at zero, smallest gains win") {
    const auto f = biased_fixture(6, 6);
    BiasedSeasonal base(f.period, 0.0);

    TuneSpec spec;
    spec.kp = {0.1, 0.1, 0.5};
    spec.sweep_ki = false;
    spec.sweep_kd = false;
    const TuneResult result = tune(base, f.history, f.validation, spec);

    CHECK(result.best.kp == 0.0);
    CHECK(result.best.ki == 0.0);
    CHECK(result.best.kd == 0.0);
    CHECK(result.best_objective == 0.0);
    for (const auto& entry : result.trace) CHECK(entry.objective == 0.0);
    CHECK(result.trace.front().rank == 1); // zero-gain guard is the lexicographic minimum
}

TEST_CASE("constant bias: proportional argmin sits at the top of the grid") {
    const auto f = biased_fixture(8, 12);
    BiasedSeasonal base(f.period, 2.0);

    TuneSpec spec;
    spec.kp = {0.1, 0.1, 1.0};
    spec.sweep_ki = false;
    spec.sweep_kd = false;
    const TuneResult result = tune(base, f.history, f.validation, spec);

    CHECK(result.best.kp == doctest::Approx(1.0));
    CHECK(result.best.ki == 0.0);
    CHECK(result.best.kd == 0.0);
    CHECK(result.trace.size() == 11); // guard + 10 kp candidates

    // The trace objective decreases with kp, tracking the b/(1+kp) fixed point.
    for (std::size_t i = 2; i < result.trace.size(); ++i) {
        CHECK(result.trace[i].objective < result.trace[i - 1].objective);
    }
}

TEST_CASE("returned gains are never worse than the zero-gain guard") {
    const auto f = biased_fixture(6, 10);
    BiasedSeasonal base(f.period, -1.5);

    TuneSpec spec;
    spec.kp = {0.1, 0.1, 1.0};
    spec.ki = {0.0001, 0.0001, 0.01};
    spec.kd = {0.0001, 0.0001, 0.01};
    const TuneResult result = tune(base, f.history, f.validation, spec);

    const TraceEntry& guard = result.trace.front();
    CHECK(guard.gains.kp == 0.0);
    CHECK(result.best_objective <= guard.objective);

    // Best gains achieve the trace minimum.
    for (const auto& entry : result.trace) {
        CHECK(result.best_objective <= entry.objective);
    }
}

TEST_CASE("ki sweep stops after exactly early_stop consecutive non-improving candidates") {
    const auto f = biased_fixture(6, 6);
    BiasedSeasonal base(f.period, 0.0); // exact base: every candidate ties at zero

    TuneSpec spec;
    spec.kp = {0.5, 0.1, 0.5};
    spec.ki = {0.0001, 0.0001, 0.4999}; // ~5000 candidates without early stopping
    spec.sweep_kd = false;
    spec.enforce_gain_constraint = false;
    spec.early_stop = 25;
    const TuneResult result = tune(base, f.history, f.validation, spec);

    CHECK(result.trace.size() == 1 + 1 + 25); // guard, kp candidate, 25 stale ki candidates
    CHECK(result.evaluations == result.trace.size());
    CHECK(result.best.kp == 0.0); // ties resolve to the smallest gains
    CHECK(result.best.ki == 0.0);
}

TEST_CASE("tuning is deterministic and the trace serializes byte-identically") {
    const auto f = biased_fixture(6, 8);
    BiasedSeasonal base(f.period, 1.0);

    TuneSpec spec;
    spec.kp = {0.1, 0.1, 1.0};
    spec.ki = {0.001, 0.001, 0.01};
    spec.kd = {0.001, 0.001, 0.01};
    const TuneResult a = tune(base, f.history, f.validation, spec);
    const TuneResult b = tune(base, f.history, f.validation, spec);

    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].objective == b.trace[i].objective);
        CHECK(a.trace[i].gains.kp == b.trace[i].gains.kp);
        CHECK(a.trace[i].rank == b.trace[i].rank);
    }

    const auto dir = std::filesystem::temp_directory_path() / "pidcast_tuner_tests";
    std::filesystem::create_directories(dir);
    write_trace_csv(a, dir / "trace_a.csv");
    write_trace_csv(b, dir / "trace_b.csv");
    std::ifstream fa(dir / "trace_a.csv"), fb(dir / "trace_b.csv");
    const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(sa.substr(0, 24) == "kp,ki,kd,objective,rank\n");
}

TEST_CASE("validation shorter than warmup plus one round is an error") {
    const auto f = biased_fixture(6, 6);
    BiasedSeasonal base(f.period, 1.0);
    Series tiny = f.validation;
    tiny.values.resize(8); // < T + horizon = 12
    tiny.timestamps.resize(8);
    TuneSpec spec;
    CHECK_THROWS_AS(static_cast<void>(tune(base, f.history, tiny, spec)), Error);
}

TEST_CASE("mape objective tunes on percentage error") {
    const auto f = biased_fixture(6, 8);
    BiasedSeasonal base(f.period, 2.0);

    TuneSpec spec;
    spec.kp = {0.5, 0.5, 1.0};
    spec.sweep_ki = false;
    spec.sweep_kd = false;
    spec.objective = Objective::mape;
    const TuneResult result = tune(base, f.history, f.validation, spec);
    CHECK(result.best.kp == doctest::Approx(1.0));
    CHECK(result.best_objective > 0.0);
    CHECK(result.best_objective < 100.0);
}
