// Round-prediction timings: the booster's per-step arithmetic against the
// plain iterative walk, and the control computation itself.

#include "pidcast/engine.hpp"
#include "pidcast/forecasters.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

namespace {

using namespace pidcast;

Series daily_series(int period, int cycles) {
    std::vector<double> cycle(static_cast<std::size_t>(period));
    for (int k = 0; k < period; ++k) {
        cycle[static_cast<std::size_t>(k)] =
            80.0 + 25.0 * std::sin(2.0 * std::numbers::pi * k / period);
    }
    Series s;
    s.period = period;
    for (int c = 0; c < cycles; ++c) {
        for (double v : cycle) {
            s.values.push_back(v);
            s.timestamps.push_back(900 * static_cast<std::int64_t>(s.values.size()));
        }
    }
    return s;
}

LinearAR fitted_linear_ar(const Series& history) {
    LinearAR model(LagWindowSpec::daily_default());
    model.fit(history);
    return model;
}

void BM_PredictRound_SeasonalNaive_Plain(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    const Series history = daily_series(T, 3);
    SeasonalNaive model(T);
    Series eval = daily_series(T, 1);
    for (auto _ : state) {
        const ForecastRun run = run_iterative_backtest(model, history, eval, T);
        benchmark::DoNotOptimize(run.records.back().p);
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_PredictRound_SeasonalNaive_Plain)->Arg(24)->Arg(96);

void BM_PredictRound_SeasonalNaive_Boosted(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    const Series history = daily_series(T, 3);
    SeasonalNaive model(T);
    for (auto _ : state) {
        ForecastSession session(model, history, {0.4, 0.01, 0.001}, {});
        benchmark::DoNotOptimize(session.predict_round().back());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_PredictRound_SeasonalNaive_Boosted)->Arg(24)->Arg(96);

void BM_PredictRound_LinearAR_Boosted(benchmark::State& state) {
    const int T = 96;
    const Series history = daily_series(T, 4);
    const LinearAR model = fitted_linear_ar(history);
    for (auto _ : state) {
        ForecastSession session(model, history, {0.4, 0.01, 0.001}, {});
        benchmark::DoNotOptimize(session.predict_round().back());
    }
    state.SetItemsProcessed(state.iterations() * T);
}
BENCHMARK(BM_PredictRound_LinearAR_Boosted);

void BM_ComputeControl(benchmark::State& state) {
    const int T = 96;
    PidBooster booster({0.4, 0.01, 0.001}, T);
    std::vector<double> errors(static_cast<std::size_t>(T));
    for (int k = 0; k < T; ++k) errors[static_cast<std::size_t>(k)] = std::sin(0.1 * k);
    booster.seed_errors(errors, 1);
    int k = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(booster.compute_control(k));
        if (++k == T) {
            state.PauseTiming();
            booster.seed_errors(errors, booster.round_index() + 1);
            state.ResumeTiming();
            k = 0;
        }
    }
}
BENCHMARK(BM_ComputeControl);

} // namespace

BENCHMARK_MAIN();
