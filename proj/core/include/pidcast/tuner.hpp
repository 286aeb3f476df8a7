#pragma once

#include "pidcast/engine.hpp"

#include <filesystem>
#include <vector>

namespace pidcast {

/// Inclusive arithmetic grid: start, start + step, ... while <= max.
struct GridSpec {
    double start = 0.0;
    double step = 0.0;
    double max = 0.0;

    std::vector<double> candidates(double upper_bound) const;
    void validate() const;
};

enum class Objective { mae, mape };

const char* to_string(Objective objective);
Objective parse_objective(std::string_view text);

struct TuneSpec {
    GridSpec kp{0.1, 0.1, 1.0};
    GridSpec ki{0.0001, 0.0001, 1.0}; // additionally bounded by the selected kp
    GridSpec kd{0.0001, 0.0001, 1.0};
    bool sweep_ki = true; // false pins ki = 0
    bool sweep_kd = true; // false pins kd = 0
    Objective objective = Objective::mae;
    int horizon = 0;           // 0 means the series period
    int validation_rounds = 0; // scored rounds per candidate; 0 means all that fit
    bool enforce_gain_constraint = true;
    int early_stop = 50;       // consecutive non-improving ki/kd candidates before stopping
    BoosterOptions booster;

    void validate() const;
};

struct TraceEntry {
    PidGains gains;
    double objective = 0.0;
    int rank = 0; // 1 = best
};

struct TuneResult {
    PidGains best;
    double best_objective = 0.0;
    std::vector<TraceEntry> trace; // in evaluation order
    std::size_t evaluations = 0;
};

/// Coordinate grid search: kp swept first with ki = kd = 0, then ki with the
/// best kp, then kd with the best (kp, ki). Every candidate is scored by a
/// full boosted run over the validation rounds with warmup initialization.
/// The zero-gain candidate is always evaluated first, so the returned gains
/// are never worse than no correction. Ties break toward the smallest
/// (kp, ki, kd) lexicographically. Deterministic given identical inputs.
TuneResult tune(const BaseForecaster& base, const Series& history, const Series& validation,
                const TuneSpec& spec);

/// Trace as CSV: kp,ki,kd,objective,rank, in evaluation order.
void write_trace_csv(const TuneResult& result, const std::filesystem::path& path);

} // namespace pidcast
