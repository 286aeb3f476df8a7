#include "pidcast/tuner.hpp"

#include "pidcast/errors.hpp"
#include "pidcast/eval.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace pidcast {

std::vector<double> GridSpec::candidates(double upper_bound) const {
    validate();
    std::vector<double> out;
    const double hi = std::min(max, upper_bound);
    if (hi < start) return out;
    for (int j = 0;; ++j) {
        double c = start + static_cast<double>(j) * step;
        if (c > hi + 0.5 * step) break;
        if (c > hi) c = hi; // snap fp overshoot to the bound
        out.push_back(c);
        if (c == hi) break;
    }
    return out;
}

void GridSpec::validate() const {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(max)) {
        throw Error(ErrorCategory::validation, "grid step must be positive and bounds finite");
    }
    if (start < 0.0 || max > 1.0 || start > max) {
        throw Error(ErrorCategory::validation, "grid must lie within [0, 1] with start <= max");
    }
}

const char* to_string(Objective objective) {
    return objective == Objective::mae ? "mae" : "mape";
}

Objective parse_objective(std::string_view text) {
    if (text == "mae") return Objective::mae;
    if (text == "mape") return Objective::mape;
    throw Error(ErrorCategory::usage, "unknown objective '" + std::string(text) + "'");
}

void TuneSpec::validate() const {
    kp.validate();
    ki.validate();
    kd.validate();
    if (early_stop < 1) {
        throw Error(ErrorCategory::validation, "early_stop must be >= 1");
    }
    if (horizon < 0 || validation_rounds < 0) {
        throw Error(ErrorCategory::validation, "horizon and validation_rounds must be >= 0");
    }
}

namespace {

// NaN-safe comparison key: non-finite objectives always lose.
double order_key(double objective) {
    return std::isfinite(objective) ? objective : std::numeric_limits<double>::infinity();
}

bool gains_less(const PidGains& a, const PidGains& b) {
    if (a.kp != b.kp) return a.kp < b.kp;
    if (a.ki != b.ki) return a.ki < b.ki;
    return a.kd < b.kd;
}

bool entry_less(const TraceEntry& a, const TraceEntry& b) {
    const double ka = order_key(a.objective);
    const double kb = order_key(b.objective);
    if (ka != kb) return ka < kb;
    return gains_less(a.gains, b.gains);
}

} // namespace

TuneResult tune(const BaseForecaster& base, const Series& history, const Series& validation,
                const TuneSpec& spec) {
    spec.validate();
    validation.validate();
    const int T = validation.period;
    const int horizon = spec.horizon > 0 ? spec.horizon : T;
    const auto available =
        (validation.size() - static_cast<std::size_t>(T)) / static_cast<std::size_t>(horizon);
    if (validation.size() < static_cast<std::size_t>(T) + static_cast<std::size_t>(horizon) ||
        available == 0) {
        throw Error(ErrorCategory::validation,
                    "validation split must hold one warmup round plus at least one scored round");
    }
    std::size_t rounds = available;
    if (spec.validation_rounds > 0) {
        rounds = std::min(rounds, static_cast<std::size_t>(spec.validation_rounds));
    }
    // Trim the walked slice so every candidate sees identical data.
    Series slice = validation;
    const std::size_t used =
        static_cast<std::size_t>(T) + rounds * static_cast<std::size_t>(horizon);
    slice.values.resize(used);
    slice.timestamps.resize(used);

    SessionConfig session_config;
    session_config.horizon = horizon;
    session_config.init = InitStrategy::warmup;
    session_config.booster = spec.booster;

    TuneResult result;
    auto evaluate = [&](PidGains gains) -> double {
        const ForecastRun run = run_backtest(base, history, slice, gains, session_config);
        const Metrics metrics = compute_metrics(run);
        double objective = 0.0;
        if (spec.objective == Objective::mae) {
            objective = metrics.mae;
        } else {
            if (!metrics.mape.has_value()) {
                throw Error(ErrorCategory::numeric, "MAPE undefined on validation data");
            }
            objective = *metrics.mape;
        }
        result.trace.push_back({gains, objective, 0});
        return order_key(objective);
    };

    // Zero-gain guard: the tuner can never return worse than no correction.
    double incumbent = evaluate({0.0, 0.0, 0.0});
    PidGains selected{0.0, 0.0, 0.0};

    for (double kp : spec.kp.candidates(1.0)) {
        const double objective = evaluate({kp, 0.0, 0.0});
        if (objective < incumbent) {
            incumbent = objective;
            selected = {kp, 0.0, 0.0};
        }
    }

    auto sweep_coordinate = [&](const GridSpec& grid, bool is_ki) {
        const double bound = spec.enforce_gain_constraint
                                 ? std::min(grid.max, selected.kp)
                                 : grid.max;
        int stale = 0;
        for (double c : grid.candidates(bound)) {
            if (spec.enforce_gain_constraint && c >= selected.kp) break;
            PidGains gains = selected;
            (is_ki ? gains.ki : gains.kd) = c;
            const double objective = evaluate(gains);
            if (objective < incumbent) {
                incumbent = objective;
                selected = gains;
                stale = 0;
            } else if (++stale >= spec.early_stop) {
                break;
            }
        }
    };

    if (selected.kp > 0.0 || !spec.enforce_gain_constraint) {
        if (spec.sweep_ki) sweep_coordinate(spec.ki, true);
        if (spec.sweep_kd) sweep_coordinate(spec.kd, false);
    }

    if (!std::isfinite(incumbent)) {
        throw Error(ErrorCategory::numeric,
                    "every gain candidate produced a non-finite objective");
    }

    // Rank the trace; the best entry is the trace minimum with lexicographic
    // tie-breaking, which the staged selection above already guarantees.
    std::vector<std::size_t> order(result.trace.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return entry_less(result.trace[a], result.trace[b]);
    });
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        result.trace[order[rank]].rank = static_cast<int>(rank + 1);
    }
    const TraceEntry& best = result.trace[order.front()];
    result.best = best.gains;
    result.best_objective = best.objective;
    result.evaluations = result.trace.size();
    return result;
}

void write_trace_csv(const TuneResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << "kp,ki,kd,objective,rank\n";
    for (const TraceEntry& entry : result.trace) {
        out << detail::format_double(entry.gains.kp) << ',' << detail::format_double(entry.gains.ki)
            << ',' << detail::format_double(entry.gains.kd) << ','
            << detail::format_double(entry.objective) << ',' << entry.rank << '\n';
    }
}

} // namespace pidcast
