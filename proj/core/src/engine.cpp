#include "pidcast/engine.hpp"

#include "pidcast/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pidcast {

std::size_t ForecastRun::scored_steps() const {
    std::size_t n = 0;
    for (std::size_t i = warmup_steps; i < records.size(); ++i) {
        if (records[i].rv.has_value()) ++n;
    }
    return n;
}

namespace {

PidBooster make_booster(const BaseForecaster& base, const Series& history, PidGains gains,
                        const SessionConfig& config) {
    gains.validate(config.booster.enforce_gain_constraint);
    history.validate();
    if (!base.fitted()) {
        throw Error(ErrorCategory::state, "base forecaster is not fitted");
    }
    PidBooster booster(gains, history.period, config.booster.round_start);
    switch (config.init) {
        case InitStrategy::zero:
            booster.initialize_zero();
            break;
        case InitStrategy::train_mae:
            if (!config.train_mae.has_value()) {
                throw Error(ErrorCategory::validation,
                            "train_mae initialization requires a training MAE value");
            }
            booster.initialize_train_mae(*config.train_mae);
            break;
        case InitStrategy::warmup:
            break; // seeded by run_warmup
    }
    return booster;
}

} // namespace

ForecastSession::ForecastSession(const BaseForecaster& base, const Series& history, PidGains gains,
                                 SessionConfig config)
    : base_(base), buffer_(history.values), period_(history.period),
      horizon_(config.horizon > 0 ? config.horizon : history.period),
      booster_(make_booster(base, history, gains, config)),
      awaiting_warmup_(config.init == InitStrategy::warmup) {
    run_.period = period_;
    run_.horizon = horizon_;
    run_.gains = gains;
    run_.init = config.init;
    run_.round_start = config.booster.round_start;
    if (booster_.initialized()) {
        run_.seed_errors = booster_.prev_round_errors();
    }
}

ForecastSession::ForecastSession(const BaseForecaster& base, const Series& history,
                                 PidBooster booster, int horizon, bool)
    : base_(base), buffer_(history.values), period_(history.period),
      horizon_(horizon > 0 ? horizon : history.period), booster_(std::move(booster)) {
    history.validate();
    if (booster_.period() != period_) {
        throw Error(ErrorCategory::validation, "booster period does not match series period");
    }
    run_.period = period_;
    run_.horizon = horizon_;
    run_.gains = booster_.gains();
    run_.init = InitStrategy::warmup; // resumed runs carry no seed vector
    run_.round_start = booster_.round_start_convention();
}

ForecastSession ForecastSession::resume(const BaseForecaster& base, const Series& history,
                                        PidBooster booster, int horizon) {
    if (!booster.initialized()) {
        throw Error(ErrorCategory::state, "cannot resume from an uninitialized booster");
    }
    return ForecastSession(base, history, std::move(booster), horizon, true);
}

void ForecastSession::run_warmup(std::span<const double> real_values) {
    if (!awaiting_warmup_) {
        throw Error(ErrorCategory::state, "session is not awaiting warmup");
    }
    if (real_values.size() != static_cast<std::size_t>(period_)) {
        throw Error(ErrorCategory::validation,
                    "warmup needs exactly one period (" + std::to_string(period_) + ") of reals");
    }
    WarmupCorrector warmup(booster_.gains());
    const std::size_t start = buffer_.size();
    for (int k = 0; k < period_; ++k) {
        const auto features = build_features(buffer_, buffer_.size(), base_.lag_spec());
        const double pv = base_.predict_one(features);
        const double u = warmup.control();
        const double p = pv + u;
        buffer_.push_back(p);
        const double rv = real_values[static_cast<std::size_t>(k)];
        const double e = p - rv;
        warmup.record_error(e);
        StepRecord record;
        record.t = next_t_++;
        record.pv = pv;
        record.u = u;
        record.p = p;
        record.rv = rv;
        record.e = e;
        run_.records.push_back(record);
    }
    // Ground truth replaces the warmup predictions for future feature windows.
    std::copy(real_values.begin(), real_values.end(), buffer_.begin() + static_cast<std::ptrdiff_t>(start));
    booster_.seed_errors(warmup.errors(), 1, 0.0);
    run_.warmup_steps = static_cast<std::size_t>(period_);
    awaiting_warmup_ = false;
}

std::vector<double> ForecastSession::predict_round() {
    if (awaiting_warmup_) {
        throw Error(ErrorCategory::state, "warmup round required before prediction");
    }
    if (booster_.pending_count() != 0) {
        throw Error(ErrorCategory::state, "previous round not yet observed");
    }
    if (buffer_.size() < static_cast<std::size_t>(base_.lag_spec().max_lag())) {
        throw Error(ErrorCategory::validation, "history shorter than the model's max lag");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(horizon_));
    for (int k = 0; k < horizon_; ++k) {
        const auto features = build_features(buffer_, buffer_.size(), base_.lag_spec());
        const double pv = base_.predict_one(features);
        const int cycle = static_cast<int>(next_t_ % period_);
        const auto corrected = booster_.correct(pv, cycle);
        buffer_.push_back(corrected.p);
        StepRecord record;
        record.t = next_t_++;
        record.pv = corrected.pv;
        record.u = corrected.u;
        record.p = corrected.p;
        run_.records.push_back(record);
        out.push_back(corrected.p);
    }
    return out;
}

RoundSummary ForecastSession::observe_round(std::span<const double> real_values) {
    if (real_values.size() != static_cast<std::size_t>(horizon_)) {
        throw Error(ErrorCategory::validation,
                    "expected " + std::to_string(horizon_) + " real values, got " +
                        std::to_string(real_values.size()));
    }
    const auto errors = booster_.finalize_round(real_values);
    const std::size_t first = run_.records.size() - errors.size();
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        buffer_[buffer_.size() - errors.size() + i] = real_values[i];
        run_.records[first + i].rv = real_values[i];
        run_.records[first + i].e = errors[i];
        abs_sum += std::abs(errors[i]);
    }
    return {errors, abs_sum / static_cast<double>(errors.size())};
}

// ---------------------------------------------------------------------------
// Backtests

namespace {

void check_eval_split(const Series& history, const Series& eval_split) {
    eval_split.validate();
    if (history.period != eval_split.period) {
        throw Error(ErrorCategory::validation, "history/eval period mismatch");
    }
}

// Shared raw-forecast walk for the uncorrected and batch-corrected paths.
template <typename RoundHook>
ForecastRun walk_raw_rounds(const BaseForecaster& base, const Series& history,
                            const Series& eval_split, int horizon, RoundHook&& hook) {
    check_eval_split(history, eval_split);
    if (!base.fitted()) {
        throw Error(ErrorCategory::state, "base forecaster is not fitted");
    }
    const int h = horizon > 0 ? horizon : eval_split.period;
    ForecastRun run;
    run.period = eval_split.period;
    run.horizon = h;
    std::vector<double> buffer = history.values;
    const std::size_t rounds = eval_split.size() / static_cast<std::size_t>(h);
    if (rounds == 0) {
        throw Error(ErrorCategory::validation, "evaluation split shorter than one round");
    }
    std::int64_t t = 0;
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t base_idx = r * static_cast<std::size_t>(h);
        std::vector<double> raw;
        raw.reserve(static_cast<std::size_t>(h));
        for (int k = 0; k < h; ++k) {
            const auto features = build_features(buffer, buffer.size(), base.lag_spec());
            const double pv = base.predict_one(features);
            buffer.push_back(pv);
            raw.push_back(pv);
        }
        const std::span<const double> reals(eval_split.values.data() + base_idx,
                                            static_cast<std::size_t>(h));
        const std::vector<double> corrected = hook(raw, reals);
        for (int k = 0; k < h; ++k) {
            StepRecord record;
            record.t = t++;
            record.pv = raw[static_cast<std::size_t>(k)];
            record.p = corrected[static_cast<std::size_t>(k)];
            record.u = record.p - record.pv;
            record.rv = reals[static_cast<std::size_t>(k)];
            record.e = record.p - reals[static_cast<std::size_t>(k)];
            run.records.push_back(record);
            buffer[buffer.size() - static_cast<std::size_t>(h - k)] = reals[static_cast<std::size_t>(k)];
        }
    }
    return run;
}

} // namespace

ForecastRun run_backtest(const BaseForecaster& base, const Series& history,
                         const Series& eval_split, PidGains gains, SessionConfig config) {
    check_eval_split(history, eval_split);
    ForecastSession session(base, history, gains, config);
    std::size_t offset = 0;
    if (config.init == InitStrategy::warmup) {
        const auto period = static_cast<std::size_t>(eval_split.period);
        if (eval_split.size() < period + static_cast<std::size_t>(session.horizon())) {
            throw Error(ErrorCategory::validation,
                        "evaluation split too short for warmup plus one scored round");
        }
        session.run_warmup({eval_split.values.data(), period});
        offset = period;
    }
    const auto h = static_cast<std::size_t>(session.horizon());
    const std::size_t rounds = (eval_split.size() - offset) / h;
    if (rounds == 0) {
        throw Error(ErrorCategory::validation, "evaluation split shorter than one round");
    }
    for (std::size_t r = 0; r < rounds; ++r) {
        session.predict_round();
        session.observe_round({eval_split.values.data() + offset + r * h, h});
    }
    return session.run();
}

ForecastRun run_iterative_backtest(const BaseForecaster& base, const Series& history,
                                   const Series& eval_split, int horizon) {
    return walk_raw_rounds(base, history, eval_split, horizon,
                           [](const std::vector<double>& raw, std::span<const double>) {
                               return raw;
                           });
}

ForecastRun run_corrected_backtest(const BaseForecaster& base, const BatchCorrector& corrector,
                                   const Series& history, const Series& eval_split, int horizon) {
    const int h = horizon > 0 ? horizon : eval_split.period;
    if (corrector.width() != h) {
        throw Error(ErrorCategory::validation,
                    "batch corrector width " + std::to_string(corrector.width()) +
                        " does not match horizon " + std::to_string(h));
    }
    return walk_raw_rounds(base, history, eval_split, h,
                           [&corrector](const std::vector<double>& raw, std::span<const double>) {
                               return corrector.correct_batch(raw);
                           });
}

std::vector<std::pair<std::vector<double>, std::vector<double>>>
build_correction_pairs(const BaseForecaster& base, const Series& history, const Series& data,
                       int horizon) {
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    const ForecastRun run = walk_raw_rounds(
        base, history, data, horizon,
        [&pairs](const std::vector<double>& raw, std::span<const double> reals) {
            pairs.emplace_back(raw, std::vector<double>(reals.begin(), reals.end()));
            return raw;
        });
    return pairs;
}

double one_step_mae(const BaseForecaster& base, const Series& series) {
    series.validate();
    if (!base.fitted()) {
        throw Error(ErrorCategory::state, "base forecaster is not fitted");
    }
    const auto max_lag = static_cast<std::size_t>(base.lag_spec().max_lag());
    if (series.size() <= max_lag) {
        throw Error(ErrorCategory::validation, "series shorter than the model's max lag");
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t t = max_lag; t < series.size(); ++t) {
        const auto features = build_features(series.values, t, base.lag_spec());
        acc += std::abs(base.predict_one(features) - series.values[t]);
        ++n;
    }
    return acc / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Error decomposition audit

double max_error_decomposition_residual(const ForecastRun& run) {
    if (run.horizon != run.period) {
        throw Error(ErrorCategory::validation, "decomposition audit requires horizon == period");
    }
    const auto T = static_cast<std::ptrdiff_t>(run.period);
    const PidGains& g = run.gains;

    auto error_at = [&run](std::ptrdiff_t idx) {
        if (!run.records[static_cast<std::size_t>(idx)].e.has_value()) {
            throw Error(ErrorCategory::validation, "run log has an unobserved step");
        }
        return *run.records[static_cast<std::size_t>(idx)].e;
    };
    // Finalized error at a (possibly virtual) global step index. Negative
    // indices fall into the seed vector of zero/train_mae runs, which acts as
    // the errors of round -1; anything earlier counts as zero.
    auto err_global = [&](std::ptrdiff_t idx) -> double {
        if (idx >= 0) return error_at(idx);
        if (idx >= -T && run.seed_errors.size() == static_cast<std::size_t>(T)) {
            return run.seed_errors[static_cast<std::size_t>(T + idx)];
        }
        return 0.0; // uncorrected runs carry no seed; their control terms are zero anyway
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < run.records.size(); ++i) {
        const StepRecord& rec = run.records[i];
        if (!rec.rv.has_value() || !rec.e.has_value()) continue;
        const double e_nn = rec.pv - *rec.rv;
        const auto idx = static_cast<std::ptrdiff_t>(i);
        double expected = 0.0;
        if (i < run.warmup_steps) {
            // Warmup: immediate feedback on the freshly revealed errors,
            // errors before the window count as zero.
            const double e1 = idx >= 1 ? error_at(idx - 1) : 0.0;
            const double e2 = idx >= 2 ? error_at(idx - 2) : 0.0;
            double sum = 0.0;
            for (std::ptrdiff_t j = 0; j < idx; ++j) sum += error_at(j);
            expected = e_nn - g.kp * e1 - g.ki * sum - g.kd * (e1 - e2);
        } else {
            // Scored rounds: feedback one period back, sum over this round's
            // consumed feedback errors (reset at the round boundary),
            // backward difference across the feedback window.
            const std::ptrdiff_t k = (idx - static_cast<std::ptrdiff_t>(run.warmup_steps)) % T;
            const double e_fb = err_global(idx - T);
            double sum = 0.0;
            for (std::ptrdiff_t j = 0; j <= k; ++j) sum += err_global(idx - k + j - T);
            const double e_before = (k == 0 && run.round_start == RoundStartDerivative::zero_seed)
                                        ? 0.0
                                        : err_global(idx - T - 1);
            expected = e_nn - g.kp * e_fb - g.ki * sum - g.kd * (e_fb - e_before);
        }
        worst = std::max(worst, std::abs(*rec.e - expected));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Run log CSV

void write_runlog_csv(const ForecastRun& run, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << "t,pv,u,p,rv,e\n";
    for (const StepRecord& rec : run.records) {
        out << rec.t << ',' << detail::format_double(rec.pv) << ',' << detail::format_double(rec.u)
            << ',' << detail::format_double(rec.p) << ',';
        if (rec.rv) out << detail::format_double(*rec.rv);
        out << ',';
        if (rec.e) out << detail::format_double(*rec.e);
        out << '\n';
    }
}

std::vector<StepRecord> read_runlog_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != "t,pv,u,p,rv,e") {
        throw Error(ErrorCategory::parse, "not a run log: " + path.string());
    }
    std::vector<StepRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_on(line, ',');
        if (fields.size() != 6) {
            throw Error(ErrorCategory::parse,
                        "run log line " + std::to_string(line_no) + ": expected 6 fields");
        }
        StepRecord rec;
        long long t = 0;
        if (!detail::try_parse_int(detail::trim(fields[0]), t)) {
            throw Error(ErrorCategory::parse, "run log line " + std::to_string(line_no) + ": bad t");
        }
        rec.t = t;
        rec.pv = detail::parse_double_or_throw(detail::trim(fields[1]), "run log pv");
        rec.u = detail::parse_double_or_throw(detail::trim(fields[2]), "run log u");
        rec.p = detail::parse_double_or_throw(detail::trim(fields[3]), "run log p");
        const auto rv = detail::trim(fields[4]);
        const auto e = detail::trim(fields[5]);
        if (!rv.empty()) rec.rv = detail::parse_double_or_throw(rv, "run log rv");
        if (!e.empty()) rec.e = detail::parse_double_or_throw(e, "run log e");
        records.push_back(rec);
    }
    return records;
}

} // namespace pidcast
