#pragma once

#include "pidcast/forecasters.hpp"
#include "pidcast/pid_booster.hpp"
#include "pidcast/series.hpp"

#include <optional>

namespace pidcast {

struct BoosterOptions {
    RoundStartDerivative round_start = RoundStartDerivative::zero_seed;
    bool enforce_gain_constraint = false;
};

struct SessionConfig {
    int horizon = 0;                 // steps per prediction round; 0 means the series period
    InitStrategy init = InitStrategy::zero;
    std::optional<double> train_mae; // required for InitStrategy::train_mae
    BoosterOptions booster;
};

/// Complete log of one forecasting run plus the configuration needed to
/// reproduce and audit it.
struct ForecastRun {
    int period = 0;
    int horizon = 0;
    PidGains gains;
    InitStrategy init = InitStrategy::zero;
    RoundStartDerivative round_start = RoundStartDerivative::zero_seed;
    std::size_t warmup_steps = 0;    // leading records that belong to the warmup round
    std::vector<double> seed_errors; // round-0 feedback state for zero/train_mae init
    std::vector<StepRecord> records;

    /// Observed records past the warmup round.
    std::size_t scored_steps() const;
};

struct RoundSummary {
    std::vector<double> errors;
    double mae = 0.0;
};

/// Drives one iterative multi-step forecast: per step it builds lag features
/// from the working buffer, asks the base forecaster for a raw prediction,
/// applies the booster, and writes the corrected value back into the buffer
/// so later steps condition on it. When a round's real values arrive they
/// replace the predicted suffix, so future feature windows read ground truth.
///
/// A session is strictly sequential; run distinct sessions for concurrency.
/// The base forecaster must outlive the session.
class ForecastSession {
public:
    ForecastSession(const BaseForecaster& base, const Series& history, PidGains gains,
                    SessionConfig config = {});

    /// Runs the warmup round over one period of held-back real data with
    /// immediate error feedback, then installs the resulting errors as the
    /// booster state. Required first (and only) when init == warmup.
    void run_warmup(std::span<const double> real_values);

    /// Predicts the next `horizon` steps. Requires an initialized booster and
    /// no round pending observation.
    std::vector<double> predict_round();

    /// Finalizes the pending round against observed reals.
    RoundSummary observe_round(std::span<const double> real_values);

    const ForecastRun& run() const { return run_; }
    const PidBooster& booster() const { return booster_; }
    const std::vector<double>& buffer() const { return buffer_; }
    int horizon() const { return horizon_; }
    int period() const { return period_; }
    std::int64_t next_step() const { return next_t_; }

    /// Rebuilds a session mid-run from a booster snapshot; `history` must
    /// already include every round observed so far.
    static ForecastSession resume(const BaseForecaster& base, const Series& history,
                                  PidBooster booster, int horizon);

private:
    ForecastSession(const BaseForecaster& base, const Series& history, PidBooster booster,
                    int horizon, bool);

    const BaseForecaster& base_;
    std::vector<double> buffer_;
    int period_;
    int horizon_;
    PidBooster booster_;
    std::int64_t next_t_ = 0;
    bool awaiting_warmup_ = false;
    ForecastRun run_;
};

/// Walks an evaluation split round by round: predict, then observe with the
/// actual values. With warmup init the split's first period is consumed as
/// the warmup round. A trailing partial round is not predicted.
ForecastRun run_backtest(const BaseForecaster& base, const Series& history,
                         const Series& eval_split, PidGains gains, SessionConfig config = {});

/// Plain iterative forecast, no correction of any kind: u = 0, p = pv.
/// The reference the boosted run is compared against.
ForecastRun run_iterative_backtest(const BaseForecaster& base, const Series& history,
                                   const Series& eval_split, int horizon = 0);

/// Batch-corrector baseline: each round is forecast raw, then corrected as a
/// whole vector once complete.
ForecastRun run_corrected_backtest(const BaseForecaster& base, const BatchCorrector& corrector,
                                   const Series& history, const Series& eval_split,
                                   int horizon = 0);

/// (raw round, real round) training pairs for a BatchCorrector, produced by
/// raw iterative forecasts over `data`.
std::vector<std::pair<std::vector<double>, std::vector<double>>>
build_correction_pairs(const BaseForecaster& base, const Series& history, const Series& data,
                       int horizon = 0);

/// Mean absolute one-step error on real features; the constant used by
/// train_mae initialization.
double one_step_mae(const BaseForecaster& base, const Series& series);

/// Recomputes every observed step's error from its decomposition into raw
/// model error minus the three control terms, reconstructed independently
/// from the run log. Returns the largest absolute mismatch. Requires
/// horizon == period.
double max_error_decomposition_residual(const ForecastRun& run);

/// Run log as CSV, one row per step: t,pv,u,p,rv,e (rv and e empty until
/// observed).
void write_runlog_csv(const ForecastRun& run, const std::filesystem::path& path);
std::vector<StepRecord> read_runlog_csv(const std::filesystem::path& path);

} // namespace pidcast
