#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pidcast {

/// PID gains acting on forecast errors in data units.
struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;

    /// All gains must lie in [0, 1]. With enforce_order set, additionally
    /// requires ki < kp and kd < kp unless kp is zero.
    void validate(bool enforce_order = false) const;
};

/// Backward difference at the first step of a round: the error one step
/// before the round window either counts as zero (round state stays
/// self-contained) or is read across the boundary from the round before the
/// previous one.
enum class RoundStartDerivative { zero_seed, cross_round };

enum class InitStrategy { zero, train_mae, warmup };

const char* to_string(InitStrategy strategy);
InitStrategy parse_init_strategy(std::string_view text);

/// One forecast step: raw prediction pv, control term u, corrected output
/// p = pv + u exactly, and (once observed) the real value rv and final
/// error e = p - rv exactly.
struct StepRecord {
    std::int64_t t = 0;
    double pv = 0.0;
    double u = 0.0;
    double p = 0.0;
    std::optional<double> rv;
    std::optional<double> e;
};

struct CorrectionResult {
    double pv = 0.0;
    double u = 0.0;
    double p = 0.0;
};

/// Per-step output corrector for iterative multi-step forecasting of a
/// series with period T. Real values only arrive at the end of each round of
/// predictions, so the feedback error for step t is the finalized error one
/// period back, e(t-T):
///
///     u = -kp * e(t-T) - ki * sum - kd * (e(t-T) - e(t-T-1))
///
/// where `sum` accumulates the previous round's errors consumed so far and
/// resets at every round boundary. The corrected value p = pv + u is what
/// goes back into the working history, and p - rv (not pv - rv) is the error
/// carried into the next round.
class PidBooster {
public:
    PidBooster(PidGains gains, int period,
               RoundStartDerivative round_start = RoundStartDerivative::zero_seed);

    /// Error state all zero: the controller is inert for round 0.
    void initialize_zero();

    /// Error state set to a constant, typically the base model's training MAE.
    void initialize_train_mae(double mae);

    /// Installs externally computed errors (warmup handoff, snapshot restore).
    /// `boundary_error` is the trailing error of the round before the one the
    /// installed vector describes, used by the cross_round convention.
    void seed_errors(std::vector<double> errors, std::int64_t next_round_index,
                     double boundary_error = 0.0);

    /// Control term for the step at the given position of the T-cycle.
    /// Consumes one step: adds e(t-T) to the running sum and advances the
    /// derivative chain. Steps of a round must be consumed in order.
    double compute_control(int cycle_index);

    /// Applies the control to a raw prediction; p = pv + u exactly. The
    /// corrected value is held pending until finalize_round.
    CorrectionResult correct(double pv, int cycle_index);

    /// Real values arrived: computes e = p - rv per pending step, installs
    /// the errors as the feedback state for the next round, resets the
    /// integral sum to zero and increments the round counter. Returns the
    /// per-step errors in prediction order.
    std::vector<double> finalize_round(std::span<const double> real_values);

    const PidGains& gains() const { return gains_; }
    int period() const { return period_; }
    bool initialized() const { return initialized_; }
    std::int64_t round_index() const { return round_index_; }
    int steps_this_round() const { return steps_this_round_; }
    double integral() const { return integral_; }
    const std::vector<double>& prev_round_errors() const { return prev_round_errors_; }
    std::size_t pending_count() const { return pending_.size(); }
    RoundStartDerivative round_start_convention() const { return round_start_; }

    /// Versioned text snapshot; load() restores bit-identical state so a
    /// prediction session can resume once real data arrives.
    void save(std::ostream& out) const;
    static PidBooster load(std::istream& in);

private:
    PidGains gains_;
    int period_;
    RoundStartDerivative round_start_;
    bool initialized_ = false;
    std::int64_t round_index_ = 0;
    std::vector<double> prev_round_errors_;
    double boundary_error_ = 0.0; // trailing error of the round before the previous
    double integral_ = 0.0;
    int steps_this_round_ = 0;
    double last_error_consumed_ = 0.0;
    std::vector<double> pending_;    // corrected predictions of the open round
    std::vector<int> pending_cycle_; // cycle position per pending step
};

/// Immediate-feedback corrector for the warmup round: the freshly revealed
/// error of step t-1 drives step t, the sum runs over all errors revealed so
/// far, and the two steps before the window count as zero error.
class WarmupCorrector {
public:
    explicit WarmupCorrector(PidGains gains) : gains_(gains) {}

    double control() const;
    void record_error(double e);
    const std::vector<double>& errors() const { return errors_; }

private:
    PidGains gains_;
    std::vector<double> errors_;
    double integral_ = 0.0;
};

} // namespace pidcast
