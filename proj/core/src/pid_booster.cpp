#include "pidcast/pid_booster.hpp"

#include "pidcast/errors.hpp"
#include "text_util.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace pidcast {

void PidGains::validate(bool enforce_order) const {
    auto in_unit = [](double g) { return std::isfinite(g) && g >= 0.0 && g <= 1.0; };
    if (!in_unit(kp) || !in_unit(ki) || !in_unit(kd)) {
        throw Error(ErrorCategory::validation, "gains must lie in [0, 1]");
    }
    if (enforce_order && kp > 0.0 && (ki >= kp || kd >= kp)) {
        throw Error(ErrorCategory::validation,
                    "integral and derivative gains must be smaller than the proportional gain");
    }
}

const char* to_string(InitStrategy strategy) {
    switch (strategy) {
        case InitStrategy::zero: return "zero";
        case InitStrategy::train_mae: return "train_mae";
        case InitStrategy::warmup: return "warmup";
    }
    return "unknown";
}

InitStrategy parse_init_strategy(std::string_view text) {
    if (text == "zero") return InitStrategy::zero;
    if (text == "train_mae") return InitStrategy::train_mae;
    if (text == "warmup") return InitStrategy::warmup;
    throw Error(ErrorCategory::usage, "unknown init strategy '" + std::string(text) + "'");
}

PidBooster::PidBooster(PidGains gains, int period, RoundStartDerivative round_start)
    : gains_(gains), period_(period), round_start_(round_start) {
    gains_.validate(false);
    if (period < 2) {
        throw Error(ErrorCategory::validation, "booster period must be >= 2");
    }
}

void PidBooster::initialize_zero() {
    seed_errors(std::vector<double>(static_cast<std::size_t>(period_), 0.0), 0, 0.0);
}

void PidBooster::initialize_train_mae(double mae) {
    if (!std::isfinite(mae)) {
        throw Error(ErrorCategory::validation, "training MAE must be finite");
    }
    seed_errors(std::vector<double>(static_cast<std::size_t>(period_), mae), 0, 0.0);
}

void PidBooster::seed_errors(std::vector<double> errors, std::int64_t next_round_index,
                             double boundary_error) {
    if (errors.size() != static_cast<std::size_t>(period_)) {
        throw Error(ErrorCategory::validation,
                    "error seed must hold exactly one period of values");
    }
    for (double e : errors) {
        if (!std::isfinite(e)) {
            throw Error(ErrorCategory::validation, "error seed contains a non-finite value");
        }
    }
    if (!pending_.empty()) {
        throw Error(ErrorCategory::state, "cannot reseed with a round pending observation");
    }
    prev_round_errors_ = std::move(errors);
    boundary_error_ = boundary_error;
    round_index_ = next_round_index;
    integral_ = 0.0;
    steps_this_round_ = 0;
    last_error_consumed_ = 0.0;
    initialized_ = true;
}

double PidBooster::compute_control(int cycle_index) {
    if (!initialized_) {
        throw Error(ErrorCategory::state, "booster not initialized");
    }
    if (cycle_index < 0 || cycle_index >= period_) {
        throw Error(ErrorCategory::validation, "cycle index out of range");
    }
    const double e = prev_round_errors_[static_cast<std::size_t>(cycle_index)];
    integral_ += e;
    // At the first step of a round the backward difference has no in-round
    // predecessor; it is seeded with zero, or with the trailing error of the
    // round before the previous one under the cross_round convention.
    const double e_prev =
        steps_this_round_ == 0
            ? (round_start_ == RoundStartDerivative::cross_round ? boundary_error_ : 0.0)
            : last_error_consumed_;
    const double u = -gains_.kp * e - gains_.ki * integral_ - gains_.kd * (e - e_prev);
    last_error_consumed_ = e;
    ++steps_this_round_;
    return u;
}

CorrectionResult PidBooster::correct(double pv, int cycle_index) {
    if (!std::isfinite(pv)) {
        throw Error(ErrorCategory::validation, "raw prediction is non-finite");
    }
    const double u = compute_control(cycle_index);
    const double p = pv + u;
    pending_.push_back(p);
    pending_cycle_.push_back(cycle_index);
    return {pv, u, p};
}

std::vector<double> PidBooster::finalize_round(std::span<const double> real_values) {
    if (pending_.empty()) {
        throw Error(ErrorCategory::state, "no pending predictions to finalize");
    }
    if (real_values.size() != pending_.size()) {
        throw Error(ErrorCategory::validation,
                    "expected " + std::to_string(pending_.size()) + " real values, got " +
                        std::to_string(real_values.size()));
    }
    for (double rv : real_values) {
        if (!std::isfinite(rv)) {
            throw Error(ErrorCategory::validation, "real value is non-finite");
        }
    }
    std::vector<double> errors(pending_.size());
    std::vector<double> next = prev_round_errors_;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
        errors[i] = pending_[i] - real_values[i];
        next[static_cast<std::size_t>(pending_cycle_[i])] = errors[i];
    }
    boundary_error_ = prev_round_errors_.back();
    prev_round_errors_ = std::move(next);
    pending_.clear();
    pending_cycle_.clear();
    integral_ = 0.0;
    steps_this_round_ = 0;
    last_error_consumed_ = 0.0;
    ++round_index_;
    return errors;
}

void PidBooster::save(std::ostream& out) const {
    using detail::format_double_g17;
    out << "pidcast-booster-state v1\n";
    out << "gains " << format_double_g17(gains_.kp) << ' ' << format_double_g17(gains_.ki) << ' '
        << format_double_g17(gains_.kd) << '\n';
    out << "period " << period_ << '\n';
    out << "round_start " << (round_start_ == RoundStartDerivative::cross_round ? "cross" : "zero")
        << '\n';
    out << "initialized " << (initialized_ ? 1 : 0) << '\n';
    out << "round_index " << round_index_ << '\n';
    out << "boundary_error " << format_double_g17(boundary_error_) << '\n';
    out << "integral " << format_double_g17(integral_) << '\n';
    out << "steps_this_round " << steps_this_round_ << '\n';
    out << "last_error_consumed " << format_double_g17(last_error_consumed_) << '\n';
    out << "prev_round_errors " << prev_round_errors_.size();
    for (double e : prev_round_errors_) out << ' ' << format_double_g17(e);
    out << '\n';
    out << "pending " << pending_.size();
    for (double p : pending_) out << ' ' << format_double_g17(p);
    out << '\n';
    out << "pending_cycles " << pending_cycle_.size();
    for (int c : pending_cycle_) out << ' ' << c;
    out << '\n';
}

namespace {

void expect_key(std::istream& in, const char* key) {
    std::string token;
    if (!(in >> token) || token != key) {
        throw Error(ErrorCategory::parse, std::string("booster state: expected '") + key + "'");
    }
}

double read_double(std::istream& in, const char* what) {
    std::string token;
    if (!(in >> token)) {
        throw Error(ErrorCategory::parse, std::string("booster state: truncated ") + what);
    }
    return detail::parse_double_or_throw(token, what);
}

} // namespace

PidBooster PidBooster::load(std::istream& in) {
    std::string tag, version;
    if (!(in >> tag >> version) || tag != "pidcast-booster-state") {
        throw Error(ErrorCategory::parse, "not a booster state file");
    }
    if (version != "v1") {
        throw Error(ErrorCategory::parse, "unsupported booster state version " + version);
    }
    expect_key(in, "gains");
    PidGains gains;
    gains.kp = read_double(in, "gains");
    gains.ki = read_double(in, "gains");
    gains.kd = read_double(in, "gains");
    expect_key(in, "period");
    int period = 0;
    if (!(in >> period)) {
        throw Error(ErrorCategory::parse, "booster state: bad period");
    }
    expect_key(in, "round_start");
    std::string convention;
    in >> convention;
    const RoundStartDerivative round_start = convention == "cross"
                                                 ? RoundStartDerivative::cross_round
                                                 : RoundStartDerivative::zero_seed;
    PidBooster booster(gains, period, round_start);
    expect_key(in, "initialized");
    int initialized = 0;
    in >> initialized;
    expect_key(in, "round_index");
    in >> booster.round_index_;
    expect_key(in, "boundary_error");
    booster.boundary_error_ = read_double(in, "boundary_error");
    expect_key(in, "integral");
    booster.integral_ = read_double(in, "integral");
    expect_key(in, "steps_this_round");
    in >> booster.steps_this_round_;
    expect_key(in, "last_error_consumed");
    booster.last_error_consumed_ = read_double(in, "last_error_consumed");
    expect_key(in, "prev_round_errors");
    std::size_t n = 0;
    in >> n;
    booster.prev_round_errors_.resize(n);
    for (auto& e : booster.prev_round_errors_) e = read_double(in, "prev_round_errors");
    expect_key(in, "pending");
    in >> n;
    booster.pending_.resize(n);
    for (auto& p : booster.pending_) p = read_double(in, "pending");
    expect_key(in, "pending_cycles");
    in >> n;
    if (n != booster.pending_.size()) {
        throw Error(ErrorCategory::parse, "booster state: pending/cycle length mismatch");
    }
    booster.pending_cycle_.resize(n);
    for (auto& c : booster.pending_cycle_) {
        if (!(in >> c)) {
            throw Error(ErrorCategory::parse, "booster state: truncated pending_cycles");
        }
    }
    if (!in) {
        throw Error(ErrorCategory::parse, "booster state: truncated file");
    }
    booster.initialized_ = initialized != 0;
    if (booster.initialized_ &&
        booster.prev_round_errors_.size() != static_cast<std::size_t>(period)) {
        throw Error(ErrorCategory::parse, "booster state: error vector length != period");
    }
    return booster;
}

double WarmupCorrector::control() const {
    const std::size_t t = errors_.size();
    const double e1 = t >= 1 ? errors_[t - 1] : 0.0;
    const double e2 = t >= 2 ? errors_[t - 2] : 0.0;
    return -gains_.kp * e1 - gains_.ki * integral_ - gains_.kd * (e1 - e2);
}

void WarmupCorrector::record_error(double e) {
    if (!std::isfinite(e)) {
        throw Error(ErrorCategory::validation, "warmup error is non-finite");
    }
    errors_.push_back(e);
    integral_ += e;
}

} // namespace pidcast
