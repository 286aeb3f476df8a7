#pragma once

#include "pidcast/engine.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace pidcast {

struct Metrics {
    double mae = 0.0;
    double std_dev = 0.0;             // population standard deviation of signed error
    std::optional<double> mape;       // percent; absent when every real value is zero
    std::size_t mape_excluded = 0;    // steps skipped because rv == 0
    std::size_t scored_steps = 0;
    double rss = 0.0;                 // sum of squared errors
};

/// MAE, Std and MAPE over the observed, non-warmup steps of a run.
/// Set std_of_abs_error to take the deviation of |e| instead of e.
Metrics compute_metrics(const ForecastRun& run, bool std_of_abs_error = false);

struct AicInput {
    std::size_t w = 0;  // tunable system variables (model parameters, +3 with the booster)
    std::size_t n = 0;  // scored dataset size
    double rss = 0.0;

    void validate() const;
};

/// n * ln(rss/n) + 2w + 2w(w+1)/(n - w - 1). Requires n > w + 1;
/// rss == 0 yields -infinity.
double compute_aic(const AicInput& input);

/// Parameter count the booster adds to a system: kp, ki, kd.
inline constexpr std::size_t kBoosterParameterCount = 3;

struct Histogram {
    double bin_width = 1.0;
    std::vector<std::uint64_t> counts; // right-open bins [i*w, (i+1)*w) from 0
};

Histogram make_histogram(std::span<const double> abs_errors, double bin_width);
void write_histogram_csv(const Histogram& histogram, const std::filesystem::path& path);

struct ExtMeasurement {
    double mean_ms = 0.0;
    double std_ms = 0.0;
    int repetitions = 0;
};

/// Wall clock of predict_round only, averaged over fresh sessions. Training
/// and session setup are excluded.
ExtMeasurement measure_ext(const std::function<ForecastSession()>& session_factory,
                           int repetitions);

struct ReportInputs {
    std::string model_name;
    std::size_t model_parameters = 0;
    bool booster_active = false;
    std::string dataset_hash;
    std::string init;
    double bin_width = 1.0;
    bool std_of_abs_error = false;
    std::optional<ExtMeasurement> ext; // wall-clock; excluded from byte-stable reports by default
};

/// Deterministic JSON report: metrics, AIC, histogram, config echo and
/// provenance. Identical run and inputs yield byte-identical text.
std::string report_json(const ForecastRun& run, const ReportInputs& inputs);

std::string format_hash(std::uint64_t hash);
std::uint64_t hash_bytes(std::span<const std::byte> bytes);
std::uint64_t hash_file(const std::filesystem::path& path);

} // namespace pidcast
