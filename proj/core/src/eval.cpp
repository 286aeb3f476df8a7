#include "pidcast/eval.hpp"

#include "pidcast/errors.hpp"
#include "text_util.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace pidcast {

Metrics compute_metrics(const ForecastRun& run, bool std_of_abs_error) {
    std::vector<double> errors;
    std::vector<double> reals;
    for (std::size_t i = run.warmup_steps; i < run.records.size(); ++i) {
        const StepRecord& rec = run.records[i];
        if (!rec.rv.has_value() || !rec.e.has_value()) continue;
        errors.push_back(*rec.e);
        reals.push_back(*rec.rv);
    }
    if (errors.empty()) {
        throw Error(ErrorCategory::validation, "run has no scored steps");
    }

    Metrics m;
    m.scored_steps = errors.size();
    const auto n = static_cast<double>(errors.size());
    double abs_sum = 0.0, sum = 0.0, sq_sum = 0.0;
    for (double e : errors) {
        abs_sum += std::abs(e);
        sum += std_of_abs_error ? std::abs(e) : e;
        sq_sum += e * e;
    }
    m.mae = abs_sum / n;
    m.rss = sq_sum;
    const double mean = sum / n;
    double var = 0.0;
    for (double e : errors) {
        const double x = std_of_abs_error ? std::abs(e) : e;
        var += (x - mean) * (x - mean);
    }
    m.std_dev = std::sqrt(var / n);

    double mape_sum = 0.0;
    std::size_t mape_n = 0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (reals[i] == 0.0) {
            ++m.mape_excluded;
            continue;
        }
        mape_sum += std::abs(errors[i]) / std::abs(reals[i]);
        ++mape_n;
    }
    if (mape_n > 0) {
        m.mape = 100.0 * mape_sum / static_cast<double>(mape_n);
    }
    return m;
}

void AicInput::validate() const {
    if (n <= w + 1) {
        throw Error(ErrorCategory::validation,
                    "AIC requires n > w + 1 (n=" + std::to_string(n) + ", w=" + std::to_string(w) +
                        ")");
    }
    if (rss < 0.0 || !std::isfinite(rss)) {
        throw Error(ErrorCategory::validation, "AIC requires a finite non-negative RSS");
    }
}

double compute_aic(const AicInput& input) {
    input.validate();
    if (input.rss == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto n = static_cast<double>(input.n);
    const auto w = static_cast<double>(input.w);
    return n * std::log(input.rss / n) + 2.0 * w + (2.0 * w * (w + 1.0)) / (n - w - 1.0);
}

Histogram make_histogram(std::span<const double> abs_errors, double bin_width) {
    if (!(bin_width > 0.0)) {
        throw Error(ErrorCategory::validation, "histogram bin width must be positive");
    }
    Histogram h;
    h.bin_width = bin_width;
    for (double a : abs_errors) {
        if (!(a >= 0.0)) {
            throw Error(ErrorCategory::validation, "histogram input must be non-negative");
        }
        const auto bin = static_cast<std::size_t>(a / bin_width);
        if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
        ++h.counts[bin];
    }
    return h;
}

void write_histogram_csv(const Histogram& histogram, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCategory::io, "cannot write " + path.string());
    }
    out << "bin_start,bin_end,count\n";
    for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
        out << detail::format_double(static_cast<double>(i) * histogram.bin_width) << ','
            << detail::format_double(static_cast<double>(i + 1) * histogram.bin_width) << ','
            << histogram.counts[i] << '\n';
    }
}

ExtMeasurement measure_ext(const std::function<ForecastSession()>& session_factory,
                           int repetitions) {
    if (repetitions < 1) {
        throw Error(ErrorCategory::validation, "repetitions must be >= 1");
    }
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        ForecastSession session = session_factory();
        const auto t0 = std::chrono::steady_clock::now();
        session.predict_round();
        const auto t1 = std::chrono::steady_clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    ExtMeasurement m;
    m.repetitions = repetitions;
    double sum = 0.0;
    for (double s : samples) sum += s;
    m.mean_ms = sum / static_cast<double>(repetitions);
    double var = 0.0;
    for (double s : samples) var += (s - m.mean_ms) * (s - m.mean_ms);
    m.std_ms = std::sqrt(var / static_cast<double>(repetitions));
    return m;
}

std::string format_hash(std::uint64_t hash) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::uint64_t hash_bytes(std::span<const std::byte> bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::byte b : bytes) {
        h ^= static_cast<std::uint64_t>(b);
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    std::uint64_t h = 1469598103934665603ull;
    char buf[8192];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string report_json(const ForecastRun& run, const ReportInputs& inputs) {
    const Metrics metrics = compute_metrics(run, inputs.std_of_abs_error);
    nlohmann::json j;

    j["schema"] = "pidcast-report-v1";
    j["config"] = {
        {"model", inputs.model_name},
        {"period", run.period},
        {"horizon", run.horizon},
        {"init", inputs.init},
        {"gains", {{"kp", run.gains.kp}, {"ki", run.gains.ki}, {"kd", run.gains.kd}}},
        {"booster_active", inputs.booster_active},
        {"bin_width", inputs.bin_width},
        {"std_of_abs_error", inputs.std_of_abs_error},
    };
    j["metrics"] = {
        {"mae", metrics.mae},
        {"std", metrics.std_dev},
        {"mape", metrics.mape.has_value() ? nlohmann::json(*metrics.mape) : nlohmann::json()},
        {"mape_excluded", metrics.mape_excluded},
        {"scored_steps", metrics.scored_steps},
        {"rss", metrics.rss},
        {"warmup_steps", run.warmup_steps},
    };

    const std::size_t w =
        inputs.model_parameters + (inputs.booster_active ? kBoosterParameterCount : 0);
    nlohmann::json aic;
    aic["w"] = w;
    aic["n"] = metrics.scored_steps;
    aic["rss"] = metrics.rss;
    if (metrics.scored_steps > w + 1) {
        const double value = compute_aic({w, metrics.scored_steps, metrics.rss});
        aic["value"] = std::isfinite(value) ? nlohmann::json(value) : nlohmann::json("-infinity");
    } else {
        aic["value"] = nullptr; // too few scored steps for the correction term
    }
    j["aic"] = aic;

    std::vector<double> abs_errors;
    for (std::size_t i = run.warmup_steps; i < run.records.size(); ++i) {
        if (run.records[i].e.has_value()) abs_errors.push_back(std::abs(*run.records[i].e));
    }
    const Histogram hist = make_histogram(abs_errors, inputs.bin_width);
    j["histogram"] = {{"bin_width", hist.bin_width}, {"counts", hist.counts}};

    j["provenance"] = {
        {"dataset_hash", inputs.dataset_hash},
        {"tool", "pidcast"},
    };
    if (inputs.ext.has_value()) {
        j["ext_ms"] = {{"mean", inputs.ext->mean_ms},
                       {"std", inputs.ext->std_ms},
                       {"repetitions", inputs.ext->repetitions}};
    }
    return j.dump(2) + "\n";
}

} // namespace pidcast
