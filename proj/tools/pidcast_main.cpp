// pidcast command-line tool: ingest, fit, tune, predict, backtest, report.

#include "pidcast/engine.hpp"
#include "pidcast/errors.hpp"
#include "pidcast/eval.hpp"
#include "pidcast/forecasters.hpp"
#include "pidcast/series.hpp"
#include "pidcast/tuner.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace pidcast;

std::string fmt(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

int exit_code(ErrorCategory category) {
    switch (category) {
        case ErrorCategory::usage: return 2;
        case ErrorCategory::io: return 3;
        case ErrorCategory::parse: return 4;
        case ErrorCategory::validation: return 5;
        case ErrorCategory::numeric: return 6;
        case ErrorCategory::state: return 7;
    }
    return 10;
}

std::vector<double> parse_csv_doubles(const std::string& text, std::size_t expected,
                                      const char* what) {
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ',') {
            const std::string token = text.substr(start, i - start);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc{} || ptr != token.data() + token.size()) {
                throw Error(ErrorCategory::usage,
                            std::string(what) + ": cannot parse '" + token + "'");
            }
            out.push_back(v);
            start = i + 1;
        }
    }
    if (out.size() != expected) {
        throw Error(ErrorCategory::usage, std::string(what) + ": expected " +
                                              std::to_string(expected) + " comma-separated values");
    }
    return out;
}

PidGains parse_gains(const std::string& text) {
    const auto v = parse_csv_doubles(text, 3, "--gains");
    return {v[0], v[1], v[2]};
}

SplitSpec parse_split(const std::string& text) {
    const auto v = parse_csv_doubles(text, 3, "--split");
    return {v[0], v[1], v[2]};
}

GridSpec parse_grid(const std::string& text, const char* what) {
    std::vector<double> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ':') {
            const std::string token = text.substr(start, i - start);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc{} || ptr != token.data() + token.size()) {
                throw Error(ErrorCategory::usage,
                            std::string(what) + ": cannot parse '" + token + "'");
            }
            parts.push_back(v);
            start = i + 1;
        }
    }
    if (parts.size() != 3) {
        throw Error(ErrorCategory::usage,
                    std::string(what) + ": expected start:step:max");
    }
    return {parts[0], parts[1], parts[2]};
}

// Options shared by every subcommand that reads a series CSV.
struct SeriesArgs {
    std::string path;
    std::string timestamp_col = "timestamp";
    std::string value_col = "value";
    int period = 0;
    std::string unit;

    void attach(CLI::App* cmd, const std::string& option_name = "--series") {
        cmd->add_option(option_name, path, "Series CSV file")->required();
        cmd->add_option("--timestamp-col", timestamp_col, "Timestamp column name");
        cmd->add_option("--value-col", value_col, "Value column name");
        cmd->add_option("--period", period, "Steps per seasonal cycle")->required();
        cmd->add_option("--unit", unit, "Unit label");
    }

    Series load() const {
        return ingest_csv(path, {timestamp_col, value_col}, period, unit);
    }
};

void save_model_file(const BaseForecaster& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
    model.save(out);
}

Series history_before_test(const SplitResult& parts) {
    return concat(parts.train, parts.validation);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + path);
    out << content;
}

struct BacktestOutputs {
    Metrics metrics;
    std::string label;
};

void print_metrics(const std::string& label, const Metrics& m) {
    std::cout << label << ": mae=" << fmt(m.mae) << " std=" << fmt(m.std_dev);
    if (m.mape.has_value()) std::cout << " mape=" << fmt(*m.mape) << "%";
    std::cout << " rss=" << fmt(m.rss) << " scored_steps=" << m.scored_steps << "\n";
}

// ---------------------------------------------------------------------------

int cmd_ingest(const SeriesArgs& series_args, const std::string& output) {
    IngestReport report;
    const Series series = ingest_csv(series_args.path,
                                     {series_args.timestamp_col, series_args.value_col},
                                     series_args.period, series_args.unit, &report);
    write_csv(series, output);
    std::cout << "ingested " << report.rows_read << " rows from " << series_args.path << "\n";
    if (series.size() >= 2) {
        std::cout << "spacing: " << series.spacing() << " s, period: " << series.period << "\n";
    }
    std::cout << "interpolated: " << report.interpolated << " single-step gaps\n";
    std::cout << "hash: " << format_hash(content_hash(series)) << "\n";
    std::cout << "wrote " << output << " (" << series.size() << " rows)\n";
    return 0;
}

struct FitArgs {
    std::string model = "linear_ar";
    std::string lags;
    std::string split_text = "0.8,0.1,0.1";
    std::string output;
    std::string base_model; // raw-forecast producer for the batch corrector
    int hidden = 0;
    int horizon = 0;
    int epochs = 2000;
    double learning_rate = 0.05;
    int patience = 50;
    unsigned seed = 1;
    bool scale = false;
};

int cmd_fit(const SeriesArgs& series_args, const FitArgs& args) {
    const Series series = series_args.load();
    const SplitResult parts = split(series, parse_split(args.split_text));

    mlp::TrainConfig train_config;
    train_config.max_epochs = args.epochs;
    train_config.learning_rate = args.learning_rate;
    train_config.patience = args.patience;
    train_config.seed = args.seed;

    FitReport report;
    if (args.model == "batch_corrector") {
        if (args.base_model.empty()) {
            throw Error(ErrorCategory::usage, "--base-model is required for batch_corrector");
        }
        const auto base = load_forecaster_file(args.base_model);
        const int horizon = args.horizon > 0 ? args.horizon : series.period;
        // Carve a raw-forecast history off the front of the train split.
        const std::size_t head = std::max<std::size_t>(
            static_cast<std::size_t>(base->lag_spec().max_lag()),
            static_cast<std::size_t>(series.period));
        if (parts.train.size() < head + static_cast<std::size_t>(horizon)) {
            throw Error(ErrorCategory::validation, "train split too short for corrector pairs");
        }
        Series history;
        history.period = series.period;
        history.values.assign(parts.train.values.begin(), parts.train.values.begin() + head);
        history.timestamps.assign(parts.train.timestamps.begin(),
                                  parts.train.timestamps.begin() + head);
        Series rest;
        rest.period = series.period;
        rest.values.assign(parts.train.values.begin() + head, parts.train.values.end());
        rest.timestamps.assign(parts.train.timestamps.begin() + head, parts.train.timestamps.end());

        const auto pairs = build_correction_pairs(*base, history, rest, horizon);
        BatchCorrectorConfig config;
        config.hidden = args.hidden > 0 ? args.hidden : 48;
        config.minmax_scale = true;
        config.train = train_config;
        BatchCorrector corrector(horizon, config);
        report = corrector.fit_pairs(pairs);
        std::ofstream out(args.output, std::ios::binary);
        if (!out) throw Error(ErrorCategory::io, "cannot write " + args.output);
        corrector.save(out);
        std::cout << "fitted batch_corrector on " << pairs.size() << " rounds, parameters="
                  << corrector.parameter_count() << "\n";
    } else if (args.model == "seasonal_naive") {
        SeasonalNaive model(series.period);
        report = model.fit(parts.train);
        save_model_file(model, args.output);
    } else if (args.model == "linear_ar") {
        if (args.lags.empty()) {
            throw Error(ErrorCategory::usage, "--lags is required for linear_ar");
        }
        LinearAR model(parse_lag_spec(args.lags));
        report = model.fit(parts.train);
        save_model_file(model, args.output);
        std::cout << "fitted linear_ar, parameters=" << model.parameter_count() << "\n";
    } else if (args.model == "shallow_net") {
        if (args.lags.empty()) {
            throw Error(ErrorCategory::usage, "--lags is required for shallow_net");
        }
        ShallowNetConfig config;
        config.hidden = args.hidden > 0 ? args.hidden : 16;
        config.minmax_scale = args.scale;
        config.train = train_config;
        ShallowNet model(parse_lag_spec(args.lags), config);
        report = model.fit(parts.train);
        save_model_file(model, args.output);
        std::cout << "fitted shallow_net, parameters=" << model.parameter_count() << "\n";
    } else {
        throw Error(ErrorCategory::usage, "unknown model '" + args.model + "'");
    }

    std::cout << "train split: " << parts.train.size() << " rows\n";
    std::cout << "final loss: " << fmt(report.final_loss) << ", epochs: " << report.epochs << "\n";
    if (!report.notes.empty()) std::cout << "notes: " << report.notes << "\n";
    std::cout << "wrote " << args.output << "\n";
    return 0;
}

struct TuneArgs {
    std::string model_file;
    std::string split_text = "0.8,0.1,0.1";
    std::string kp_grid = "0.1:0.1:1.0";
    std::string ki_grid = "0.0001:0.0001:1.0";
    std::string kd_grid = "0.0001:0.0001:1.0";
    std::string objective = "mae";
    std::string trace_path;
    int horizon = 0;
    int rounds = 0;
    int early_stop = 50;
    bool no_sweep_ki = false;
    bool no_sweep_kd = false;
    bool no_constraint = false;
    bool cross_round = false;
};

int cmd_tune(const SeriesArgs& series_args, const TuneArgs& args) {
    const Series series = series_args.load();
    const SplitResult parts = split(series, parse_split(args.split_text));
    const auto model = load_forecaster_file(args.model_file);

    TuneSpec spec;
    spec.kp = parse_grid(args.kp_grid, "--kp-grid");
    spec.ki = parse_grid(args.ki_grid, "--ki-grid");
    spec.kd = parse_grid(args.kd_grid, "--kd-grid");
    spec.sweep_ki = !args.no_sweep_ki;
    spec.sweep_kd = !args.no_sweep_kd;
    spec.objective = parse_objective(args.objective);
    spec.horizon = args.horizon;
    spec.validation_rounds = args.rounds;
    spec.enforce_gain_constraint = !args.no_constraint;
    spec.early_stop = args.early_stop;
    spec.booster.round_start =
        args.cross_round ? RoundStartDerivative::cross_round : RoundStartDerivative::zero_seed;

    const TuneResult result = tune(*model, parts.train, parts.validation, spec);
    std::cout << "best gains: kp=" << fmt(result.best.kp) << " ki=" << fmt(result.best.ki)
              << " kd=" << fmt(result.best.kd) << "\n";
    std::cout << "objective (" << args.objective << "): " << fmt(result.best_objective) << "\n";
    std::cout << "evaluations: " << result.evaluations << "\n";
    if (!args.trace_path.empty()) {
        write_trace_csv(result, args.trace_path);
        std::cout << "wrote " << args.trace_path << "\n";
    }
    return 0;
}

struct BacktestArgs {
    std::string model_file;
    std::string gains_text = "0,0,0";
    std::string init = "warmup";
    std::string split_text = "0.8,0.1,0.1";
    std::string runlog_path;
    std::string report_path;
    std::string histogram_path;
    std::string corrector_file;
    std::string baseline_report_path;
    std::string baseline_runlog_path;
    std::optional<double> train_mae;
    double bin_width = 1.0;
    int horizon = 0;
    int measure_ext_reps = 0;
    bool baseline = false;
    bool cross_round = false;
    bool std_abs = false;
    bool no_constraint = true;
};

int cmd_backtest(const SeriesArgs& series_args, const BacktestArgs& args) {
    const Series series = series_args.load();
    const SplitResult parts = split(series, parse_split(args.split_text));
    const Series history = history_before_test(parts);
    const auto model = load_forecaster_file(args.model_file);
    const std::string dataset_hash = format_hash(content_hash(series));

    SessionConfig config;
    config.horizon = args.horizon;
    config.init = parse_init_strategy(args.init);
    config.booster.round_start =
        args.cross_round ? RoundStartDerivative::cross_round : RoundStartDerivative::zero_seed;
    config.booster.enforce_gain_constraint = !args.no_constraint;
    if (config.init == InitStrategy::train_mae) {
        config.train_mae =
            args.train_mae.has_value() ? *args.train_mae : one_step_mae(*model, parts.train);
        std::cout << "train MAE seed: " << fmt(*config.train_mae) << "\n";
    }

    ForecastRun run;
    bool booster_active = false;
    if (!args.corrector_file.empty()) {
        const BatchCorrector corrector = load_corrector_file(args.corrector_file);
        run = run_corrected_backtest(*model, corrector, history, parts.test, args.horizon);
        std::cout << "mode: batch corrector (" << corrector.parameter_count() << " parameters)\n";
    } else {
        const PidGains gains = parse_gains(args.gains_text);
        run = run_backtest(*model, history, parts.test, gains, config);
        booster_active = true;
        std::cout << "mode: pid booster, gains kp=" << fmt(gains.kp) << " ki=" << fmt(gains.ki)
                  << " kd=" << fmt(gains.kd) << ", init=" << args.init << "\n";
    }

    const Metrics metrics = compute_metrics(run, args.std_abs);
    print_metrics("test", metrics);

    ReportInputs inputs;
    inputs.model_name = model->name();
    inputs.model_parameters = model->parameter_count();
    inputs.booster_active = booster_active;
    inputs.dataset_hash = dataset_hash;
    inputs.init = booster_active ? std::string(to_string(config.init)) : "none";
    inputs.bin_width = args.bin_width;
    inputs.std_of_abs_error = args.std_abs;
    if (args.measure_ext_reps > 0) {
        auto factory = [&]() {
            SessionConfig warm = config;
            warm.init = InitStrategy::zero;
            return ForecastSession(*model, history, parse_gains(args.gains_text), warm);
        };
        inputs.ext = measure_ext(factory, args.measure_ext_reps);
        std::cout << "ext: mean=" << fmt(inputs.ext->mean_ms) << " ms over "
                  << inputs.ext->repetitions << " repetitions\n";
    }

    if (!args.runlog_path.empty()) {
        write_runlog_csv(run, args.runlog_path);
        std::cout << "wrote " << args.runlog_path << "\n";
    }
    if (!args.report_path.empty()) {
        write_text_file(args.report_path, report_json(run, inputs));
        std::cout << "wrote " << args.report_path << "\n";
    }
    if (!args.histogram_path.empty()) {
        std::vector<double> abs_errors;
        for (std::size_t i = run.warmup_steps; i < run.records.size(); ++i) {
            if (run.records[i].e) abs_errors.push_back(std::abs(*run.records[i].e));
        }
        write_histogram_csv(make_histogram(abs_errors, args.bin_width), args.histogram_path);
        std::cout << "wrote " << args.histogram_path << "\n";
    }

    if (args.baseline) {
        const ForecastRun plain =
            run_iterative_backtest(*model, history, parts.test, args.horizon);
        const Metrics plain_metrics = compute_metrics(plain, args.std_abs);
        print_metrics("baseline (no correction)", plain_metrics);
        if (metrics.mape && plain_metrics.mape) {
            std::cout << "mape delta: " << fmt(*plain_metrics.mape - *metrics.mape)
                      << " percentage points\n";
        }
        if (!args.baseline_runlog_path.empty()) {
            write_runlog_csv(plain, args.baseline_runlog_path);
            std::cout << "wrote " << args.baseline_runlog_path << "\n";
        }
        if (!args.baseline_report_path.empty()) {
            ReportInputs plain_inputs = inputs;
            plain_inputs.booster_active = false;
            plain_inputs.init = "none";
            plain_inputs.ext.reset();
            write_text_file(args.baseline_report_path, report_json(plain, plain_inputs));
            std::cout << "wrote " << args.baseline_report_path << "\n";
        }
    }
    return 0;
}

struct PredictArgs {
    std::string model_file;
    std::string gains_text = "0,0,0";
    std::string init = "warmup";
    std::string state_in;
    std::string state_out;
    std::string observe;
    std::string output;
    std::string output_series;
    std::optional<double> train_mae;
    int horizon = 0;
    bool cross_round = false;
};

int cmd_predict(const SeriesArgs& series_args, const PredictArgs& args) {
    Series series = series_args.load();
    const auto model = load_forecaster_file(args.model_file);

    std::optional<ForecastSession> session;
    if (!args.state_in.empty()) {
        std::ifstream in(args.state_in);
        if (!in) throw Error(ErrorCategory::io, "cannot open " + args.state_in);
        PidBooster booster = PidBooster::load(in);
        if (booster.pending_count() > 0) {
            if (args.observe.empty()) {
                throw Error(ErrorCategory::usage,
                            "state has a pending round; provide --observe with its real values");
            }
            const Series reals = ingest_csv(args.observe,
                                            {series_args.timestamp_col, series_args.value_col},
                                            series.period);
            booster.finalize_round(reals.values);
            series = concat(series, reals);
        }
        session.emplace(ForecastSession::resume(*model, series, std::move(booster), args.horizon));
    } else {
        SessionConfig config;
        config.horizon = args.horizon;
        config.init = parse_init_strategy(args.init);
        config.booster.round_start =
            args.cross_round ? RoundStartDerivative::cross_round : RoundStartDerivative::zero_seed;
        const PidGains gains = parse_gains(args.gains_text);
        if (config.init == InitStrategy::train_mae) {
            config.train_mae =
                args.train_mae.has_value() ? *args.train_mae : one_step_mae(*model, series);
        }
        if (config.init == InitStrategy::warmup) {
            // The trailing period of the series is held back as the warmup round.
            const auto T = static_cast<std::size_t>(series.period);
            if (series.size() < 2 * T) {
                throw Error(ErrorCategory::validation,
                            "warmup needs at least two periods of history");
            }
            Series head;
            head.period = series.period;
            head.unit_label = series.unit_label;
            head.values.assign(series.values.begin(), series.values.end() - static_cast<std::ptrdiff_t>(T));
            head.timestamps.assign(series.timestamps.begin(),
                                   series.timestamps.end() - static_cast<std::ptrdiff_t>(T));
            session.emplace(*model, head, gains, config);
            session->run_warmup(std::span<const double>(
                series.values.data() + series.size() - T, T));
        } else {
            session.emplace(*model, series, gains, config);
        }
    }

    const auto predictions = session->predict_round();
    const std::int64_t spacing = series.spacing();
    const std::int64_t last_ts = series.timestamps.back();

    std::ofstream out(args.output, std::ios::binary);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + args.output);
    out << series_args.timestamp_col << ',' << series_args.value_col << '\n';
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        out << format_timestamp(last_ts + static_cast<std::int64_t>(k + 1) * spacing) << ','
            << fmt(predictions[k]) << '\n';
    }
    std::cout << "predicted " << predictions.size() << " steps; wrote " << args.output << "\n";

    if (!args.state_out.empty()) {
        std::ofstream state(args.state_out, std::ios::binary);
        if (!state) throw Error(ErrorCategory::io, "cannot write " + args.state_out);
        session->booster().save(state);
        std::cout << "wrote " << args.state_out << "\n";
    }
    if (!args.output_series.empty()) {
        write_csv(series, args.output_series,
                  {series_args.timestamp_col, series_args.value_col});
        std::cout << "wrote " << args.output_series << "\n";
    }
    return 0;
}

struct ReportArgs {
    std::string runlog_path;
    std::string output;
    std::string histogram_path;
    std::string model_name = "external";
    std::string gains_text = "0,0,0";
    std::string init = "zero";
    std::size_t warmup_steps = 0;
    std::size_t params_w = 0;
    int period = 2;
    int horizon = 0;
    double bin_width = 1.0;
    bool booster = false;
    bool std_abs = false;
};

int cmd_report(const ReportArgs& args) {
    ForecastRun run;
    run.period = args.period;
    run.horizon = args.horizon > 0 ? args.horizon : args.period;
    run.gains = parse_gains(args.gains_text);
    run.init = parse_init_strategy(args.init);
    run.warmup_steps = args.warmup_steps;
    run.records = read_runlog_csv(args.runlog_path);

    ReportInputs inputs;
    inputs.model_name = args.model_name;
    inputs.model_parameters = args.params_w;
    inputs.booster_active = args.booster;
    inputs.dataset_hash = format_hash(hash_file(args.runlog_path));
    inputs.init = args.init;
    inputs.bin_width = args.bin_width;
    inputs.std_of_abs_error = args.std_abs;

    const Metrics metrics = compute_metrics(run, args.std_abs);
    print_metrics("run", metrics);
    write_text_file(args.output, report_json(run, inputs));
    std::cout << "wrote " << args.output << "\n";
    if (!args.histogram_path.empty()) {
        std::vector<double> abs_errors;
        for (std::size_t i = run.warmup_steps; i < run.records.size(); ++i) {
            if (run.records[i].e) abs_errors.push_back(std::abs(*run.records[i].e));
        }
        write_histogram_csv(make_histogram(abs_errors, args.bin_width), args.histogram_path);
        std::cout << "wrote " << args.histogram_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pidcast: PID-corrected multi-step forecasting for periodic time series"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "Flat key=value config file; prefix keys with the subcommand, e.g. "
                   "backtest.period=24, or group them under [backtest]");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a CSV series and write it in canonical form");
    SeriesArgs ingest_series;
    ingest_series.attach(ingest, "--input");
    std::string ingest_output;
    ingest->add_option("--output", ingest_output, "Canonical series CSV")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a base forecaster (or batch corrector) on the train split");
    SeriesArgs fit_series;
    fit_series.attach(fit);
    FitArgs fit_args;
    fit->add_option("--model", fit_args.model,
                    "seasonal_naive | linear_ar | shallow_net | batch_corrector");
    fit->add_option("--lags", fit_args.lags, "Lag sets, e.g. \"1-5;94-98;190-194\"");
    fit->add_option("--split", fit_args.split_text, "train,validation,test fractions");
    fit->add_option("--output", fit_args.output, "Model file")->required();
    fit->add_option("--base-model", fit_args.base_model, "Fitted base model (batch_corrector)");
    fit->add_option("--hidden", fit_args.hidden, "Hidden width for nets");
    fit->add_option("--horizon", fit_args.horizon, "Round length (batch_corrector)");
    fit->add_option("--epochs", fit_args.epochs, "Max training epochs");
    fit->add_option("--lr", fit_args.learning_rate, "Initial learning rate");
    fit->add_option("--patience", fit_args.patience, "Early-stopping patience");
    fit->add_option("--seed", fit_args.seed, "Weight initialization seed");
    fit->add_flag("--scale", fit_args.scale, "Min-max scale net inputs/targets");

    // tune
    auto* tune_cmd = app.add_subcommand("tune", "Grid-search booster gains on the validation split");
    SeriesArgs tune_series;
    tune_series.attach(tune_cmd);
    TuneArgs tune_args;
    tune_cmd->add_option("--model-file", tune_args.model_file, "Fitted model")->required();
    tune_cmd->add_option("--split", tune_args.split_text, "train,validation,test fractions");
    tune_cmd->add_option("--kp-grid", tune_args.kp_grid, "start:step:max");
    tune_cmd->add_option("--ki-grid", tune_args.ki_grid, "start:step:max");
    tune_cmd->add_option("--kd-grid", tune_args.kd_grid, "start:step:max");
    tune_cmd->add_option("--objective", tune_args.objective, "mae | mape");
    tune_cmd->add_option("--horizon", tune_args.horizon, "Steps per round (default: period)");
    tune_cmd->add_option("--rounds", tune_args.rounds, "Scored validation rounds per candidate");
    tune_cmd->add_option("--early-stop", tune_args.early_stop,
                         "Consecutive non-improving ki/kd candidates before stopping");
    tune_cmd->add_option("--trace", tune_args.trace_path, "Trace CSV output");
    tune_cmd->add_flag("--no-sweep-ki", tune_args.no_sweep_ki, "Pin ki = 0");
    tune_cmd->add_flag("--no-sweep-kd", tune_args.no_sweep_kd, "Pin kd = 0");
    tune_cmd->add_flag("--no-gain-constraint", tune_args.no_constraint,
                       "Drop the ki,kd < kp restriction");
    tune_cmd->add_flag("--cross-round-derivative", tune_args.cross_round,
                       "Backward difference crosses the round boundary");

    // backtest
    auto* backtest = app.add_subcommand("backtest", "Walk the test split round by round");
    SeriesArgs backtest_series;
    backtest_series.attach(backtest);
    BacktestArgs backtest_args;
    backtest->add_option("--model-file", backtest_args.model_file, "Fitted model")->required();
    backtest->add_option("--gains", backtest_args.gains_text, "kp,ki,kd");
    backtest->add_option("--init", backtest_args.init, "zero | train_mae | warmup");
    backtest->add_option("--train-mae", backtest_args.train_mae,
                         "Constant for train_mae init (default: computed on the train split)");
    backtest->add_option("--split", backtest_args.split_text, "train,validation,test fractions");
    backtest->add_option("--horizon", backtest_args.horizon, "Steps per round (default: period)");
    backtest->add_option("--runlog", backtest_args.runlog_path, "Run log CSV output");
    backtest->add_option("--report", backtest_args.report_path, "Report JSON output");
    backtest->add_option("--histogram", backtest_args.histogram_path, "Histogram CSV output");
    backtest->add_option("--bin-width", backtest_args.bin_width, "Histogram bin width");
    backtest->add_option("--corrector", backtest_args.corrector_file,
                         "Batch corrector model (replaces the pid booster)");
    backtest->add_option("--measure-ext", backtest_args.measure_ext_reps,
                         "Repetitions for wall-clock round timing (off by default)");
    backtest->add_flag("--baseline", backtest_args.baseline,
                       "Also run and report the uncorrected backtest");
    backtest->add_option("--baseline-report", backtest_args.baseline_report_path,
                         "Report JSON for the uncorrected run");
    backtest->add_option("--baseline-runlog", backtest_args.baseline_runlog_path,
                         "Run log CSV for the uncorrected run");
    backtest->add_flag("--cross-round-derivative", backtest_args.cross_round,
                       "Backward difference crosses the round boundary");
    backtest->add_flag("--std-abs", backtest_args.std_abs,
                       "Report the deviation of |e| instead of e");

    // predict
    auto* predict = app.add_subcommand("predict", "Forecast the next round past the series end");
    SeriesArgs predict_series;
    predict_series.attach(predict);
    PredictArgs predict_args;
    predict->add_option("--model-file", predict_args.model_file, "Fitted model")->required();
    predict->add_option("--gains", predict_args.gains_text, "kp,ki,kd");
    predict->add_option("--init", predict_args.init, "zero | train_mae | warmup");
    predict->add_option("--train-mae", predict_args.train_mae, "Constant for train_mae init");
    predict->add_option("--horizon", predict_args.horizon, "Steps per round (default: period)");
    predict->add_option("--state-in", predict_args.state_in, "Resume from a booster snapshot");
    predict->add_option("--state-out", predict_args.state_out, "Write the booster snapshot");
    predict->add_option("--observe", predict_args.observe,
                        "CSV with the pending round's real values (with --state-in)");
    predict->add_option("--output", predict_args.output, "Predictions CSV")->required();
    predict->add_option("--output-series", predict_args.output_series,
                        "Write the history extended with observed reals");
    predict->add_flag("--cross-round-derivative", predict_args.cross_round,
                      "Backward difference crosses the round boundary");

    // report
    auto* report = app.add_subcommand("report", "Metrics, AIC and histogram from a saved run log");
    ReportArgs report_args;
    report->add_option("--runlog", report_args.runlog_path, "Run log CSV")->required();
    report->add_option("--output", report_args.output, "Report JSON output")->required();
    report->add_option("--histogram", report_args.histogram_path, "Histogram CSV output");
    report->add_option("--warmup-steps", report_args.warmup_steps,
                       "Leading steps to exclude from scoring");
    report->add_option("--period", report_args.period, "Steps per seasonal cycle");
    report->add_option("--horizon", report_args.horizon, "Steps per round");
    report->add_option("--gains", report_args.gains_text, "kp,ki,kd (config echo)");
    report->add_option("--init", report_args.init, "Init strategy (config echo)");
    report->add_option("--model-name", report_args.model_name, "Model name (config echo)");
    report->add_option("--params-w", report_args.params_w, "Model parameter count for AIC");
    report->add_option("--bin-width", report_args.bin_width, "Histogram bin width");
    report->add_flag("--booster", report_args.booster, "Count the booster's 3 variables in w");
    report->add_flag("--std-abs", report_args.std_abs,
                     "Report the deviation of |e| instead of e");

    try {
        app.parse(argc, argv);
        if (ingest->parsed()) return cmd_ingest(ingest_series, ingest_output);
        if (fit->parsed()) return cmd_fit(fit_series, fit_args);
        if (tune_cmd->parsed()) return cmd_tune(tune_series, tune_args);
        if (backtest->parsed()) return cmd_backtest(backtest_series, backtest_args);
        if (predict->parsed()) return cmd_predict(predict_series, predict_args);
        if (report->parsed()) return cmd_report(report_args);
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() != 0) {
            std::cerr << "error: category=usage: " << e.what() << "\n";
        }
        return app.exit(e);
    } catch (const pidcast::Error& e) {
        std::cerr << "error: category=" << to_string(e.category()) << ": " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: category=internal: " << e.what() << "\n";
        return 10;
    }
}
