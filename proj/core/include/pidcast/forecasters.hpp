#pragma once

#include "pidcast/mlp.hpp"
#include "pidcast/series.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <utility>

namespace pidcast {

struct FitReport {
    double final_loss = 0.0; // mean squared training residual
    int epochs = 0;          // 0 for closed-form fits
    std::string notes;
};

/// A one-step-ahead predictor. Fitted forecasters are immutable and may be
/// shared across threads; predict_one is deterministic given fixed
/// parameters and features.
class BaseForecaster {
public:
    virtual ~BaseForecaster() = default;

    virtual FitReport fit(const Series& train) = 0;

    /// Raw prediction for the step whose lag features are given. The feature
    /// shape must match lag_spec(); the result is finite.
    virtual double predict_one(const FeatureSet& features) const = 0;

    virtual const LagWindowSpec& lag_spec() const = 0;
    virtual std::size_t parameter_count() const = 0;
    virtual std::string name() const = 0;
    virtual bool fitted() const = 0;
    virtual void save(std::ostream& out) const = 0;
};

/// Predicts the value one period back. No fitted parameters; the control
/// baseline that exposes pure error accumulation. fit() is a validating
/// no-op, so the model is usable as constructed.
class SeasonalNaive final : public BaseForecaster {
public:
    explicit SeasonalNaive(int period);

    FitReport fit(const Series& train) override;
    double predict_one(const FeatureSet& features) const override;
    const LagWindowSpec& lag_spec() const override { return spec_; }
    std::size_t parameter_count() const override { return 0; }
    std::string name() const override { return "seasonal_naive"; }
    bool fitted() const override { return true; }
    void save(std::ostream& out) const override;

    int period() const { return period_; }

private:
    int period_;
    LagWindowSpec spec_;
};

/// Linear autoregression on the configured lag windows, fitted by ordinary
/// least squares. Singular normal equations fall back to a ridge solve with
/// lambda = 1e-8 * trace(X'X) / cols, noted in the fit report.
class LinearAR final : public BaseForecaster {
public:
    explicit LinearAR(LagWindowSpec spec);

    FitReport fit(const Series& train) override;
    double predict_one(const FeatureSet& features) const override;
    const LagWindowSpec& lag_spec() const override { return spec_; }
    std::size_t parameter_count() const override { return coefficients_.size(); }
    std::string name() const override { return "linear_ar"; }
    bool fitted() const override { return fitted_; }
    void save(std::ostream& out) const override;

    /// Lag coefficients in spec order, intercept last.
    const std::vector<double>& coefficients() const { return coefficients_; }
    void set_coefficients(std::vector<double> coefficients);

private:
    LagWindowSpec spec_;
    std::vector<double> coefficients_;
    bool fitted_ = false;
};

struct ShallowNetConfig {
    int hidden = 16;
    bool minmax_scale = false; // scale inputs/targets to [0,1]; inverse applied inside predict_one
    mlp::TrainConfig train;
};

/// One-hidden-layer net over the flattened lag features, trained by plain
/// gradient descent with step-halving.
class ShallowNet final : public BaseForecaster {
public:
    ShallowNet(LagWindowSpec spec, ShallowNetConfig config = {});

    FitReport fit(const Series& train) override;
    double predict_one(const FeatureSet& features) const override;
    const LagWindowSpec& lag_spec() const override { return spec_; }
    std::size_t parameter_count() const override { return shape_.param_count(); }
    std::string name() const override { return "shallow_net"; }
    bool fitted() const override { return fitted_; }
    void save(std::ostream& out) const override;

    const mlp::Shape& shape() const { return shape_; }
    const std::vector<double>& parameters() const { return params_; }
    void set_parameters(std::vector<double> params);
    void set_scale(double lo, double hi);

private:
    double to_scaled(double v) const;
    double from_scaled(double v) const;

    LagWindowSpec spec_;
    ShallowNetConfig config_;
    mlp::Shape shape_;
    std::vector<double> params_;
    double scale_min_ = 0.0;
    double scale_max_ = 1.0;
    bool fitted_ = false;
};

struct BatchCorrectorConfig {
    int hidden = 48;
    bool minmax_scale = true;
    mlp::TrainConfig train;
};

/// Batch post-corrector: maps a full round of raw predictions to a corrected
/// round in one pass. Applied only after a complete raw forecast exists.
class BatchCorrector {
public:
    BatchCorrector(int width, BatchCorrectorConfig config = {});

    /// Trains on (raw round, real round) pairs.
    FitReport fit_pairs(const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs);

    std::vector<double> correct_batch(std::span<const double> raw) const;

    int width() const { return width_; }
    std::size_t parameter_count() const { return shape_.param_count(); }
    bool fitted() const { return fitted_; }
    void save(std::ostream& out) const;
    static BatchCorrector load(std::istream& in);

    const mlp::Shape& shape() const { return shape_; }
    const std::vector<double>& parameters() const { return params_; }
    void set_parameters(std::vector<double> params);

private:
    int width_;
    BatchCorrectorConfig config_;
    mlp::Shape shape_;
    std::vector<double> params_;
    double scale_min_ = 0.0;
    double scale_max_ = 1.0;
    bool fitted_ = false;
};

/// Reads any saved BaseForecaster back from the versioned flat text format.
std::unique_ptr<BaseForecaster> load_forecaster(std::istream& in);
std::unique_ptr<BaseForecaster> load_forecaster_file(const std::filesystem::path& path);
BatchCorrector load_corrector_file(const std::filesystem::path& path);

} // namespace pidcast
