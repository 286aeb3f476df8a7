#include "pidcast/forecasters.hpp"

#include "pidcast/errors.hpp"
#include "text_util.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace pidcast {

namespace {

constexpr const char* kModelTag = "pidcast-model";
constexpr const char* kModelVersion = "v1";

void check_feature_shape(const FeatureSet& features, const LagWindowSpec& spec) {
    if (features.size() != spec.lag_sets.size()) {
        throw Error(ErrorCategory::validation, "feature set count mismatch");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != spec.lag_sets[i].size()) {
            throw Error(ErrorCategory::validation, "feature vector length mismatch");
        }
    }
}

std::vector<double> flatten(const FeatureSet& features) {
    std::vector<double> flat;
    for (const auto& row : features) flat.insert(flat.end(), row.begin(), row.end());
    return flat;
}

void require_fitted(bool fitted, const char* who) {
    if (!fitted) {
        throw Error(ErrorCategory::state, std::string(who) + " is not fitted");
    }
}

// Training samples (flattened lag features -> next value) drawn from real
// values only.
void make_samples(const Series& train, const LagWindowSpec& spec,
                  std::vector<std::vector<double>>& xs, std::vector<double>& ys) {
    const auto max_lag = static_cast<std::size_t>(spec.max_lag());
    if (train.size() <= max_lag) {
        throw Error(ErrorCategory::validation,
                    "training series length " + std::to_string(train.size()) +
                        " does not exceed max lag " + std::to_string(max_lag));
    }
    for (std::size_t t = max_lag; t < train.size(); ++t) {
        xs.push_back(flatten(build_features(train.values, t, spec)));
        ys.push_back(train.values[t]);
    }
}

void write_lag_spec(std::ostream& out, const LagWindowSpec& spec) {
    out << "lag_sets " << spec.lag_sets.size() << '\n';
    for (const auto& set : spec.lag_sets) {
        out << "lags " << set.size();
        for (int lag : set) out << ' ' << lag;
        out << '\n';
    }
}

LagWindowSpec read_lag_spec(std::istream& in) {
    std::string key;
    std::size_t n_sets = 0;
    if (!(in >> key >> n_sets) || key != "lag_sets") {
        throw Error(ErrorCategory::parse, "model file: expected lag_sets");
    }
    LagWindowSpec spec;
    for (std::size_t s = 0; s < n_sets; ++s) {
        std::size_t n = 0;
        if (!(in >> key >> n) || key != "lags") {
            throw Error(ErrorCategory::parse, "model file: expected lags");
        }
        std::vector<int> set(n);
        for (auto& lag : set) {
            if (!(in >> lag)) {
                throw Error(ErrorCategory::parse, "model file: truncated lag set");
            }
        }
        spec.lag_sets.push_back(std::move(set));
    }
    spec.validate();
    return spec;
}

void write_params(std::ostream& out, const std::vector<double>& params) {
    out << "params " << params.size() << '\n';
    for (double p : params) out << detail::format_double_g17(p) << '\n';
}

std::vector<double> read_params(std::istream& in) {
    std::string key;
    std::size_t n = 0;
    if (!(in >> key >> n) || key != "params") {
        throw Error(ErrorCategory::parse, "model file: expected params");
    }
    std::vector<double> params(n);
    for (auto& p : params) {
        std::string token;
        if (!(in >> token)) {
            throw Error(ErrorCategory::parse, "model file: truncated parameter block");
        }
        p = detail::parse_double_or_throw(token, "model parameters");
    }
    return params;
}

void write_scale(std::ostream& out, bool enabled, double lo, double hi) {
    out << "scale " << (enabled ? 1 : 0);
    if (enabled) out << ' ' << detail::format_double_g17(lo) << ' ' << detail::format_double_g17(hi);
    out << '\n';
}

void read_scale(std::istream& in, bool& enabled, double& lo, double& hi) {
    std::string key;
    int flag = 0;
    if (!(in >> key >> flag) || key != "scale") {
        throw Error(ErrorCategory::parse, "model file: expected scale");
    }
    enabled = flag != 0;
    if (enabled) {
        std::string a, b;
        if (!(in >> a >> b)) {
            throw Error(ErrorCategory::parse, "model file: truncated scale");
        }
        lo = detail::parse_double_or_throw(a, "scale bounds");
        hi = detail::parse_double_or_throw(b, "scale bounds");
    }
}

std::string read_header_kind(std::istream& in) {
    std::string tag, version, key, kind;
    if (!(in >> tag >> version) || tag != kModelTag) {
        throw Error(ErrorCategory::parse, "not a model file");
    }
    if (version != kModelVersion) {
        throw Error(ErrorCategory::parse, "unsupported model version " + version);
    }
    if (!(in >> key >> kind) || key != "kind") {
        throw Error(ErrorCategory::parse, "model file: expected kind");
    }
    return kind;
}

} // namespace

// ---------------------------------------------------------------------------
// SeasonalNaive

SeasonalNaive::SeasonalNaive(int period) : period_(period) {
    if (period < 2) {
        throw Error(ErrorCategory::validation, "seasonal naive period must be >= 2");
    }
    spec_ = LagWindowSpec::single({period});
}

FitReport SeasonalNaive::fit(const Series& train) {
    train.validate();
    return {};
}

double SeasonalNaive::predict_one(const FeatureSet& features) const {
    check_feature_shape(features, spec_);
    return features[0][0];
}

void SeasonalNaive::save(std::ostream& out) const {
    out << kModelTag << ' ' << kModelVersion << '\n';
    out << "kind seasonal_naive\n";
    out << "period " << period_ << '\n';
}

// ---------------------------------------------------------------------------
// LinearAR

LinearAR::LinearAR(LagWindowSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
}

FitReport LinearAR::fit(const Series& train) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    make_samples(train, spec_, xs, ys);

    const auto rows = static_cast<Eigen::Index>(xs.size());
    const auto cols = static_cast<Eigen::Index>(spec_.total_lags() + 1); // intercept last
    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols - 1; ++c) X(r, c) = xs[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        X(r, cols - 1) = 1.0;
        y(r) = ys[static_cast<std::size_t>(r)];
    }

    FitReport report;
    Eigen::VectorXd coef;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (rows >= cols && qr.rank() == cols) {
        coef = qr.solve(y);
    } else {
        // Singular normal equations: minimally perturbed ridge solve.
        const Eigen::MatrixXd xtx = X.transpose() * X;
        const double lambda = 1e-8 * xtx.trace() / static_cast<double>(cols);
        const Eigen::MatrixXd reg =
            xtx + lambda * Eigen::MatrixXd::Identity(cols, cols);
        coef = reg.ldlt().solve(X.transpose() * y);
        std::ostringstream note;
        note << "singular least squares; ridge fallback with lambda=" << lambda;
        report.notes = note.str();
    }

    for (Eigen::Index c = 0; c < cols; ++c) {
        if (!std::isfinite(coef(c))) {
            throw Error(ErrorCategory::numeric, "linear_ar fit produced non-finite coefficients");
        }
    }
    coefficients_.assign(coef.data(), coef.data() + cols);
    fitted_ = true;

    const Eigen::VectorXd residual = y - X * coef;
    report.final_loss = residual.squaredNorm() / static_cast<double>(rows);
    return report;
}

double LinearAR::predict_one(const FeatureSet& features) const {
    require_fitted(fitted_, "linear_ar");
    check_feature_shape(features, spec_);
    double acc = coefficients_.back(); // intercept
    std::size_t k = 0;
    for (const auto& row : features) {
        for (double v : row) acc += coefficients_[k++] * v;
    }
    if (!std::isfinite(acc)) {
        throw Error(ErrorCategory::numeric, "linear_ar prediction is non-finite");
    }
    return acc;
}

void LinearAR::set_coefficients(std::vector<double> coefficients) {
    if (coefficients.size() != spec_.total_lags() + 1) {
        throw Error(ErrorCategory::validation, "linear_ar coefficient count mismatch");
    }
    coefficients_ = std::move(coefficients);
    fitted_ = true;
}

void LinearAR::save(std::ostream& out) const {
    require_fitted(fitted_, "linear_ar");
    out << kModelTag << ' ' << kModelVersion << '\n';
    out << "kind linear_ar\n";
    write_lag_spec(out, spec_);
    write_params(out, coefficients_);
}

// ---------------------------------------------------------------------------
// ShallowNet

ShallowNet::ShallowNet(LagWindowSpec spec, ShallowNetConfig config)
    : spec_(std::move(spec)), config_(config) {
    spec_.validate();
    if (config_.hidden < 1) {
        throw Error(ErrorCategory::validation, "shallow_net hidden width must be >= 1");
    }
    shape_ = {static_cast<int>(spec_.total_lags()), config_.hidden, 1};
}

double ShallowNet::to_scaled(double v) const {
    if (!config_.minmax_scale) return v;
    const double span = scale_max_ - scale_min_;
    return span > 0.0 ? (v - scale_min_) / span : 0.0;
}

double ShallowNet::from_scaled(double v) const {
    if (!config_.minmax_scale) return v;
    return scale_min_ + v * (scale_max_ - scale_min_);
}

FitReport ShallowNet::fit(const Series& train) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    make_samples(train, spec_, xs, ys);

    if (config_.minmax_scale) {
        const auto [lo, hi] = std::minmax_element(train.values.begin(), train.values.end());
        scale_min_ = *lo;
        scale_max_ = *hi;
    }
    std::vector<std::vector<double>> targets;
    targets.reserve(ys.size());
    for (auto& x : xs) {
        for (auto& v : x) v = to_scaled(v);
    }
    for (double v : ys) targets.push_back({to_scaled(v)});

    params_ = mlp::init_params(shape_, config_.train.seed);
    const auto trained = mlp::train(shape_, params_, xs, targets, config_.train);
    fitted_ = true;
    return {trained.final_loss, trained.epochs, trained.notes};
}

double ShallowNet::predict_one(const FeatureSet& features) const {
    require_fitted(fitted_, "shallow_net");
    check_feature_shape(features, spec_);
    std::vector<double> x = flatten(features);
    for (auto& v : x) v = to_scaled(v);
    double out = 0.0;
    mlp::forward(shape_, params_, x, {&out, 1});
    const double value = from_scaled(out);
    if (!std::isfinite(value)) {
        throw Error(ErrorCategory::numeric, "shallow_net prediction is non-finite");
    }
    return value;
}

void ShallowNet::set_parameters(std::vector<double> params) {
    if (params.size() != shape_.param_count()) {
        throw Error(ErrorCategory::validation, "shallow_net parameter count mismatch");
    }
    params_ = std::move(params);
    fitted_ = true;
}

void ShallowNet::set_scale(double lo, double hi) {
    scale_min_ = lo;
    scale_max_ = hi;
}

void ShallowNet::save(std::ostream& out) const {
    require_fitted(fitted_, "shallow_net");
    out << kModelTag << ' ' << kModelVersion << '\n';
    out << "kind shallow_net\n";
    write_lag_spec(out, spec_);
    out << "hidden " << config_.hidden << '\n';
    write_scale(out, config_.minmax_scale, scale_min_, scale_max_);
    write_params(out, params_);
}

// ---------------------------------------------------------------------------
// BatchCorrector

BatchCorrector::BatchCorrector(int width, BatchCorrectorConfig config)
    : width_(width), config_(config) {
    if (width < 1) {
        throw Error(ErrorCategory::validation, "batch corrector width must be >= 1");
    }
    if (config_.hidden < 1) {
        throw Error(ErrorCategory::validation, "batch corrector hidden width must be >= 1");
    }
    shape_ = {width_, config_.hidden, width_};
}

FitReport BatchCorrector::fit_pairs(
    const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs) {
    if (pairs.empty()) {
        throw Error(ErrorCategory::validation, "batch corrector: no training pairs");
    }
    std::vector<std::vector<double>> xs, ys;
    xs.reserve(pairs.size());
    ys.reserve(pairs.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [raw, real] : pairs) {
        if (raw.size() != static_cast<std::size_t>(width_) ||
            real.size() != static_cast<std::size_t>(width_)) {
            throw Error(ErrorCategory::validation, "batch corrector: pair length mismatch");
        }
        for (double v : raw) { lo = std::min(lo, v); hi = std::max(hi, v); }
        for (double v : real) { lo = std::min(lo, v); hi = std::max(hi, v); }
        xs.push_back(raw);
        ys.push_back(real);
    }
    if (config_.minmax_scale) {
        scale_min_ = lo;
        scale_max_ = hi;
        const double span = hi > lo ? hi - lo : 1.0;
        for (auto& row : xs) {
            for (auto& v : row) v = (v - lo) / span;
        }
        for (auto& row : ys) {
            for (auto& v : row) v = (v - lo) / span;
        }
    }
    params_ = mlp::init_params(shape_, config_.train.seed);
    const auto trained = mlp::train(shape_, params_, xs, ys, config_.train);
    fitted_ = true;
    return {trained.final_loss, trained.epochs, trained.notes};
}

std::vector<double> BatchCorrector::correct_batch(std::span<const double> raw) const {
    require_fitted(fitted_, "batch corrector");
    if (raw.size() != static_cast<std::size_t>(width_)) {
        throw Error(ErrorCategory::validation,
                    "batch corrector expects " + std::to_string(width_) + " values, got " +
                        std::to_string(raw.size()));
    }
    std::vector<double> x(raw.begin(), raw.end());
    const double span = scale_max_ > scale_min_ ? scale_max_ - scale_min_ : 1.0;
    if (config_.minmax_scale) {
        for (auto& v : x) v = (v - scale_min_) / span;
    }
    std::vector<double> out(static_cast<std::size_t>(width_));
    mlp::forward(shape_, params_, x, out);
    if (config_.minmax_scale) {
        for (auto& v : out) v = scale_min_ + v * span;
    }
    for (double v : out) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCategory::numeric, "batch corrector output is non-finite");
        }
    }
    return out;
}

void BatchCorrector::set_parameters(std::vector<double> params) {
    if (params.size() != shape_.param_count()) {
        throw Error(ErrorCategory::validation, "batch corrector parameter count mismatch");
    }
    params_ = std::move(params);
    fitted_ = true;
}

void BatchCorrector::save(std::ostream& out) const {
    require_fitted(fitted_, "batch corrector");
    out << kModelTag << ' ' << kModelVersion << '\n';
    out << "kind batch_corrector\n";
    out << "width " << width_ << '\n';
    out << "hidden " << config_.hidden << '\n';
    write_scale(out, config_.minmax_scale, scale_min_, scale_max_);
    write_params(out, params_);
}

BatchCorrector BatchCorrector::load(std::istream& in) {
    const std::string kind = read_header_kind(in);
    if (kind != "batch_corrector") {
        throw Error(ErrorCategory::parse, "expected a batch_corrector model, got " + kind);
    }
    std::string key;
    int width = 0, hidden = 0;
    if (!(in >> key >> width) || key != "width") {
        throw Error(ErrorCategory::parse, "model file: expected width");
    }
    if (!(in >> key >> hidden) || key != "hidden") {
        throw Error(ErrorCategory::parse, "model file: expected hidden");
    }
    BatchCorrectorConfig config;
    config.hidden = hidden;
    double lo = 0.0, hi = 1.0;
    bool scaled = false;
    read_scale(in, scaled, lo, hi);
    config.minmax_scale = scaled;
    BatchCorrector corrector(width, config);
    corrector.scale_min_ = lo;
    corrector.scale_max_ = hi;
    corrector.set_parameters(read_params(in));
    return corrector;
}

// ---------------------------------------------------------------------------
// Loading

std::unique_ptr<BaseForecaster> load_forecaster(std::istream& in) {
    const std::string kind = read_header_kind(in);
    std::string key;
    if (kind == "seasonal_naive") {
        int period = 0;
        if (!(in >> key >> period) || key != "period") {
            throw Error(ErrorCategory::parse, "model file: expected period");
        }
        return std::make_unique<SeasonalNaive>(period);
    }
    if (kind == "linear_ar") {
        auto spec = read_lag_spec(in);
        auto model = std::make_unique<LinearAR>(std::move(spec));
        model->set_coefficients(read_params(in));
        return model;
    }
    if (kind == "shallow_net") {
        auto spec = read_lag_spec(in);
        int hidden = 0;
        if (!(in >> key >> hidden) || key != "hidden") {
            throw Error(ErrorCategory::parse, "model file: expected hidden");
        }
        ShallowNetConfig config;
        config.hidden = hidden;
        double lo = 0.0, hi = 1.0;
        bool scaled = false;
        read_scale(in, scaled, lo, hi);
        config.minmax_scale = scaled;
        auto model = std::make_unique<ShallowNet>(std::move(spec), config);
        model->set_scale(lo, hi);
        model->set_parameters(read_params(in));
        return model;
    }
    throw Error(ErrorCategory::parse, "unknown model kind '" + kind + "'");
}

std::unique_ptr<BaseForecaster> load_forecaster_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    return load_forecaster(in);
}

BatchCorrector load_corrector_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCategory::io, "cannot open " + path.string());
    }
    return BatchCorrector::load(in);
}

} // namespace pidcast
