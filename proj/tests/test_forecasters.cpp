#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pidcast/errors.hpp"
#include "pidcast/forecasters.hpp"
#include "support/synthetic.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace pidcast;

namespace {

// Independent least-squares oracle: long-double normal equations solved by
// Gaussian elimination with partial pivoting. Shares nothing with the
// library's solver.
std::vector<double> brute_force_ols(const std::vector<std::vector<double>>& rows,
                                    const std::vector<double>& y) {
    const std::size_t cols = rows[0].size() + 1; // intercept last
    std::vector<std::vector<long double>> a(cols, std::vector<long double>(cols + 1, 0.0L));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<long double> x(cols);
        for (std::size_t c = 0; c + 1 < cols; ++c) x[c] = rows[r][c];
        x[cols - 1] = 1.0L;
        for (std::size_t i = 0; i < cols; ++i) {
            for (std::size_t j = 0; j < cols; ++j) a[i][j] += x[i] * x[j];
            a[i][cols] += x[i] * static_cast<long double>(y[r]);
        }
    }
    for (std::size_t p = 0; p < cols; ++p) {
        std::size_t pivot = p;
        for (std::size_t r = p + 1; r < cols; ++r) {
            if (std::abs(a[r][p]) > std::abs(a[pivot][p])) pivot = r;
        }
        std::swap(a[p], a[pivot]);
        for (std::size_t r = 0; r < cols; ++r) {
            if (r == p) continue;
            const long double f = a[r][p] / a[p][p];
            for (std::size_t c = p; c <= cols; ++c) a[r][c] -= f * a[p][c];
        }
    }
    std::vector<double> coef(cols);
    for (std::size_t i = 0; i < cols; ++i) coef[i] = static_cast<double>(a[i][cols] / a[i][i]);
    return coef;
}

} // namespace

TEST_CASE("seasonal naive predicts the value one period back") {
    SeasonalNaive model(4);
    model.fit(testing::periodic_series(4, 3));
    CHECK(model.predict_one({{42.5}}) == 42.5);
    CHECK(model.parameter_count() == 0);
    CHECK_THROWS_AS(static_cast<void>(model.predict_one({{1.0, 2.0}})), Error);
}

TEST_CASE("seasonal naive has zero one-step error on an exactly periodic series") {
    const int T = 24;
    const Series s = testing::periodic_series(T, 6);
    SeasonalNaive model(T);
    model.fit(s);
    for (std::size_t t = static_cast<std::size_t>(T); t < s.size(); ++t) {
        const auto features = build_features(s.values, t, model.lag_spec());
        CHECK(model.predict_one(features) == s.values[t]);
    }
}

TEST_CASE("linear AR matches the brute-force least-squares oracle") {
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> val_dist(10.0, 50.0);
    std::uniform_int_distribution<int> lag_count_dist(1, 5);
    std::uniform_int_distribution<int> rows_dist(20, 50);
    for (int trial = 0; trial < 25; ++trial) {
        const int n_lags = lag_count_dist(rng);
        std::vector<int> lags;
        for (int j = 1; j <= n_lags; ++j) lags.push_back(j);
        const auto spec = LagWindowSpec::single(lags);
        const int rows = rows_dist(rng);
        std::vector<double> values(static_cast<std::size_t>(rows));
        for (auto& v : values) v = val_dist(rng);
        const Series train = testing::make_series(values, 5);

        LinearAR model(spec);
        model.fit(train);

        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        for (std::size_t t = static_cast<std::size_t>(n_lags); t < values.size(); ++t) {
            std::vector<double> row;
            for (int lag : lags) row.push_back(values[t - static_cast<std::size_t>(lag)]);
            xs.push_back(row);
            ys.push_back(values[t]);
        }
        const auto expected = brute_force_ols(xs, ys);
        REQUIRE(model.coefficients().size() == expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) {
            CHECK(model.coefficients()[i] == doctest::Approx(expected[i]).epsilon(1e-8));
        }
    }
}

TEST_CASE("linear AR on an exactly periodic series recovers the seasonal identity") {
    const int T = 12;
    const Series s = testing::periodic_series(T, 8);
    LinearAR model(LagWindowSpec::single({T}));
    const auto report = model.fit(s);
    CHECK(model.coefficients()[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(model.coefficients()[1]) < 1e-6);
    CHECK(report.final_loss < 1e-12);
}

TEST_CASE("linear AR residual mean on train is absorbed by the intercept") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(50.0, 150.0);
    std::vector<double> values(200);
    for (auto& v : values) v = dist(rng);
    const Series train = testing::make_series(values, 10);
    LinearAR model(LagWindowSpec::single({1, 2, 3}));
    model.fit(train);

    double residual_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 3; t < values.size(); ++t) {
        const auto features = build_features(values, t, model.lag_spec());
        residual_sum += model.predict_one(features) - values[t];
        ++n;
    }
    CHECK(std::abs(residual_sum / static_cast<double>(n)) < 1e-6);
}

TEST_CASE("linear AR on a constant series falls back to ridge and predicts the constant") {
    const Series train = testing::make_series(std::vector<double>(60, 7.5), 6);
    LinearAR model(LagWindowSpec::single({1, 2}));
    const auto report = model.fit(train);
    CHECK(report.notes.find("ridge") != std::string::npos);
    CHECK(model.predict_one({{7.5, 7.5}}) == doctest::Approx(7.5).epsilon(1e-6));
}

TEST_CASE("linear AR prediction is the dot product plus intercept") {
    LinearAR model(LagWindowSpec::single({1, 2}));
    model.set_coefficients({0.5, 0.5, 0.0});
    CHECK(model.predict_one({{10.0, 20.0}}) == 15.0);
}

TEST_CASE("mlp analytic gradients agree with central finite differences") {
    std::mt19937 rng(303);
    std::uniform_int_distribution<int> in_dist(1, 6);
    std::uniform_int_distribution<int> hid_dist(1, 8);
    std::uniform_int_distribution<int> out_dist(1, 3);
    std::uniform_int_distribution<int> n_dist(3, 12);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double h = 1e-5;

    for (int trial = 0; trial < 20; ++trial) {
        const mlp::Shape shape{in_dist(rng), hid_dist(rng), out_dist(rng)};
        const int n = n_dist(rng);
        std::vector<std::vector<double>> xs, ys;
        for (int s = 0; s < n; ++s) {
            std::vector<double> x(static_cast<std::size_t>(shape.in));
            std::vector<double> y(static_cast<std::size_t>(shape.out));
            for (auto& v : x) v = dist(rng);
            for (auto& v : y) v = dist(rng);
            xs.push_back(x);
            ys.push_back(y);
        }
        std::vector<double> params = mlp::init_params(shape, rng());
        std::vector<double> grad(params.size());
        mlp::loss_and_gradient(shape, params, xs, ys, grad);

        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double> plus = params, minus = params;
            plus[i] += h;
            minus[i] -= h;
            const double fd = (mlp::loss(shape, plus, xs, ys) - mlp::loss(shape, minus, xs, ys)) /
                              (2.0 * h);
            const double scale = std::max({std::abs(grad[i]), std::abs(fd), 1e-3});
            CHECK(std::abs(grad[i] - fd) <= 1e-4 * scale);
        }
    }
}

TEST_CASE("shallow net with all-zero weights outputs the output-layer bias") {
    ShallowNet net(LagWindowSpec::single({1, 2, 3}), {.hidden = 4, .minmax_scale = false, .train = {}});
    std::vector<double> params(net.shape().param_count(), 0.0);
    params.back() = 2.5; // output bias is the last parameter
    net.set_parameters(params);
    CHECK(net.predict_one({{9.0, 9.0, 9.0}}) == 2.5);
    CHECK(net.parameter_count() == (3 + 1) * 4 + (4 + 1) * 1);
}

TEST_CASE("shallow net training reduces the loss and stays deterministic") {
    const int T = 12;
    Series train = testing::periodic_series(T, 30);
    ShallowNetConfig config;
    config.hidden = 6;
    config.minmax_scale = true;
    config.train.max_epochs = 400;
    config.train.seed = 5;
    ShallowNet net(LagWindowSpec::single({1, T}), config);
    const auto report = net.fit(train);
    CHECK(report.final_loss < 0.01); // scaled units
    CHECK(report.epochs > 0);

    ShallowNet net2(LagWindowSpec::single({1, T}), config);
    net2.fit(train);
    CHECK(net.parameters() == net2.parameters());
}

TEST_CASE("batch corrector: zero parameters yield the bias vector") {
    BatchCorrector corrector(5, {.hidden = 3, .minmax_scale = false, .train = {}});
    corrector.set_parameters(std::vector<double>(corrector.parameter_count(), 0.0));
    const auto out = corrector.correct_batch(std::vector<double>{1, 2, 3, 4, 5});
    CHECK(out == std::vector<double>(5, 0.0));
    CHECK(corrector.parameter_count() == (5 + 1) * 3 + (3 + 1) * 5);
}

TEST_CASE("batch corrector learns the identity task") {
    const int n = 8;
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    for (int p = 0; p < 12; ++p) {
        std::vector<double> raw(static_cast<std::size_t>(n));
        for (auto& v : raw) v = dist(rng);
        pairs.emplace_back(raw, raw); // real == raw exactly
    }
    BatchCorrectorConfig config;
    config.hidden = 24;
    config.minmax_scale = false;
    config.train.max_epochs = 20000;
    config.train.learning_rate = 1.0;
    config.train.patience = 1000000;
    config.train.validation_fraction = 0.0;
    config.train.seed = 3;
    BatchCorrector corrector(n, config);
    corrector.fit_pairs(pairs);

    double abs_sum = 0.0;
    std::size_t count = 0;
    for (const auto& [raw, real] : pairs) {
        const auto corrected = corrector.correct_batch(raw);
        for (int i = 0; i < n; ++i) {
            abs_sum += std::abs(corrected[static_cast<std::size_t>(i)] -
                                raw[static_cast<std::size_t>(i)]);
            ++count;
        }
    }
    CHECK(abs_sum / static_cast<double>(count) < 1e-3);
}

TEST_CASE("batch corrector rejects a wrong-length round") {
    BatchCorrector corrector(96, {});
    corrector.set_parameters(std::vector<double>(corrector.parameter_count(), 0.0));
    CHECK_THROWS_AS(static_cast<void>(corrector.correct_batch(std::vector<double>(95, 1.0))),
                    Error);
}

TEST_CASE("model save/load round-trips parameters bit-exactly") {
    SUBCASE("linear AR") {
        LinearAR model(LagWindowSpec::single({1, 2, 3}));
        model.set_coefficients({0.1, -0.25, 1.0 / 3.0, 12.3456789012345678});
        std::stringstream stream;
        model.save(stream);
        const auto loaded = load_forecaster(stream);
        CHECK(loaded->name() == "linear_ar");
        CHECK(dynamic_cast<LinearAR&>(*loaded).coefficients() == model.coefficients());
    }
    SUBCASE("seasonal naive") {
        SeasonalNaive model(96);
        std::stringstream stream;
        model.save(stream);
        const auto loaded = load_forecaster(stream);
        CHECK(loaded->name() == "seasonal_naive");
        CHECK(dynamic_cast<SeasonalNaive&>(*loaded).period() == 96);
    }
    SUBCASE("shallow net") {
        ShallowNetConfig config;
        config.hidden = 3;
        config.minmax_scale = true;
        ShallowNet net(LagWindowSpec::single({1, 4}), config);
        Series train = testing::periodic_series(4, 20);
        config.train.max_epochs = 50;
        net.fit(train);
        std::stringstream stream;
        net.save(stream);
        const auto loaded = load_forecaster(stream);
        CHECK(dynamic_cast<ShallowNet&>(*loaded).parameters() == net.parameters());
        const FeatureSet features{{101.0, 99.0}};
        CHECK(loaded->predict_one(features) == net.predict_one(features));
    }
    SUBCASE("batch corrector") {
        BatchCorrector corrector(4, {.hidden = 2, .minmax_scale = false, .train = {}});
        std::vector<double> params(corrector.parameter_count());
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i] = (static_cast<double>(i) - 7.0) / 7.0;
        }
        corrector.set_parameters(params);
        std::stringstream stream;
        corrector.save(stream);
        const auto loaded = BatchCorrector::load(stream);
        CHECK(loaded.parameters() == corrector.parameters());
    }
}

TEST_CASE("fit rejects a series shorter than the lag window") {
    LinearAR model(LagWindowSpec::single({10}));
    const Series tiny = testing::make_series({1, 2, 3}, 2);
    CHECK_THROWS_AS(static_cast<void>(model.fit(tiny)), Error);
}
