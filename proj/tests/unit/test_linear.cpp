#include <cmath>

#include "doctest.h"
#include "rainbench/linear.hpp"
#include "rainbench/metrics.hpp"
#include "test_support.hpp"

using namespace rainbench;
using linear::CrossSet;

TEST_CASE("cross transform")
{
    const std::vector<double> thr{0.5, 0.5, 0.5};
    const std::vector<linear::Cross> one{{0, 1}};
    CHECK(linear::cross_transform(std::vector<double>{1.0, 0.0}, one, thr) == std::vector<double>{0.0});
    CHECK(linear::cross_transform(std::vector<double>{1.0, 1.0}, one, thr) == std::vector<double>{1.0});
    // Strict comparison: a value equal to its threshold binarizes to 0.
    CHECK(linear::cross_transform(std::vector<double>{0.5, 1.0}, one, thr) == std::vector<double>{0.0});
    CHECK(linear::make_crosses(3, CrossSet::all_pairs).size() == 3);
    CHECK(linear::make_crosses(36, CrossSet::primary_pairs).size() == 36);
    CHECK(linear::make_crosses(36, CrossSet::all_pairs).size() == 630);
    CHECK(linear::make_crosses(9, CrossSet::none).empty());

    Rng rng(1);
    const auto crosses = linear::make_crosses(5, CrossSet::all_pairs);
    const auto t = testing::random_vector(rng, 5);
    for (int i = 0; i < 20; ++i) {
        for (const double v : linear::cross_transform(testing::random_vector(rng, 5), crosses, t)) {
            CHECK((v == 0.0 || v == 1.0));
        }
    }
}

TEST_CASE("medians")
{
    Matrix x(4, 2, std::vector<double>{1, 10, 3, 30, 2, 20, 100, 0});
    CHECK(linear::column_medians(x) == std::vector<double>{2.5, 15.0});
}

TEST_CASE("noiseless line is fitted exactly")
{
    Matrix x(3, 1, std::vector<double>{0, 1, 2});
    const std::vector<double> y{1, 3, 5};
    const auto m = linear::fit_linear_regression(x, y);
    CHECK(m.w[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.b == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(metrics::evaluate_regressor(y, m.predict(x)).r2 >= 0.999999);
    CHECK_FALSE(m.ridge_fallback);
}

TEST_CASE("constant target gives zero weights and the mean")
{
    Rng rng(2);
    const auto x = testing::random_matrix(rng, 10, 2);
    const auto m = linear::fit_linear_regression(x, std::vector<double>(10, 4.0));
    CHECK(std::fabs(m.w[0]) < 1e-12);
    CHECK(std::fabs(m.w[1]) < 1e-12);
    CHECK(m.b == doctest::Approx(4.0));
}

TEST_CASE("residuals are orthogonal to the columns")
{
    Rng rng(3);
    const auto x = testing::random_matrix(rng, 50, 9, -10, 10);
    const auto y = testing::random_vector(rng, 50, -5, 5);
    const auto m = linear::fit_linear_regression(x, y);
    const auto p = m.predict(x);
    double scale = 0.0;
    for (std::size_t c = 0; c < 9; ++c) {
        double dot = 0.0;
        for (std::size_t r = 0; r < 50; ++r) {
            dot += (y[r] - p[r]) * x(r, c);
            scale = std::max(scale, std::fabs(x(r, c)));
        }
        CHECK(std::fabs(dot) < 1e-6);
    }
    double residual_sum = 0.0;
    for (std::size_t r = 0; r < 50; ++r) residual_sum += y[r] - p[r];
    CHECK(std::fabs(residual_sum) < 1e-6);
}

TEST_CASE("too few rows or collinear columns fall back to ridge and say so")
{
    Matrix x(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    const auto m = linear::fit_linear_regression(x, std::vector<double>{1, 2});
    CHECK(m.ridge_fallback);
    Matrix col(5, 2, std::vector<double>{1, 2, 2, 4, 3, 6, 4, 8, 5, 10});
    CHECK(linear::fit_linear_regression(col, std::vector<double>{1, 2, 3, 4, 5}).ridge_fallback);
}

TEST_CASE("wide classifier separates a separable set")
{
    Matrix x(0, 2);
    std::vector<double> y;
    Rng rng(4);
    while (y.size() < 40) {
        const double a = rng.uniform(-2, 2);
        const double b = rng.uniform(-2, 2);
        if (std::fabs(a + b) < 0.3) continue;
        x.append_row(std::vector<double>{a, b});
        y.push_back(a + b > 0 ? 1.0 : 0.0);
    }
    linear::WideOptions opt;
    opt.epochs = 2000;
    opt.lr = 0.5;
    const auto m = linear::fit_wide_classifier(x, y, opt);
    CHECK(metrics::evaluate_classifier(y, m.predict(x)).accuracy == 1.0);
}

TEST_CASE("zero epochs keep zero weights and predict the constant label 1")
{
    Rng rng(5);
    const auto x = testing::random_matrix(rng, 10, 3);
    const auto y = testing::random_labels(rng, 10);
    linear::WideOptions opt;
    opt.epochs = 0;
    opt.crosses = CrossSet::all_pairs;
    const auto m = linear::fit_wide_classifier(x, y, opt);
    for (const double w : m.w) CHECK(w == 0.0);
    for (const double p : m.predict(x)) CHECK(p == 1.0);
    CHECK(m.loss_trace.size() == 1);
    CHECK(m.final_loss() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("full-batch logistic loss is non-increasing")
{
    Rng rng(6);
    const auto x = testing::random_matrix(rng, 60, 4);
    const auto y = testing::random_labels(rng, 60);
    linear::WideOptions opt;
    opt.batch_size = 0;
    opt.epochs = 300;
    opt.lr = 0.1;
    opt.crosses = CrossSet::all_pairs;
    const auto m = linear::fit_wide_classifier(x, y, opt);
    for (std::size_t k = 1; k < m.loss_trace.size(); ++k) CHECK(m.loss_trace[k] <= m.loss_trace[k - 1]);
}

TEST_CASE("decision threshold: label 1 iff the logit is non-negative")
{
    Rng rng(7);
    const auto x = testing::random_matrix(rng, 30, 3);
    const auto y = testing::random_labels(rng, 30);
    const auto m = linear::fit_wide_classifier(x, y);
    for (std::size_t r = 0; r < 30; ++r) {
        const double z = m.logit(x.row(r));
        CHECK(m.predict(x.row(r)) == (linear::sigmoid(z) >= 0.5 ? 1.0 : 0.0));
        CHECK(m.predict(x.row(r)) == (z >= 0.0 ? 1.0 : 0.0));
    }
}

TEST_CASE("non-binary labels are rejected; JSON round trip")
{
    Matrix x(2, 1, std::vector<double>{0, 1});
    CHECK_THROWS_AS(linear::fit_wide_classifier(x, std::vector<double>{0, 2}), Error);
    linear::WideOptions opt;
    opt.crosses = CrossSet::all_pairs;
    Matrix x2(4, 2, std::vector<double>{0, 1, 1, 0, 1, 1, 0, 0});
    const auto m = linear::fit_wide_classifier(x2, std::vector<double>{0, 1, 1, 0}, opt);
    const auto back = linear::wide_from_json(linear::to_json(m));
    CHECK(back.w == m.w);
    CHECK(back.crosses == m.crosses);
    CHECK(back.thresholds == m.thresholds);
}
