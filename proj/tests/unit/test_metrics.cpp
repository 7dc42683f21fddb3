#include <cmath>

#include "doctest.h"
#include "rainbench/metrics.hpp"
#include "test_support.hpp"

using namespace rainbench;

TEST_CASE("accuracy")
{
    const std::vector<double> y{1, 0, 1, 1};
    CHECK(metrics::evaluate_classifier(y, std::vector<double>{1, 0, 0, 1}).accuracy == 0.75);
    CHECK(metrics::evaluate_classifier(y, y).accuracy == 1.0);
    CHECK(metrics::evaluate_classifier(y, std::vector<double>{0, 1, 0, 0}).accuracy == 0.0);
    CHECK_THROWS_AS(metrics::evaluate_classifier(y, std::vector<double>{1, 0}), Error);
}

TEST_CASE("regression hand fixtures")
{
    const std::vector<double> y{0, 1};
    const auto r = metrics::evaluate_regressor(y, std::vector<double>{0.5, 0.5});
    CHECK(r.mse == 0.25);
    CHECK(r.rmse == 0.5);
    CHECK(r.r2 == 0.0);
    CHECK_FALSE(r.pcc_valid);

    const std::vector<double> z{1, 4, 2, 8};
    const auto perfect = metrics::evaluate_regressor(z, z);
    CHECK(perfect.r2 == 1.0);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.pcc == doctest::Approx(1.0));
    CHECK_THROWS_AS(metrics::evaluate_regressor(std::vector<double>{1}, std::vector<double>{1}), Error);
}

TEST_CASE("constant truth makes R2 invalid rather than NaN")
{
    const auto r = metrics::evaluate_regressor(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3});
    CHECK_FALSE(r.r2_valid);
    CHECK(r.mse == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("identities on random vectors")
{
    Rng rng(17);
    for (int t = 0; t < 50; ++t) {
        const auto y = testing::random_vector(rng, 30, -3, 3);
        const auto p = testing::random_vector(rng, 30, -3, 3);
        const auto r = metrics::evaluate_regressor(y, p);
        CHECK(std::fabs(r.rmse * r.rmse - r.mse) < 1e-12);
        CHECK(r.r2 <= 1.0);
        CHECK(r.pcc >= -1.0);
        CHECK(r.pcc <= 1.0);

        double mean = 0.0;
        for (const double v : y) mean += v;
        mean /= 30.0;
        const auto base = metrics::evaluate_regressor(y, std::vector<double>(30, mean));
        CHECK(std::fabs(base.r2) < 1e-12);

        std::vector<double> affine(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) affine[i] = 3.5 * p[i] + 7.0;
        CHECK(std::fabs(metrics::pearson(y, affine) - metrics::pearson(y, p)) < 1e-9);
        std::vector<double> line(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) line[i] = 2.0 * y[i] + 1.0;
        CHECK(metrics::pearson(y, line) == doctest::Approx(1.0).epsilon(1e-12));
    }
}
