#include <cmath>

#include "doctest.h"
#include "rainbench/normalize.hpp"
#include "test_support.hpp"

using namespace rainbench;
using normalize::Kind;

namespace {
Matrix column(std::vector<double> v)
{
    const std::size_t n = v.size();
    return Matrix(n, 1, std::move(v));
}
} // namespace

TEST_CASE("fitted statistics")
{
    const auto mm = normalize::fit(column({1, 2, 3}), Kind::minmax);
    CHECK(mm.lower[0] == 1.0);
    CHECK(mm.upper[0] == 3.0);
    const auto zs = normalize::fit(column({1, 2, 3}), Kind::zscore);
    CHECK(zs.lower[0] == 2.0);
    CHECK(zs.upper[0] == doctest::Approx(0.81650).epsilon(1e-5));
    CHECK(normalize::fit(column({5, 5, 5}), Kind::zscore).upper[0] == 0.0);
}

TEST_CASE("applied values")
{
    const auto x = column({1, 2, 3});
    CHECK(normalize::apply(normalize::fit(x, Kind::minmax), x).data() == std::vector<double>{0.0, 0.5, 1.0});
    const auto z = normalize::apply(normalize::fit(x, Kind::zscore), x);
    CHECK(z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(z(1, 0) == 0.0);
    CHECK(z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
    CHECK(normalize::apply(normalize::fit(x, Kind::none), x) == x);
}

TEST_CASE("degenerate features map to zero")
{
    const auto x = column({5, 5, 5});
    for (const Kind k : {Kind::minmax, Kind::zscore}) {
        const auto out = normalize::apply(normalize::fit(x, k), x);
        for (const double v : out.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("train-scope properties and inverse on random data")
{
    Rng rng(5);
    const auto x = testing::random_matrix(rng, 200, 9, -40, 90);
    const auto mm = normalize::apply(normalize::fit(x, Kind::minmax), x);
    for (const double v : mm.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const auto fitted = normalize::fit(x, Kind::zscore);
    const auto z = normalize::apply(fitted, x);
    for (std::size_t c = 0; c < 9; ++c) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t r = 0; r < 200; ++r) mean += z(r, c);
        mean /= 200.0;
        for (std::size_t r = 0; r < 200; ++r) sq += (z(r, c) - mean) * (z(r, c) - mean);
        CHECK(std::fabs(mean) < 1e-9);
        CHECK(std::fabs(std::sqrt(sq / 200.0) - 1.0) < 1e-9);
    }
    for (const Kind k : {Kind::minmax, Kind::zscore}) {
        const auto n = normalize::fit(x, k);
        const auto back = normalize::inverse(n, normalize::apply(n, x));
        for (std::size_t i = 0; i < x.data().size(); ++i) CHECK(std::fabs(back.data()[i] - x.data()[i]) < 1e-9);
    }
}

TEST_CASE("dataset application leaves targets alone and records the kind")
{
    data::HourlyDataset ds;
    ds.features = column({1, 2, 3});
    ds.feature_names = {"tmpf"};
    ds.task = data::Task::regression;
    ds.target = {0.5, 0.6, 0.7};
    const auto n = normalize::fit(ds, Kind::zscore);
    const auto out = normalize::apply(n, ds);
    CHECK(out.target == ds.target);
    CHECK(out.normalization == "zscore");
}

TEST_CASE("width mismatch and JSON round trip")
{
    const auto n = normalize::fit(Matrix(3, 2, 1.0), Kind::minmax);
    CHECK_THROWS_AS(normalize::apply(n, Matrix(3, 3)), Error);
    CHECK(normalize::normalizer_from_json(normalize::to_json(n)) == n);
    CHECK(normalize::parse_kind("zscore") == Kind::zscore);
    CHECK_THROWS_AS(normalize::parse_kind("robust"), Error);
}
