#include <cmath>

#include "doctest.h"
#include "rainbench/metrics.hpp"
#include "rainbench/reservoir.hpp"
#include "test_support.hpp"

using namespace rainbench;

TEST_CASE("build rescales the adjacency to the requested spectral radius")
{
    for (const std::size_t m : {1u, 5u, 50u, 200u}) {
        CAPTURE(m);
        const auto res = reservoir::Reservoir::build(9, m, 1.0, 0.9, 0.1, 17);
        CHECK(std::fabs(reservoir::spectral_radius(res.adjacency()) - 0.9) < 1e-9);
    }
}

TEST_CASE("input weights lie in [0, delta] and builds are deterministic")
{
    const auto a = reservoir::Reservoir::build(4, 30, 0.25, 0.9, 0.2, 3);
    const auto b = reservoir::Reservoir::build(4, 30, 0.25, 0.9, 0.2, 3);
    CHECK(a.w_in() == b.w_in());
    CHECK(a.adjacency() == b.adjacency());
    for (const double v : a.w_in().data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 0.25);
    }
}

TEST_CASE("a zero-radius draw is regenerated and recorded")
{
    // A one-node reservoir with a small connection probability usually draws
    // an empty adjacency first.
    const auto res = reservoir::Reservoir::build(2, 1, 1.0, 0.9, 0.05, 5);
    CHECK(res.regenerations() > 0);
    CHECK(res.seed_used() == 5 + res.regenerations());
    CHECK(std::fabs(reservoir::spectral_radius(res.adjacency()) - 0.9) < 1e-12);
}

TEST_CASE("zero input from a zero state stays exactly zero")
{
    const auto res = reservoir::Reservoir::build(3, 20, 1.0, 0.9, 0.1, 1);
    const Matrix rows(15, 3, 0.0);
    const auto states = res.run_states(rows, 5);
    CHECK(states.rows() == 10);
    for (const double v : states.data()) CHECK(v == 0.0);
}

TEST_CASE("states stay inside (-1, 1) and identical streams give identical states")
{
    Rng rng(2);
    const auto res = reservoir::Reservoir::build(3, 40, 1.0, 0.9, 0.1, 8);
    const auto rows = testing::random_matrix(rng, 100, 3, -3, 3);
    const auto a = res.run_states(rows, 10);
    const auto b = res.run_states(rows, 10);
    CHECK(a == b);
    for (const double v : a.data()) {
        CHECK(v > -1.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("washout must leave at least one state")
{
    const auto res = reservoir::Reservoir::build(2, 5, 1.0, 0.9, 0.5, 1);
    CHECK_THROWS_AS(res.run_states(Matrix(3, 2), 3), Error);
}

TEST_CASE("fading memory: different initial states converge")
{
    Rng rng(31);
    const auto res = reservoir::Reservoir::build(4, 100, 1.0, 0.9, 0.1, 12);
    const auto rows = testing::random_matrix(rng, 200, 4, 0, 1);
    std::vector<double> s1 = testing::random_vector(rng, 100, -0.9, 0.9);
    std::vector<double> s2 = testing::random_vector(rng, 100, -0.9, 0.9);
    double initial = 0.0;
    for (std::size_t j = 0; j < 100; ++j) initial += (s1[j] - s2[j]) * (s1[j] - s2[j]);
    res.run_states(rows, 0, s1);
    res.run_states(rows, 0, s2);
    double final_dist = 0.0;
    for (std::size_t j = 0; j < 100; ++j) final_dist += (s1[j] - s2[j]) * (s1[j] - s2[j]);
    CHECK(std::sqrt(final_dist) < 1e-6 * std::sqrt(initial));
}

TEST_CASE("readout with M >= N and tiny ridge reproduces the targets")
{
    Rng rng(9);
    const auto states = testing::random_matrix(rng, 20, 50);
    Matrix targets(20, 2, 0.0);
    for (std::size_t i = 0; i < 20; ++i) targets(i, rng.below(2)) = 1.0;
    const auto w = reservoir::fit_readout(states, targets, 1e-12);
    for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            double out = 0.0;
            for (std::size_t j = 0; j < 50; ++j) out += states(i, j) * w(j, c);
            CHECK(std::fabs(out - targets(i, c)) < 1e-6);
        }
    }
}

TEST_CASE("readout residuals are orthogonal to the states up to the ridge term")
{
    Rng rng(10);
    const double lambda = 1e-3;
    const auto states = testing::random_matrix(rng, 60, 8);
    const auto targets = testing::random_matrix(rng, 60, 2);
    const auto w = reservoir::fit_readout(states, targets, lambda);
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t j = 0; j < 8; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < 60; ++i) {
                double out = 0.0;
                for (std::size_t q = 0; q < 8; ++q) out += states(i, q) * w(q, c);
                s += states(i, j) * (targets(i, c) - out);
            }
            CHECK(std::fabs(s - lambda * w(j, c)) < 1e-6);
        }
    }
}

TEST_CASE("a huge ridge drives the readout to zero and refits are identical")
{
    Rng rng(11);
    const auto states = testing::random_matrix(rng, 30, 10);
    const auto targets = testing::random_matrix(rng, 30, 2);
    const auto w = reservoir::fit_readout(states, targets, 1e12);
    for (const double v : w.data()) CHECK(std::fabs(v) < 1e-9);
    CHECK(reservoir::fit_readout(states, targets, 1e-6) == reservoir::fit_readout(states, targets, 1e-6));
}

TEST_CASE("RCC fits a large reservoir to its training labels")
{
    Rng rng(12);
    const auto x = testing::random_matrix(rng, 60, 3);
    const auto y = testing::random_labels(rng, 60);
    reservoir::RccOptions opt;
    opt.size = 200;
    opt.washout = 0;
    opt.ridge = 1e-10;
    opt.mode = reservoir::StateMode::reset;
    const auto m = reservoir::fit_rcc(x, y, opt, 4);
    CHECK(metrics::evaluate_classifier(y, m.predict(x)).accuracy == 1.0);
}

TEST_CASE("carry mode continues from the last training state")
{
    Rng rng(13);
    const auto x = testing::random_matrix(rng, 40, 3);
    const auto y = testing::random_labels(rng, 40);
    reservoir::RccOptions opt;
    opt.size = 30;
    const auto m = reservoir::fit_rcc(x, y, opt, 4);
    REQUIRE(m.last_state.size() == 30);
    const auto expected = m.reservoir.run_states(x, 0);
    for (std::size_t j = 0; j < 30; ++j) CHECK(m.last_state[j] == expected(39, j));
    const auto p = m.predict(x);
    CHECK(p.size() == 40);
    for (const double v : p) CHECK((v == 0.0 || v == 1.0));
}
