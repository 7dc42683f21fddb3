#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rainbench/recurrent.hpp"
#include "test_support.hpp"

using namespace rainbench;
using recurrent::CellKind;
using recurrent::Head;

namespace {

recurrent::SequenceSet random_set(Rng& rng, std::size_t rows, std::size_t d, std::size_t length, bool labels)
{
    const auto x = testing::random_matrix(rng, rows, d, -2, 2);
    const auto y = labels ? testing::random_labels(rng, rows) : testing::random_vector(rng, rows);
    return recurrent::make_sequences(x, y, length);
}

} // namespace

TEST_CASE("window counting and overlap")
{
    Matrix x(10, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = static_cast<double>(i);
        x(i, 1) = -static_cast<double>(i);
    }
    std::vector<double> y(10);
    std::iota(y.begin(), y.end(), 100.0);
    const auto s = recurrent::make_sequences(x, y, 3);
    REQUIRE(s.size() == 8);
    CHECK(s.targets.front() == 102.0);
    const auto w0 = s.window(0);
    const auto w1 = s.window(1);
    CHECK(w0[0] == 0.0);
    CHECK(w0[4] == 2.0);
    // Windows i and i + 1 share L - 1 rows.
    for (std::size_t k = 0; k < 4; ++k) CHECK(w0[2 + k] == w1[k]);

    CHECK(recurrent::make_sequences(x, y, 1).size() == 10);
    CHECK_THROWS_AS(recurrent::make_sequences(x, y, 11), Error);
}

TEST_CASE("windows above a threshold")
{
    Matrix x(5, 1);
    const std::vector<double> y{0.0, 0.01, 0.02, 0.0, 0.5};
    const auto s = recurrent::make_sequences(x, y, 2).above(0.01);
    REQUIRE(s.size() == 2);
    CHECK(s.ends == std::vector<std::size_t>{2, 4});
}

TEST_CASE("all-zero LSTM parameters")
{
    const recurrent::RecurrentModel m(CellKind::lstm, 3, 2, Head::logistic);
    const std::vector<double> x{0.5, -1.0, 2.0};
    const auto s = m.cell_step(x, {{0.0, 0.0}, {0.0, 0.0}});
    CHECK(s.c == std::vector<double>{0.0, 0.0});
    CHECK(s.h == std::vector<double>{0.0, 0.0});
    // The forget gate is 0.5, so a carried cell state halves.
    const auto t = m.cell_step(x, {{0.0, 0.0}, {0.8, -0.4}});
    CHECK(t.c == std::vector<double>{0.4, -0.2});
}

TEST_CASE("one-unit LSTM matches a hand-computed step")
{
    recurrent::RecurrentModel m(CellKind::lstm, 1, 1, Head::affine);
    // Blocks f, i, candidate, o: U, W, b each.
    const double u[4] = {0.5, -0.3, 0.8, 0.2};
    const double w[4] = {0.1, 0.4, -0.6, 0.9};
    const double b[4] = {0.05, -0.1, 0.2, 0.0};
    for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t off = m.block_offset(0, g);
        m.parameters()[off] = u[g];
        m.parameters()[off + 1] = w[g];
        m.parameters()[off + 2] = b[g];
    }
    const double x = 0.7, h = -0.2, c = 0.3;
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double f = sig(u[0] * x + w[0] * h + b[0]);
    const double i = sig(u[1] * x + w[1] * h + b[1]);
    const double cand = std::tanh(u[2] * x + w[2] * h + b[2]);
    const double o = sig(u[3] * x + w[3] * h + b[3]);
    const double c_new = f * c + i * cand;
    const double h_new = std::tanh(c_new) * o;
    const auto s = m.cell_step(std::vector<double>{x}, {{h}, {c}});
    CHECK(std::fabs(s.c[0] - c_new) < 1e-12);
    CHECK(std::fabs(s.h[0] - h_new) < 1e-12);
}

TEST_CASE("one-unit GRU matches a hand-computed step")
{
    recurrent::RecurrentModel m(CellKind::gru, 1, 1, Head::affine, false);
    const double u[3] = {0.5, -0.3, 0.8};
    const double w[3] = {0.1, 0.4, -0.6};
    for (std::size_t g = 0; g < 3; ++g) {
        const std::size_t off = m.block_offset(0, g);
        m.parameters()[off] = u[g];
        m.parameters()[off + 1] = w[g];
    }
    const double x = -0.4, h = 0.6;
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const double z = sig(u[0] * x + w[0] * h);
    const double r = sig(u[1] * x + w[1] * h);
    const double cand = std::tanh(u[2] * x + w[2] * (r * h));
    const double h_new = z * h + (1.0 - z) * cand;
    const auto s = m.cell_step(std::vector<double>{x}, {{h}, {}});
    CHECK(std::fabs(s.h[0] - h_new) < 1e-12);
    CHECK(s.c.empty());
}

TEST_CASE("GRU has fewer parameters than LSTM, BiLSTM readout is 2H")
{
    const recurrent::RecurrentModel lstm(CellKind::lstm, 9, 9, Head::logistic);
    const recurrent::RecurrentModel gru(CellKind::gru, 9, 9, Head::logistic);
    const recurrent::RecurrentModel bi(CellKind::bilstm, 9, 9, Head::logistic);
    CHECK(gru.parameter_count() < lstm.parameter_count());
    CHECK(bi.parameter_count() - bi.readout_offset() == 2 * 9 + 1);
    CHECK(lstm.parameter_count() == 4 * (81 + 81 + 9) + 9 + 1);
}

TEST_CASE("gates and states stay in range")
{
    Rng rng(8);
    const auto m = recurrent::RecurrentModel::initialized(CellKind::lstm, 3, 4, Head::logistic, true, 2);
    recurrent::CellState s{std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)};
    for (int t = 0; t < 30; ++t) {
        s = m.cell_step(testing::random_vector(rng, 3, -10, 10), s);
        for (const double v : s.h) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("BiLSTM with shared direction parameters is symmetric on a palindrome")
{
    auto m = recurrent::RecurrentModel::initialized(CellKind::bilstm, 2, 3, Head::logistic, true, 6);
    auto& p = m.parameters();
    const std::size_t dir_size = m.block_offset(1, 0);
    std::copy_n(p.begin(), dir_size, p.begin() + static_cast<std::ptrdiff_t>(dir_size));
    const std::vector<double> window{0.1, 0.2, -0.5, 0.7, 0.9, -0.3, -0.5, 0.7, 0.1, 0.2};
    const auto states = m.final_states(window);
    REQUIRE(states.size() == 2);
    CHECK(states[0] == states[1]);
}

TEST_CASE("BPTT gradients match finite differences")
{
    Rng rng(41);
    for (const CellKind cell : {CellKind::lstm, CellKind::gru, CellKind::bilstm}) {
        for (const Head head : {Head::logistic, Head::affine}) {
            for (const bool biases : {true, false}) {
                CAPTURE(recurrent::to_string(cell));
                const auto set = random_set(rng, 8, 3, 4, head == Head::logistic);
                auto m = recurrent::RecurrentModel::initialized(cell, 3, 2, head, biases, rng.next_u64());
                for (auto& v : m.parameters()) v += rng.uniform(-0.3, 0.3);
                std::vector<double> grad;
                recurrent::loss_and_gradient(m, set, &grad);
                auto probe = m;
                const double err = testing::gradient_check(m.parameters(), grad, [&](const std::vector<double>& q) {
                    probe.parameters() = q;
                    return recurrent::loss_and_gradient(probe, set, nullptr);
                });
                CHECK(err < 1e-4);
            }
        }
    }
}

TEST_CASE("training is deterministic and loss falls at a small step")
{
    Rng rng(42);
    const auto set = random_set(rng, 22, 3, 3, false);
    REQUIRE(set.size() == 20);
    recurrent::RecurrentOptions opt;
    opt.epochs = 30;
    opt.lr = 1e-3;
    opt.batch_size = 0;
    const auto a = recurrent::fit_recurrent(set, CellKind::lstm, Head::affine, opt, 5);
    const auto b = recurrent::fit_recurrent(set, CellKind::lstm, Head::affine, opt, 5);
    CHECK(a.parameters() == b.parameters());
    for (std::size_t k = 1; k < a.loss_trace.size(); ++k) CHECK(a.loss_trace[k] <= a.loss_trace[k - 1]);
    CHECK(a.hidden() == 3);
}

TEST_CASE("serialization round trip")
{
    const auto m = recurrent::RecurrentModel::initialized(CellKind::gru, 4, 3, Head::affine, true, 1);
    const auto back = recurrent::recurrent_from_json(recurrent::to_json(m));
    CHECK(back.parameters() == m.parameters());
    CHECK(back.cell() == CellKind::gru);
}
