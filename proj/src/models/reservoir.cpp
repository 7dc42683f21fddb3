#include "rainbench/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "rainbench/error.hpp"
#include "rainbench/rng.hpp"
#include "rainbench/simd/kernels.hpp"

namespace rainbench::reservoir {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
        }
    }
    return out;
}

Matrix from_eigen(const Eigen::MatrixXd& m)
{
    Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
        }
    }
    return out;
}

} // namespace

double spectral_radius(const Matrix& a)
{
    require(a.rows() == a.cols(), ErrorKind::dimension_mismatch, "spectral radius needs a square matrix");
    if (a.rows() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(to_eigen(a), false);
    require(solver.info() == Eigen::Success, ErrorKind::validation, "eigenvalue iteration did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Reservoir Reservoir::build(std::size_t d, std::size_t m, double delta, double rho, double p_conn, std::uint64_t seed)
{
    require(m >= 1, ErrorKind::validation, "reservoir size must be at least 1");
    require(d >= 1, ErrorKind::validation, "reservoir needs at least one input feature");
    require(rho > 0.0, ErrorKind::validation, "spectral radius must be positive");
    require(delta >= 0.0, ErrorKind::validation, "input scale must be non-negative");
    require(p_conn > 0.0 && p_conn <= 1.0, ErrorKind::validation, "connection probability must lie in (0, 1]");

    Reservoir res;
    for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t sub_seed = seed + attempt;
        Rng rng(sub_seed);
        res.w_in_ = Matrix(d, m);
        for (auto& v : res.w_in_.data()) {
            v = rng.uniform(0.0, delta);
        }
        res.a_ = Matrix(m, m);
        for (auto& v : res.a_.data()) {
            if (rng.uniform() < p_conn) {
                v = rng.uniform(-1.0, 1.0);
            }
        }
        const double radius = spectral_radius(res.a_);
        if (radius > 1e-12) {
            const double scale = rho / radius;
            for (auto& v : res.a_.data()) {
                v *= scale;
            }
            res.regenerations_ = static_cast<unsigned>(attempt);
            res.seed_used_ = sub_seed;
            break;
        }
        require(attempt < 1000, ErrorKind::validation, "could not draw a reservoir with non-zero spectral radius");
    }
    res.a_t_ = res.a_.transposed();
    res.w_in_t_ = res.w_in_.transposed();
    return res;
}

void Reservoir::step(std::span<const double> u, std::span<double> r) const
{
    const std::size_t m = size();
    std::vector<double> feedback(m);
    std::vector<double> drive(m);
    simd::gemv(a_t_.data(), m, m, r, feedback);
    simd::gemv(w_in_t_.data(), m, input_dims(), u, drive);
    for (std::size_t j = 0; j < m; ++j) {
        r[j] = std::tanh(feedback[j] + drive[j]);
    }
}

Matrix Reservoir::run_states(const Matrix& rows, std::size_t washout, std::vector<double>& state) const
{
    require(rows.cols() == input_dims(), ErrorKind::dimension_mismatch, "reservoir input width mismatch");
    require(state.size() == size(), ErrorKind::dimension_mismatch, "reservoir state has the wrong length");
    if (washout > 0 && washout >= rows.rows()) {
        throw Error(ErrorKind::insufficient_data, "washout of " + std::to_string(washout) + " leaves no states from "
                                                      + std::to_string(rows.rows()) + " rows");
    }
    Matrix states(rows.rows() - washout, size());
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        step(rows.row(i), state);
        if (i >= washout) {
            std::copy(state.begin(), state.end(), states.row(i - washout).begin());
        }
    }
    return states;
}

Matrix Reservoir::run_states(const Matrix& rows, std::size_t washout) const
{
    std::vector<double> state(size(), 0.0);
    return run_states(rows, washout, state);
}

Matrix fit_readout(const Matrix& states, const Matrix& targets, double lambda)
{
    require(states.rows() == targets.rows(), ErrorKind::dimension_mismatch, "readout states and targets differ in length");
    require(states.rows() > 0, ErrorKind::insufficient_data, "readout needs at least one state");
    require(lambda >= 0.0, ErrorKind::validation, "ridge strength must be non-negative");
    const Eigen::MatrixXd s = to_eigen(states);
    const Eigen::MatrixXd y = to_eigen(targets);
    const auto n = s.rows();
    const auto m = s.cols();
    Eigen::MatrixXd w;
    if (m >= n) {
        Eigen::MatrixXd gram = s * s.transpose();
        gram.diagonal().array() += lambda;
        w = s.transpose() * gram.ldlt().solve(y);
    } else {
        Eigen::MatrixXd gram = s.transpose() * s;
        gram.diagonal().array() += lambda;
        w = gram.ldlt().solve(s.transpose() * y);
    }
    return from_eigen(w);
}

StateMode parse_state_mode(std::string_view text)
{
    if (text == "carry") return StateMode::carry;
    if (text == "reset") return StateMode::reset;
    throw Error(ErrorKind::validation, "unknown reservoir state mode '" + std::string(text) + "'");
}

std::string_view to_string(StateMode mode) { return mode == StateMode::carry ? "carry" : "reset"; }

double RccModel::classify(std::span<const double> state) const
{
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes.size(); ++c) {
        double score = 0.0;
        for (std::size_t j = 0; j < state.size(); ++j) {
            score += state[j] * w_out(j, c);
        }
        if (score > best_score) {
            best_score = score;
            best = c;
        }
    }
    return classes[best];
}

std::vector<double> RccModel::predict(const Matrix& x) const
{
    std::vector<double> out(x.rows());
    std::vector<double> state = mode == StateMode::carry ? last_state : std::vector<double>(reservoir.size(), 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        if (mode == StateMode::reset) {
            std::fill(state.begin(), state.end(), 0.0);
        }
        reservoir.step(x.row(i), state);
        out[i] = classify(state);
    }
    return out;
}

RccModel fit_rcc(const Matrix& x, std::span<const double> y, const RccOptions& options, std::uint64_t seed)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "reservoir features and labels differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "reservoir needs training rows");

    RccModel model;
    model.mode = options.mode;
    model.reservoir = Reservoir::build(x.cols(), options.size, options.input_scale, options.spectral_radius,
                                       options.p_conn, seed);
    model.classes.assign(y.begin(), y.end());
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());

    Matrix states;
    std::size_t skipped = 0;
    if (options.mode == StateMode::carry) {
        skipped = options.washout;
        model.last_state.assign(options.size, 0.0);
        states = model.reservoir.run_states(x, skipped, model.last_state);
    } else {
        states = Matrix(x.rows(), options.size);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            auto row = states.row(i);
            std::fill(row.begin(), row.end(), 0.0);
            model.reservoir.step(x.row(i), row);
        }
    }

    Matrix targets(states.rows(), model.classes.size(), 0.0);
    for (std::size_t i = 0; i < states.rows(); ++i) {
        const double label = y[i + skipped];
        const auto c = static_cast<std::size_t>(
            std::lower_bound(model.classes.begin(), model.classes.end(), label) - model.classes.begin());
        targets(i, c) = 1.0;
    }
    model.w_out = fit_readout(states, targets, options.ridge);
    return model;
}

nlohmann::json to_json(const RccModel& m)
{
    return {
        {"type", "rcc"},
        {"size", m.reservoir.size()},
        {"seed_used", m.reservoir.seed_used()},
        {"regenerations", m.reservoir.regenerations()},
        {"mode", std::string(to_string(m.mode))},
        {"classes", m.classes},
        {"w_out", m.w_out.data()},
    };
}

} // namespace rainbench::reservoir
