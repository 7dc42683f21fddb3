#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/matrix.hpp"

namespace rainbench::reservoir {

// Echo-state reservoir: r(i) = tanh(r(i-1) A + u(i) W_in).
class Reservoir {
public:
    Reservoir() = default;

    // W_in is d x M with entries uniform in [0, delta]; A is M x M with each
    // entry present with probability p_conn, drawn uniform(-1, 1), then scaled
    // so its spectral radius is rho. A draw whose radius is zero is discarded
    // and rebuilt from seed + 1 (counted in regenerations()).
    static Reservoir build(std::size_t d, std::size_t m, double delta, double rho, double p_conn, std::uint64_t seed);

    std::size_t input_dims() const noexcept { return w_in_.rows(); }
    std::size_t size() const noexcept { return a_.rows(); }
    const Matrix& w_in() const noexcept { return w_in_; }
    const Matrix& adjacency() const noexcept { return a_; }
    unsigned regenerations() const noexcept { return regenerations_; }
    std::uint64_t seed_used() const noexcept { return seed_used_; }

    // One update in place.
    void step(std::span<const double> u, std::span<double> r) const;

    // Feeds rows in order starting from `state` (updated to the final state).
    // The first `washout` states still advance the reservoir but are not
    // returned.
    Matrix run_states(const Matrix& rows, std::size_t washout, std::vector<double>& state) const;
    Matrix run_states(const Matrix& rows, std::size_t washout) const;

private:
    Matrix w_in_;
    Matrix a_;
    Matrix a_t_;    // A transposed, so r A is a matrix-vector product
    Matrix w_in_t_; // W_in transposed
    unsigned regenerations_ = 0;
    std::uint64_t seed_used_ = 0;
};

// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Matrix& a);

// Ridge least squares W (M x C) minimizing |S W - Y|^2 + lambda |W|^2.
// Uses the N x N dual system when M >= N.
Matrix fit_readout(const Matrix& states, const Matrix& targets, double lambda);

enum class StateMode { carry, reset };
StateMode parse_state_mode(std::string_view text);
std::string_view to_string(StateMode mode);

struct RccOptions {
    std::size_t size = 100;
    double input_scale = 1.0; // delta
    double spectral_radius = 0.9;
    double p_conn = 0.1;
    std::size_t washout = 10;
    double ridge = 1e-6;
    StateMode mode = StateMode::carry;
};

// Reservoir classifier: one-hot readout, argmax prediction.
struct RccModel {
    Reservoir reservoir;
    Matrix w_out;                   // M x classes
    std::vector<double> classes;    // sorted label values, one per readout column
    std::vector<double> last_state; // carry mode: where test rows continue from
    StateMode mode = StateMode::carry;

    // Class label of the argmax output (ties to the lower class).
    double classify(std::span<const double> state) const;
    // Feeds rows after the training stream (or from zero per row in reset
    // mode) and returns predicted labels.
    std::vector<double> predict(const Matrix& x) const;
};

RccModel fit_rcc(const Matrix& x, std::span<const double> y, const RccOptions& options, std::uint64_t seed);

nlohmann::json to_json(const RccModel& m);

} // namespace rainbench::reservoir
