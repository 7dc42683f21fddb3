#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/data.hpp"
#include "rainbench/linear.hpp"
#include "rainbench/matrix.hpp"

namespace rainbench::recurrent {

using linear::Head;

// Sliding windows over a chronological row table. Window k covers rows
// ends[k] - length + 1 .. ends[k] and predicts targets[k] (row ends[k]'s
// target). Rows are contiguous, so a window is one span of length * d values.
struct SequenceSet {
    Matrix rows;
    std::size_t length = 1;
    std::vector<std::size_t> ends;
    std::vector<double> targets;

    std::size_t size() const noexcept { return ends.size(); }
    std::size_t dims() const noexcept { return rows.cols(); }
    std::span<const double> window(std::size_t k) const { return rows.rows_span(ends[k] + 1 - length, length); }
    SequenceSet subset(std::span<const std::size_t> indices) const;
    // Windows whose target is strictly above the threshold.
    SequenceSet above(double threshold) const;
};

SequenceSet make_sequences(const Matrix& rows, std::span<const double> targets, std::size_t length);
SequenceSet make_sequences(const data::HourlyDataset& ds, std::size_t length);

enum class CellKind { lstm, gru, bilstm };
CellKind parse_cell(std::string_view text);
std::string_view to_string(CellKind cell);

// Hidden state and (LSTM only) cell state.
struct CellState {
    std::vector<double> h;
    std::vector<double> c;
};

// Gate blocks per direction: LSTM f, i, candidate, o; GRU update z, reset r,
// candidate. Each block holds U (H x d), W (H x H) and, when enabled, a bias
// (H). The flat parameter record lists, per direction, each block's U and W
// row-major followed by its bias, then the readout weights (H, or 2H for the
// bidirectional model) and the readout bias.
class RecurrentModel {
public:
    RecurrentModel() = default;
    RecurrentModel(CellKind cell, std::size_t input_dims, std::size_t hidden, Head head, bool biases = true);

    // Weights uniform(-0.5, 0.5) / sqrt(fan_in), biases zero.
    static RecurrentModel initialized(CellKind cell, std::size_t input_dims, std::size_t hidden, Head head,
                                      bool biases, std::uint64_t seed);

    CellKind cell() const noexcept { return cell_; }
    std::size_t input_dims() const noexcept { return input_dims_; }
    std::size_t hidden() const noexcept { return hidden_; }
    Head head() const noexcept { return head_; }
    bool biases() const noexcept { return biases_; }
    std::size_t gates() const noexcept { return cell_ == CellKind::gru ? 3 : 4; }
    std::size_t directions() const noexcept { return cell_ == CellKind::bilstm ? 2 : 1; }

    std::vector<double>& parameters() noexcept { return params_; }
    const std::vector<double>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    // Views into the flat record.
    std::span<const double> u(std::size_t direction, std::size_t gate) const;
    std::span<const double> w(std::size_t direction, std::size_t gate) const;
    std::span<const double> b(std::size_t direction, std::size_t gate) const; // empty without biases
    std::size_t block_offset(std::size_t direction, std::size_t gate) const;
    std::size_t readout_offset() const noexcept { return directions() * gates() * block_size(); }

    // One recurrence step of the given direction.
    CellState cell_step(std::span<const double> x, const CellState& prev, std::size_t direction = 0) const;

    // Final hidden state of each direction for a window of length * d values.
    std::vector<std::vector<double>> final_states(std::span<const double> window) const;
    double logit(std::span<const double> window) const;
    // Logistic: sigmoid(logit); affine: logit.
    double forward(std::span<const double> window) const;
    // Classification: label 1 iff forward >= 0.5.
    double predict(std::span<const double> window) const;
    std::vector<double> predict(const SequenceSet& set) const;

    std::vector<double> loss_trace;

private:
    std::size_t block_size() const noexcept
    {
        return hidden_ * input_dims_ + hidden_ * hidden_ + (biases_ ? hidden_ : 0);
    }

    CellKind cell_ = CellKind::lstm;
    std::size_t input_dims_ = 0;
    std::size_t hidden_ = 0;
    Head head_ = Head::logistic;
    bool biases_ = true;
    std::vector<double> params_;
};

// Mean loss over the windows (logistic loss or half squared error) and,
// when grad is given, its full backpropagation-through-time gradient in the
// flat parameter order.
double loss_and_gradient(const RecurrentModel& m, const SequenceSet& set, std::vector<double>* grad);

struct RecurrentOptions {
    std::size_t hidden = 0; // 0 means the input width
    std::size_t epochs = 30;
    double lr = 0.05;
    std::size_t batch_size = 32; // 0 means full batch
    bool biases = true;
};

// Mini-batch gradient descent over the windows in their stored order.
RecurrentModel fit_recurrent(const SequenceSet& train, CellKind cell, Head head, const RecurrentOptions& options,
                             std::uint64_t init_seed);

nlohmann::json to_json(const RecurrentModel& m);
RecurrentModel recurrent_from_json(const nlohmann::json& j);

} // namespace rainbench::recurrent
