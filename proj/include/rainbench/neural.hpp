#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/linear.hpp"
#include "rainbench/matrix.hpp"

namespace rainbench::neural {

using linear::Head;

struct Layer {
    Matrix w;              // units x inputs
    std::vector<double> b; // units
};

// Activations of every layer for a single input: values[0] is the input,
// values[k] the output of layer k. The last entry is the head output.
struct ForwardCache {
    std::vector<std::vector<double>> values;
    double logit = 0.0;
};

// Fully connected sigmoid network. Every hidden layer is as wide as the
// input; the head is one unit, sigmoid (logistic) or identity (affine).
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::size_t input_dims, std::size_t hidden_layers, Head head);

    // Weights uniform(-0.5, 0.5) / sqrt(fan_in), biases zero.
    static MlpModel initialized(std::size_t input_dims, std::size_t hidden_layers, Head head, std::uint64_t seed);

    std::size_t input_dims() const noexcept { return input_dims_; }
    std::size_t hidden_layers() const noexcept { return layers_.empty() ? 0 : layers_.size() - 1; }
    Head head() const noexcept { return head_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }

    // Head output: sigmoid(z) for logistic, z for affine.
    double forward(std::span<const double> x, ForwardCache* cache = nullptr) const;
    double logit(std::span<const double> x) const;
    // Classification: label 1 iff forward >= 0.5. Regression: forward.
    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;

    // Flat parameter record: per layer, row-major weights then biases.
    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    std::vector<double> loss_trace;

private:
    std::size_t input_dims_ = 0;
    Head head_ = Head::logistic;
    std::vector<Layer> layers_; // hidden layers then the one-unit head
};

struct TrainOptions {
    std::size_t epochs = 500;
    double lr = 0.05;
    double early_stop = 1e-9; // stop once an epoch improves the loss by less than this
};

// Mean training loss (logistic loss or half squared error) and, when `grad`
// is given, its gradient in parameters() order.
double loss_and_gradient(const MlpModel& m, const Matrix& x, std::span<const double> y, std::vector<double>* grad);

// Full-batch backpropagation.
MlpModel fit_mlp(const Matrix& x, std::span<const double> y, std::size_t hidden_layers, Head head,
                 const TrainOptions& options, std::uint64_t init_seed);

// Wide and deep parts read the same row; the prediction is
// sigmoid(z_wide + z_deep + b) or the raw sum for regression, with unit
// weights on both log-odds and one shared bias (the wide model's b). The
// deep head's own bias stays at zero.
struct DeepWideModel {
    linear::WideModel wide;
    MlpModel deep;
    std::vector<double> loss_trace;

    double logit(std::span<const double> x) const;
    double forward(std::span<const double> x) const;
    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;

    // Flat record: wide weights, shared bias, then deep parameters().
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
};

struct DeepWideOptions {
    TrainOptions train;
    linear::CrossSet crosses = linear::CrossSet::none;
    bool freeze_wide_weights = false; // shared bias still trains
    bool freeze_deep = false;
    bool zero_deep = false; // start the deep part at all-zero weights
};

double loss_and_gradient(const DeepWideModel& m, const Matrix& x, std::span<const double> y, std::vector<double>* grad);

DeepWideModel init_deep_wide(const Matrix& x, std::size_t hidden_layers, Head head, const DeepWideOptions& options,
                             std::uint64_t init_seed);

// One joint full-batch gradient loop updating both parts each step.
DeepWideModel fit_deep_wide(const Matrix& x, std::span<const double> y, std::size_t hidden_layers, Head head,
                            const DeepWideOptions& options, std::uint64_t init_seed);

nlohmann::json to_json(const MlpModel& m);
MlpModel mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DeepWideModel& m);

} // namespace rainbench::neural
