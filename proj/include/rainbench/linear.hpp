#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/matrix.hpp"

namespace rainbench::linear {

using Cross = std::pair<std::size_t, std::size_t>;

// Which feature pairs get a cross-product term. primary_pairs crosses only
// the first region's nine columns.
enum class CrossSet { none, primary_pairs, all_pairs };

CrossSet parse_cross_set(std::string_view text);
std::string_view to_string(CrossSet c);
std::vector<Cross> make_crosses(std::size_t dims, CrossSet set);

// Binarizes x_i > threshold_i, then emits the product of each crossed pair.
std::vector<double> cross_transform(std::span<const double> x, std::span<const Cross> crosses,
                                    std::span<const double> thresholds);

// Per-column medians (mean of the two middle values for even counts).
std::vector<double> column_medians(const Matrix& x);

enum class Head { logistic, affine };

struct WideModel {
    std::vector<double> w; // raw features then crossed features
    double b = 0.0;
    std::vector<Cross> crosses;
    std::vector<double> thresholds; // empty when there are no crosses
    Head head = Head::affine;
    std::size_t input_dims = 0;

    bool ridge_fallback = false;
    std::vector<double> loss_trace; // full-data loss before training and after each epoch

    std::vector<double> expand(std::span<const double> x) const;
    double logit(std::span<const double> x) const;
    // Logistic head: label 1 iff sigmoid(logit) >= 0.5. Affine head: logit.
    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;
    double final_loss() const { return loss_trace.empty() ? 0.0 : loss_trace.back(); }
};

double sigmoid(double z);

// Least squares y = w.x + b via centred normal equations; a singular Gram
// matrix gets ridge 1e-8 and sets ridge_fallback.
WideModel fit_linear_regression(const Matrix& x, std::span<const double> y);

struct WideOptions {
    std::size_t epochs = 200;
    double lr = 0.01;
    std::size_t batch_size = 32; // 0 means full batch
    CrossSet crosses = CrossSet::none;
};

// Logistic regression over raw + crossed features, mini-batch gradient
// descent in fixed row order from all-zero weights.
WideModel fit_wide_classifier(const Matrix& x, std::span<const double> y, const WideOptions& options = {});

// Same model with an affine head and squared loss.
WideModel fit_wide_regressor(const Matrix& x, std::span<const double> y, const WideOptions& options = {});

// Mean loss of the model on (x, y): logistic loss or half squared error.
double wide_loss(const WideModel& m, const Matrix& x, std::span<const double> y);

nlohmann::json to_json(const WideModel& m);
WideModel wide_from_json(const nlohmann::json& j);

} // namespace rainbench::linear
