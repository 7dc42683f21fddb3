#pragma once

#include <span>
#include <vector>

#include "rainbench/matrix.hpp"
#include "rainbench/metrics.hpp"

namespace rainbench::knn {

enum class Mode { classify, regress };

struct Metric {
    enum class Kind { euclidean, manhattan, minkowski } kind = Kind::euclidean;
    double p = 2.0; // minkowski only, p >= 1

    static Metric euclidean() { return {Kind::euclidean, 2.0}; }
    static Metric manhattan() { return {Kind::manhattan, 1.0}; }
    static Metric minkowski(double p);
};

Metric parse_metric(std::string_view text); // "euclidean", "manhattan", "minkowski:3"
std::string to_string(const Metric& m);

double distance(std::span<const double> x, std::span<const double> y, const Metric& metric);

// Brute-force neighbor search over the stored training set. Distance ties are
// broken by lower training index, vote ties by lower label value.
class KnnModel {
public:
    KnnModel(Matrix train_x, std::vector<double> train_y, std::size_t k, Metric metric, Mode mode);

    std::size_t k() const noexcept { return k_; }
    Mode mode() const noexcept { return mode_; }
    const Metric& metric() const noexcept { return metric_; }
    std::size_t train_size() const noexcept { return train_x_.rows(); }

    double predict(std::span<const double> query) const;
    std::vector<double> predict(const Matrix& queries) const;

    // Indices of the `count` nearest training rows, nearest first.
    std::vector<std::size_t> neighbors(std::span<const double> query, std::size_t count) const;

    // Prediction from the first k entries of an ordered neighbor list.
    double aggregate(std::span<const std::size_t> ordered, std::size_t k) const;

private:
    Matrix train_x_;
    std::vector<double> train_y_;
    std::size_t k_;
    Metric metric_;
    Mode mode_;
};

struct SweepResult {
    std::size_t best_k = 1;
    std::vector<metrics::EvalReport> reports; // index k-1
};

// Scores k = 1..k_max against the test set using one neighbor ordering per
// query. Best k maximizes accuracy (classify) or valid R2 (regress); ties go to
// the smaller k.
SweepResult sweep_k(const Matrix& train_x, const std::vector<double>& train_y, const Matrix& test_x,
                    const std::vector<double>& test_y, std::size_t k_max, Mode mode,
                    Metric metric = Metric::euclidean());

} // namespace rainbench::knn
