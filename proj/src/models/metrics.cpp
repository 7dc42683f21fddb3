#include "rainbench/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace rainbench::metrics {

EvalReport evaluate_classifier(std::span<const double> truth, std::span<const double> predicted)
{
    require(truth.size() == predicted.size(), ErrorKind::dimension_mismatch,
            "label vectors differ in length (" + std::to_string(truth.size()) + " vs "
                + std::to_string(predicted.size()) + ")");
    require(!truth.empty(), ErrorKind::insufficient_data, "accuracy needs at least one label");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += truth[i] == predicted[i] ? 1 : 0;
    }
    EvalReport s;
    s.task = data::Task::classification;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    return s;
}

double pearson(std::span<const double> x, std::span<const double> y, bool* valid)
{
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    const bool ok = sxx > 0.0 && syy > 0.0 && std::isfinite(sxy);
    if (valid != nullptr) {
        *valid = ok;
    }
    return ok ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
}

EvalReport evaluate_regressor(std::span<const double> truth, std::span<const double> predicted)
{
    require(truth.size() == predicted.size(), ErrorKind::dimension_mismatch,
            "target vectors differ in length (" + std::to_string(truth.size()) + " vs "
                + std::to_string(predicted.size()) + ")");
    require(truth.size() >= 2, ErrorKind::insufficient_data, "regression metrics need at least two points");
    const auto n = static_cast<double>(truth.size());
    double mean = 0.0;
    for (const double v : truth) {
        mean += v;
    }
    mean /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = truth[i] - predicted[i];
        ss_res += e * e;
        const double dev = truth[i] - mean;
        ss_tot += dev * dev;
    }
    EvalReport s;
    s.task = data::Task::regression;
    s.mse = ss_res / n;
    s.rmse = std::sqrt(s.mse);
    s.r2_valid = ss_tot > 0.0 && std::isfinite(ss_res);
    s.r2 = s.r2_valid ? 1.0 - ss_res / ss_tot : 0.0;
    s.pcc = pearson(truth, predicted, &s.pcc_valid);
    return s;
}

} // namespace rainbench::metrics
