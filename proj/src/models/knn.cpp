#include "rainbench/knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "rainbench/simd/kernels.hpp"

namespace rainbench::knn {

Metric Metric::minkowski(double p)
{
    require(p >= 1.0, ErrorKind::validation, "minkowski order must be >= 1");
    return {Kind::minkowski, p};
}

Metric parse_metric(std::string_view text)
{
    if (text == "euclidean") return Metric::euclidean();
    if (text == "manhattan") return Metric::manhattan();
    if (text.starts_with("minkowski")) {
        const auto colon = text.find(':');
        const double p = colon == std::string_view::npos ? 2.0 : std::stod(std::string(text.substr(colon + 1)));
        return Metric::minkowski(p);
    }
    throw Error(ErrorKind::validation, "unknown distance metric '" + std::string(text) + "'");
}

std::string to_string(const Metric& m)
{
    switch (m.kind) {
    case Metric::Kind::manhattan: return "manhattan";
    case Metric::Kind::minkowski: {
        char buffer[48];
        std::snprintf(buffer, sizeof buffer, "minkowski:%g", m.p);
        return buffer;
    }
    case Metric::Kind::euclidean: break;
    }
    return "euclidean";
}

double distance(std::span<const double> x, std::span<const double> y, const Metric& metric)
{
    if (x.size() != y.size()) {
        throw Error(ErrorKind::dimension_mismatch, "distance between vectors of length " + std::to_string(x.size())
                                                       + " and " + std::to_string(y.size()));
    }
    switch (metric.kind) {
    case Metric::Kind::euclidean: return std::sqrt(simd::squared_distance(x, y));
    case Metric::Kind::manhattan: return simd::manhattan_distance(x, y);
    case Metric::Kind::minkowski: {
        double sum = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sum += std::pow(std::fabs(x[i] - y[i]), metric.p);
        }
        return std::pow(sum, 1.0 / metric.p);
    }
    }
    return 0.0;
}

KnnModel::KnnModel(Matrix train_x, std::vector<double> train_y, std::size_t k, Metric metric, Mode mode)
    : train_x_(std::move(train_x)), train_y_(std::move(train_y)), k_(k), metric_(metric), mode_(mode)
{
    require(train_x_.rows() > 0, ErrorKind::insufficient_data, "knn needs a non-empty training set");
    require(train_x_.rows() == train_y_.size(), ErrorKind::dimension_mismatch, "knn features and targets differ in length");
    require(k_ >= 1 && k_ <= train_x_.rows(), ErrorKind::validation,
            "k must lie in [1, " + std::to_string(train_x_.rows()) + "], got " + std::to_string(k_));
    require(metric_.kind != Metric::Kind::minkowski || metric_.p >= 1.0, ErrorKind::validation,
            "minkowski order must be >= 1");
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> query, std::size_t count) const
{
    const std::size_t n = train_x_.rows();
    count = std::min(count, n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = distance(query, train_x_.row(i), metric_);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto closer = [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); };
    const auto middle = order.begin() + static_cast<std::ptrdiff_t>(count);
    std::partial_sort(order.begin(), middle, order.end(), closer);
    order.resize(count);
    return order;
}

double KnnModel::aggregate(std::span<const std::size_t> ordered, std::size_t k) const
{
    if (mode_ == Mode::regress) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sum += train_y_[ordered[i]];
        }
        return sum / static_cast<double>(k);
    }
    // labels are few; a sorted vector of (label, count) keeps ties deterministic
    std::vector<std::pair<double, std::size_t>> votes;
    for (std::size_t i = 0; i < k; ++i) {
        const double label = train_y_[ordered[i]];
        auto it = std::lower_bound(votes.begin(), votes.end(), label,
                                   [](const auto& entry, double value) { return entry.first < value; });
        if (it != votes.end() && it->first == label) {
            ++it->second;
        } else {
            votes.insert(it, {label, 1});
        }
    }
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
        if (it->second > best->second) {
            best = it;
        }
    }
    return best->first;
}

double KnnModel::predict(std::span<const double> query) const
{
    if (query.size() != train_x_.cols()) {
        throw Error(ErrorKind::dimension_mismatch, "query width differs from training data");
    }
    const auto order = neighbors(query, k_);
    return aggregate(order, k_);
}

std::vector<double> KnnModel::predict(const Matrix& queries) const
{
    std::vector<double> out(queries.rows());
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        out[i] = predict(queries.row(i));
    }
    return out;
}

SweepResult sweep_k(const Matrix& train_x, const std::vector<double>& train_y, const Matrix& test_x,
                    const std::vector<double>& test_y, std::size_t k_max, Mode mode, Metric metric)
{
    require(k_max >= 1 && k_max <= train_x.rows(), ErrorKind::validation,
            "k_max must lie in [1, " + std::to_string(train_x.rows()) + "]");
    require(test_x.rows() == test_y.size(), ErrorKind::dimension_mismatch, "test features and targets differ in length");
    const KnnModel model(train_x, train_y, 1, metric, mode);

    // predictions[k-1][q]
    std::vector<std::vector<double>> predictions(k_max, std::vector<double>(test_x.rows()));
    for (std::size_t q = 0; q < test_x.rows(); ++q) {
        const auto order = model.neighbors(test_x.row(q), k_max);
        if (mode == Mode::regress) {
            // running sum adds in the same order as aggregate()
            double sum = 0.0;
            for (std::size_t k = 1; k <= k_max; ++k) {
                sum += train_y[order[k - 1]];
                predictions[k - 1][q] = sum / static_cast<double>(k);
            }
        } else {
            std::vector<std::pair<double, std::size_t>> votes;
            for (std::size_t k = 1; k <= k_max; ++k) {
                const double label = train_y[order[k - 1]];
                auto it = std::lower_bound(votes.begin(), votes.end(), label,
                                           [](const auto& entry, double value) { return entry.first < value; });
                if (it != votes.end() && it->first == label) {
                    ++it->second;
                } else {
                    votes.insert(it, {label, 1});
                }
                auto best = votes.begin();
                for (auto v = votes.begin(); v != votes.end(); ++v) {
                    if (v->second > best->second) {
                        best = v;
                    }
                }
                predictions[k - 1][q] = best->first;
            }
        }
    }

    SweepResult result;
    result.reports.reserve(k_max);
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= k_max; ++k) {
        auto report = mode == Mode::classify ? metrics::evaluate_classifier(test_y, predictions[k - 1])
                                             : metrics::evaluate_regressor(test_y, predictions[k - 1]);
        const double score = mode == Mode::classify ? report.accuracy
                                                    : (report.r2_valid ? report.r2 : -std::numeric_limits<double>::infinity());
        if (score > best_score) {
            best_score = score;
            result.best_k = k;
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

} // namespace rainbench::knn
