#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "rainbench/matrix.hpp"

namespace rainbench::testing {

// Sort-everything reference: plain loops, stable sort on distance so equal
// distances keep training order, then mean or majority vote (lower label wins
// ties).
inline double knn_oracle(const Matrix& x, const std::vector<double>& y, std::span<const double> q, std::size_t k,
                         bool regress)
{
    std::vector<double> dist(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += (x(i, j) - q[j]) * (x(i, j) - q[j]);
        dist[i] = std::sqrt(s);
    }
    std::vector<std::size_t> order(x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    if (regress) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += y[order[i]];
        return sum / static_cast<double>(k);
    }
    std::map<double, std::size_t> votes;
    for (std::size_t i = 0; i < k; ++i) ++votes[y[order[i]]];
    double best = 0.0;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
        if (count > best_count) {
            best = label;
            best_count = count;
        }
    }
    return best;
}

} // namespace rainbench::testing
