#pragma once

#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/data.hpp"
#include "rainbench/matrix.hpp"

namespace rainbench::normalize {

enum class Kind { none, minmax, zscore };

// train_only fits on the training rows; global fits on the whole dataset
// before splitting (leaks test statistics, kept for fidelity runs).
enum class Scope { train_only, global };

std::string_view to_string(Kind k);
std::string_view to_string(Scope s);
Kind parse_kind(std::string_view text);
Scope parse_scope(std::string_view text);

// Per-feature statistics: (min, max) for minmax, (mean, population std) for
// zscore. Immutable once fitted.
struct Normalizer {
    Kind kind = Kind::none;
    Scope scope = Scope::train_only;
    std::vector<double> lower; // min or mean
    std::vector<double> upper; // max or std

    std::size_t dims() const noexcept { return lower.size(); }
    friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

Normalizer fit(const Matrix& x, Kind kind, Scope scope = Scope::train_only);
Normalizer fit(const data::HourlyDataset& ds, Kind kind, Scope scope = Scope::train_only);

// Zero-range (minmax) and zero-std (zscore) features map to 0.
Matrix apply(const Normalizer& n, const Matrix& x);
data::HourlyDataset apply(const Normalizer& n, const data::HourlyDataset& ds);

// Analytic inverse; degenerate features come back as their min / mean.
Matrix inverse(const Normalizer& n, const Matrix& x);

nlohmann::json to_json(const Normalizer& n);
Normalizer normalizer_from_json(const nlohmann::json& j);

} // namespace rainbench::normalize
