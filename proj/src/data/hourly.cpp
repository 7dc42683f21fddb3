#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rainbench/data.hpp"
#include "rainbench/rng.hpp"

namespace rainbench::data {

double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

std::string_view to_string(RegionSet r) { return r == RegionSet::single ? "single" : "mixed"; }

std::string_view to_string(Task t)
{
    switch (t) {
    case Task::classification: return "classification";
    case Task::regression: return "regression";
    case Task::none: break;
    }
    return "none";
}

Task parse_task(std::string_view text)
{
    if (text == "classification" || text == "classify") {
        return Task::classification;
    }
    if (text == "regression" || text == "regress") {
        return Task::regression;
    }
    if (text == "none") {
        return Task::none;
    }
    throw Error(ErrorKind::validation, "unknown task '" + std::string(text) + "'");
}

std::size_t HourlyDataset::missing_cells() const
{
    return static_cast<std::size_t>(
        std::count_if(features.data().begin(), features.data().end(), [](double v) { return is_missing(v); }));
}

HourlyDataset HourlyDataset::select_rows(std::span<const std::size_t> indices) const
{
    HourlyDataset out = *this;
    out.features = features.select_rows(indices);
    out.hours.clear();
    out.target.clear();
    for (const auto i : indices) {
        out.hours.push_back(hours[i]);
        if (!target.empty()) {
            out.target.push_back(target[i]);
        }
    }
    return out;
}

HourlyDataset group_hourly(const std::vector<WeatherRecord>& records, std::optional<Minutes> origin)
{
    HourlyDataset ds;
    ds.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
    ds.features = Matrix(0, kFeaturesPerRegion);
    if (!records.empty()) {
        ds.regions.push_back(records.front().station);
    }
    if (records.empty()) {
        ds.origin = origin.value_or(0);
        return ds;
    }

    const Minutes first = std::min_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
                              return a.valid < b.valid;
                          })->valid;
    const auto floor_div = [](Minutes a, Minutes b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    ds.origin = origin.value_or(floor_div(first, 60) * 60);

    std::int64_t last_hour = 0;
    for (const auto& rec : records) {
        require(rec.valid >= ds.origin, ErrorKind::validation,
                "record at " + format_timestamp(rec.valid) + " precedes the hour origin");
        last_hour = std::max(last_hour, (rec.valid - ds.origin) / 60);
    }

    const auto n_hours = static_cast<std::size_t>(last_hour + 1);
    Matrix sums(n_hours, kFeaturesPerRegion, 0.0);
    Matrix counts(n_hours, kFeaturesPerRegion, 0.0);
    std::vector<double> precip_max(n_hours, -std::numeric_limits<double>::infinity());
    for (const auto& rec : records) {
        const auto h = static_cast<std::size_t>((rec.valid - ds.origin) / 60);
        for (std::size_t f = 0; f < kFeaturesPerRegion; ++f) {
            if (!rec.values[f]) {
                continue;
            }
            if (f == kPrecipColumn) {
                precip_max[h] = std::max(precip_max[h], *rec.values[f]);
            } else {
                sums(h, f) += *rec.values[f];
            }
            counts(h, f) += 1.0;
        }
    }

    ds.features = Matrix(n_hours, kFeaturesPerRegion, missing_value());
    ds.hours.resize(n_hours);
    for (std::size_t h = 0; h < n_hours; ++h) {
        ds.hours[h] = static_cast<std::int64_t>(h);
        for (std::size_t f = 0; f < kFeaturesPerRegion; ++f) {
            if (counts(h, f) == 0.0) {
                continue;
            }
            ds.features(h, f) = f == kPrecipColumn ? precip_max[h] : sums(h, f) / counts(h, f);
        }
    }
    return ds;
}

namespace {

// Fills one column in place. `zero_fill` selects the p01i rule.
void impute_column(Matrix& m, std::size_t col, bool zero_fill, const std::string& name)
{
    const std::size_t n = m.rows();
    if (zero_fill) {
        for (std::size_t r = 0; r < n; ++r) {
            if (is_missing(m(r, col))) {
                m(r, col) = 0.0;
            }
        }
        return;
    }
    std::optional<std::size_t> prev;
    std::size_t r = 0;
    while (r < n) {
        if (!is_missing(m(r, col))) {
            prev = r;
            ++r;
            continue;
        }
        std::size_t next = r;
        while (next < n && is_missing(m(next, col))) {
            ++next;
        }
        if (!prev && next == n) {
            throw Error(ErrorKind::imputation, "feature '" + name + "' is missing in every row");
        }
        for (std::size_t g = r; g < next; ++g) {
            if (!prev) {
                m(g, col) = m(next, col);
            } else if (next == n) {
                m(g, col) = m(*prev, col);
            } else {
                const double t = static_cast<double>(g - *prev) / static_cast<double>(next - *prev);
                m(g, col) = m(*prev, col) + t * (m(next, col) - m(*prev, col));
            }
        }
        r = next;
    }
}

bool is_precip_name(const std::string& name)
{
    return name == "p01i" || (name.size() > 5 && name.ends_with(".p01i"));
}

} // namespace

HourlyDataset impute(const HourlyDataset& ds)
{
    HourlyDataset out = ds;
    for (std::size_t c = 0; c < out.dims(); ++c) {
        const auto& name = c < out.feature_names.size() ? out.feature_names[c] : std::to_string(c);
        impute_column(out.features, c, is_precip_name(name), name);
    }
    return out;
}

HourlyDataset join_regions(const HourlyDataset& primary, const std::vector<HourlyDataset>& others)
{
    HourlyDataset out = primary;
    if (others.empty()) {
        return out;
    }
    const std::size_t n = primary.size();
    std::size_t width = primary.dims();
    for (const auto& other : others) {
        require(other.origin == primary.origin, ErrorKind::alignment,
                "region origin " + format_timestamp(other.origin) + " differs from primary origin "
                    + format_timestamp(primary.origin));
        width += other.dims();
    }

    Matrix joined(n, width, missing_value());
    for (std::size_t r = 0; r < n; ++r) {
        auto src = primary.features.row(r);
        std::copy(src.begin(), src.end(), joined.row(r).begin());
    }
    std::size_t offset = primary.dims();
    for (std::size_t k = 0; k < others.size(); ++k) {
        const auto& other = others[k];
        const std::string region =
            other.regions.empty() ? "region" + std::to_string(k + 1) : other.regions.front();
        // Match by hour offset rather than row position.
        std::vector<std::optional<std::size_t>> by_hour;
        for (std::size_t r = 0; r < other.size(); ++r) {
            const auto h = other.hours[r];
            if (h < 0) {
                continue;
            }
            if (by_hour.size() <= static_cast<std::size_t>(h)) {
                by_hour.resize(static_cast<std::size_t>(h) + 1);
            }
            by_hour[static_cast<std::size_t>(h)] = r;
        }
        for (std::size_t r = 0; r < n; ++r) {
            const auto h = static_cast<std::size_t>(primary.hours[r]);
            if (h < by_hour.size() && by_hour[h]) {
                auto src = other.features.row(*by_hour[h]);
                std::copy(src.begin(), src.end(), joined.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
            }
        }
        for (std::size_t c = 0; c < other.dims(); ++c) {
            const auto base = c < other.feature_names.size() ? other.feature_names[c] : std::to_string(c);
            out.feature_names.push_back(region + "." + base);
            impute_column(joined, offset + c, is_precip_name(base), out.feature_names.back());
        }
        out.regions.push_back(region);
        offset += other.dims();
    }
    out.features = std::move(joined);
    out.region_set = RegionSet::mixed;
    return out;
}

HourlyDataset make_targets(const HourlyDataset& ds, Task task, double threshold)
{
    require(ds.size() >= 2, ErrorKind::insufficient_data,
            "need at least 2 hourly rows to build targets, have " + std::to_string(ds.size()));
    require(task != Task::none, ErrorKind::validation, "target task must be classification or regression");
    require(ds.missing_cells() == 0, ErrorKind::validation, "dataset must be imputed before building targets");

    HourlyDataset out = ds;
    const std::size_t n = ds.size() - 1;
    std::vector<std::size_t> keep(n);
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    out.features = ds.features.select_rows(keep);
    out.hours.assign(ds.hours.begin(), ds.hours.begin() + static_cast<std::ptrdiff_t>(n));
    out.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = ds.features(i + 1, kPrecipColumn);
        out.target[i] = task == Task::regression ? next : (next > threshold ? 1.0 : 0.0);
    }
    out.task = task;
    out.threshold = threshold;
    return out;
}

HourlyDataset regression_subset(const HourlyDataset& ds, double threshold)
{
    require(ds.task == Task::regression, ErrorKind::validation, "regression subset needs regression targets");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.target[i] > threshold) {
            keep.push_back(i);
        }
    }
    require(!keep.empty(), ErrorKind::empty_subset, "no rows with target above " + std::to_string(threshold));
    return ds.select_rows(keep);
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    return order;
}

Split split(const HourlyDataset& ds, const SplitSpec& spec)
{
    require(spec.fraction_train > 0.0 && spec.fraction_train < 1.0, ErrorKind::validation,
            "train fraction must lie in (0,1)");
    Split result;
    const std::size_t n = ds.size();
    std::vector<std::size_t> order;
    if (spec.mode == SplitMode::chronological) {
        order.resize(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ds.hours[a] < ds.hours[b]; });
    } else {
        result.seed_drawn = !spec.seed.has_value();
        result.seed = spec.seed ? *spec.seed : entropy_seed();
        order = split_permutation(n, *result.seed);
    }
    const auto cut = static_cast<std::size_t>(std::floor(spec.fraction_train * static_cast<double>(n) + 1e-9));
    result.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    result.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
    result.train = ds.select_rows(result.train_indices);
    result.test = ds.select_rows(result.test_indices);
    for (auto* part : {&result.train, &result.test}) {
        part->split_seed = result.seed;
        part->split_seed_drawn = result.seed_drawn;
    }
    return result;
}

} // namespace rainbench::data
