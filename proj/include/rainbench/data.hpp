#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/matrix.hpp"

namespace rainbench::data {

// Minutes since 1970-01-01 00:00 UTC.
using Minutes = std::int64_t;

inline constexpr std::size_t kFeaturesPerRegion = 9;
inline constexpr std::array<std::string_view, kFeaturesPerRegion> kFeatureNames = {
    "tmpf", "dwpf", "relh", "drct", "sknt", "alti", "mslp", "vsby", "p01i",
};

enum class Feature : std::size_t { tmpf, dwpf, relh, drct, sknt, alti, mslp, vsby, p01i };

inline constexpr std::size_t index_of(Feature f) { return static_cast<std::size_t>(f); }

// Column of the primary region's precipitation; targets always derive from it.
inline constexpr std::size_t kPrecipColumn = index_of(Feature::p01i);

inline constexpr double kDefaultThreshold = 0.01;

Minutes parse_timestamp(std::string_view text);
std::string format_timestamp(Minutes t);

struct WeatherRecord {
    std::string station;
    Minutes valid = 0;
    // Indexed by Feature; std::nullopt marks a missing observation.
    std::array<std::optional<double>, kFeaturesPerRegion> values{};

    std::optional<double> get(Feature f) const { return values[index_of(f)]; }
    void set(Feature f, std::optional<double> v) { values[index_of(f)] = v; }
};

enum class RegionSet { single, mixed };
enum class Task { none, classification, regression };

std::string_view to_string(RegionSet r);
std::string_view to_string(Task t);
Task parse_task(std::string_view text);

// Hour-gridded feature table. Before imputation missing cells hold NaN.
struct HourlyDataset {
    Minutes origin = 0;
    // Hour offset from origin of every row. Consecutive after grouping; a
    // subset or shuffled split keeps the original offsets.
    std::vector<std::int64_t> hours;
    Matrix features;
    std::vector<std::string> feature_names;
    std::vector<std::string> regions;
    RegionSet region_set = RegionSet::single;

    Task task = Task::none;
    double threshold = kDefaultThreshold;
    // Empty until make_targets.
    std::vector<double> target;

    // Seed that produced this split (drawn from entropy when none was given).
    std::optional<std::uint64_t> split_seed;
    bool split_seed_drawn = false;
    std::string normalization = "none";

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dims() const noexcept { return features.cols(); }
    bool labeled() const noexcept { return task != Task::none; }
    std::size_t missing_cells() const;

    HourlyDataset select_rows(std::span<const std::size_t> indices) const;
};

inline bool is_missing(double v) { return v != v; }
double missing_value();

// --- CSV ingestion -------------------------------------------------------

// Columns are matched by header name; extra columns are ignored. Missing
// values are "" or "M".
std::vector<WeatherRecord> parse_asos_csv(const std::string& path);
std::vector<WeatherRecord> parse_asos_csv(std::istream& in, const std::string& source = "<stream>");
void write_asos_csv(std::ostream& out, const std::vector<WeatherRecord>& records);

// --- Hourly pipeline -----------------------------------------------------

// Buckets records by floor((valid - origin) / 60 min). Features are averaged,
// p01i takes the bucket max. Rows run from hour 0 to the last occupied hour;
// empty buckets are fully missing. Without an origin, the first record's hour
// is used.
HourlyDataset group_hourly(const std::vector<WeatherRecord>& records, std::optional<Minutes> origin = std::nullopt);

// Missing p01i becomes 0, other gaps are linearly interpolated and edges copy
// the nearest present value.
HourlyDataset impute(const HourlyDataset& ds);

// Left join on the primary's hour grid. Secondary columns are named
// "<region>.<feature>" and imputed with the same rule as impute().
HourlyDataset join_regions(const HourlyDataset& primary, const std::vector<HourlyDataset>& others);

// Next-hour target from the primary p01i column; drops the final row.
HourlyDataset make_targets(const HourlyDataset& ds, Task task, double threshold = kDefaultThreshold);

// Rows whose regression target is strictly above the threshold.
HourlyDataset regression_subset(const HourlyDataset& ds, double threshold = kDefaultThreshold);

enum class SplitMode { shuffled, chronological };

struct SplitSpec {
    std::optional<std::uint64_t> seed;
    double fraction_train = 0.7;
    SplitMode mode = SplitMode::shuffled;
};

struct Split {
    HourlyDataset train;
    HourlyDataset test;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::optional<std::uint64_t> seed;
    bool seed_drawn = false;
};

// Shuffled: Fisher-Yates with the seeded generator, then cut at
// floor(fraction * N). Chronological: first floor(fraction * N) rows.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);
Split split(const HourlyDataset& ds, const SplitSpec& spec);

// --- Synthetic fixtures --------------------------------------------------

struct SynthOptions {
    std::size_t hours = 2000;
    std::uint64_t seed = 7;
    std::size_t regions = 1;
    double missing_frac = 0.0;
    // AR(1) coefficient of the latent wetness process; higher means the
    // next hour's rain is easier to predict from the current observation.
    double persistence = 0.85;
    // Std-dev of the noise on the dew-point spread (drives relh).
    double observation_noise = 1.5;
    Minutes start = 0; // 0 means 2010-01-01 00:00
};

// One record stream per region. Region names: ROC, BUF, SYR, ALB, then R4...
std::vector<std::vector<WeatherRecord>> generate_synthetic(const SynthOptions& options);
std::string region_name(std::size_t index);

// --- Dataset files -------------------------------------------------------

// CSV with a "valid" timestamp column, the features, and a "target" column
// when labeled; missing cells written as "M". A sidecar "<path>.meta.json"
// carries origin, region set, task and recorded seed plus `extra`.
void write_dataset(const std::string& path, const HourlyDataset& ds, const nlohmann::json& extra = {});
HourlyDataset read_dataset(const std::string& path, nlohmann::json* extra = nullptr);

} // namespace rainbench::data
