#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/data.hpp"
#include "rainbench/knn.hpp"
#include "rainbench/linear.hpp"
#include "rainbench/metrics.hpp"
#include "rainbench/neural.hpp"
#include "rainbench/normalize.hpp"
#include "rainbench/recurrent.hpp"
#include "rainbench/reservoir.hpp"
#include "rainbench/svm.hpp"

namespace rainbench::harness {

// A split seed as written in the grid: "none" draws one from entropy once per
// grid run (unless the config pins it), anything else is a fixed integer.
struct SeedChoice {
    std::string label = "none";
    std::optional<std::uint64_t> value;

    friend bool operator==(const SeedChoice&, const SeedChoice&) = default;
};

SeedChoice parse_seed_choice(std::string_view text);

inline constexpr std::string_view kChronological = "chronological";

struct KnnSettings {
    std::size_t k_max_classify = 42;
    std::size_t k_max_regress = 1000; // clamped to the training size
    knn::Metric metric = knn::Metric::euclidean();
};

struct WnnSettings {
    linear::WideOptions options{200, 0.05, 32, linear::CrossSet::primary_pairs};
};

struct MlpSettings {
    std::vector<std::size_t> layers_classify{2, 3, 4, 5};
    std::vector<std::size_t> layers_regress{2, 3, 4, 5, 10, 20, 30};
    neural::TrainOptions train{};
};

struct DwnnSettings {
    std::vector<std::size_t> layers_classify{2, 3, 4, 5};
    std::vector<std::size_t> layers_regress{2, 3, 4, 5, 10, 20, 30};
    neural::DeepWideOptions options{neural::TrainOptions{}, linear::CrossSet::primary_pairs};
};

struct RccSettings {
    std::vector<std::size_t> sizes{50, 100, 200, 400, 600, 1000};
    reservoir::RccOptions options{};
};

struct SvmSettings {
    std::vector<svm::KernelSpec> kernels;
    svm::SolverOptions solver{};
    double epsilon = 0.01;
};

struct RecurrentSettings {
    std::vector<std::size_t> lengths_classify{3, 7};
    std::vector<std::size_t> lengths_regress{3, 5, 7, 9, 12};
    recurrent::RecurrentOptions options{};
};

// Where the grid's two dataset forms come from: ingested ASOS files or the
// synthetic generator.
struct DataSettings {
    std::string primary;                // ASOS CSV for the primary region
    std::vector<std::string> secondary; // ASOS CSVs joined into the mixed dataset
    std::optional<data::SynthOptions> synthetic;
};

struct GridConfig {
    std::uint64_t grid_seed = 0;
    std::optional<std::uint64_t> none_seed; // pins the "none" split seed
    std::vector<data::RegionSet> datasets{data::RegionSet::single, data::RegionSet::mixed};
    std::vector<normalize::Kind> normalizations{normalize::Kind::none, normalize::Kind::minmax, normalize::Kind::zscore};
    std::vector<SeedChoice> seeds;
    std::vector<std::string> classifiers{"knn", "rcc", "svm", "dnn", "wnn", "dwnn", "lstm"};
    std::vector<std::string> regressors{"knn", "linear", "svm", "dnn", "wnn", "dwnn", "lstm", "bilstm", "gru"};
    double threshold = data::kDefaultThreshold;
    double train_fraction = 0.7;
    normalize::Scope scope = normalize::Scope::train_only;
    std::uint64_t regressor_init_seed = 46;
    std::size_t jobs = 1;

    KnnSettings knn;
    WnnSettings wnn;
    MlpSettings dnn;
    DwnnSettings dwnn;
    RccSettings rcc;
    SvmSettings svm;
    RecurrentSettings recurrent;
    DataSettings data;

    GridConfig();
};

// INI-style text: "[section]" headers and "key = value" lines, ';' or '#'
// comments, comma-separated lists. Unknown sections or keys are config errors.
GridConfig parse_config(std::istream& in);
GridConfig load_config(const std::string& path);

bool is_recurrent(std::string_view model);

// One grid cell.
struct TrialSpec {
    std::string model;
    data::Task task = data::Task::classification;
    data::RegionSet dataset = data::RegionSet::single;
    normalize::Kind normalization = normalize::Kind::none;
    SeedChoice seed; // label "chronological" for recurrent models
    std::map<std::string, std::string> params;

    // Identifies the prepared data (task, dataset, normalization, split).
    std::string form_key() const;
    // form_key plus model and parameters; hashed into classifier init seeds.
    std::string key() const;
};

// knn_regress_k_max is the resolved neighbor range for regression (the
// configured maximum clamped to the training size).
std::vector<TrialSpec> build_trials(const GridConfig& config, std::size_t knn_regress_k_max);
// Product of the grid axes, computed independently of build_trials.
std::size_t expected_trials(const GridConfig& config, std::size_t knn_regress_k_max);

// Imputed hourly feature tables, one per dataset form.
struct Sources {
    std::map<data::RegionSet, data::HourlyDataset> datasets;
};

// Reads the configured ASOS files, or generates the synthetic regions, then
// groups, imputes and joins them.
Sources load_sources(const DataSettings& settings);
Sources sources_from_records(const std::vector<std::vector<data::WeatherRecord>>& regions);

// Training and test rows for one tabular trial form.
struct Prepared {
    Matrix train_x;
    Matrix test_x;
    std::vector<double> train_y;
    std::vector<double> test_y;
    std::optional<std::uint64_t> split_seed;
    bool seed_drawn = false;
};

Prepared prepare_tabular(const data::HourlyDataset& source, data::Task task, normalize::Kind normalization,
                         std::optional<std::uint64_t> seed, bool seed_drawn, const GridConfig& config);

struct PreparedSequences {
    recurrent::SequenceSet train;
    recurrent::SequenceSet test;
};

PreparedSequences prepare_sequences(const data::HourlyDataset& source, data::Task task, normalize::Kind normalization,
                                    std::size_t length, const GridConfig& config);

std::uint64_t init_seed_for(const TrialSpec& trial, const GridConfig& config);

// Split seed used for the trial's "none" label.
struct SeedLog {
    std::optional<std::uint64_t> none_seed;
    bool drawn = false;
};

// Runs one trial. Errors are not caught here. When model_json is given it
// receives the fitted model.
metrics::EvalReport run_trial(const TrialSpec& trial, const Sources& sources, const GridConfig& config,
                              const SeedLog& seeds, nlohmann::json* model_json = nullptr);

struct GridResult {
    std::vector<metrics::EvalReport> reports; // sorted by provenance
    SeedLog seeds;
    std::size_t failures = 0;
};

// Asserts the trial count against the axis product, then runs every cell.
// A failing trial becomes a flagged row and the grid continues.
GridResult run_grid(const GridConfig& config, const Sources& sources);

// Strict weak order on provenance, numeric-aware for parameter values.
bool provenance_less(const metrics::Provenance& a, const metrics::Provenance& b);
void sort_reports(std::vector<metrics::EvalReport>& reports);

// Per-trial CSV; numbers are written with 17 significant digits so the file
// parses back to identical reports.
void write_csv(std::ostream& out, const std::vector<metrics::EvalReport>& reports);
std::vector<metrics::EvalReport> read_csv(std::istream& in);

// One best-2-per-dataset table for each (task, model) pair.
std::string markdown_tables(const std::vector<metrics::EvalReport>& reports);

enum class ReportFormat { csv, markdown };
ReportFormat parse_report_format(std::string_view text);
// Writes reports.csv or best2.md under dir and returns the written path.
std::string emit_report(const std::vector<metrics::EvalReport>& reports, ReportFormat format, const std::string& dir);

// Long-form pairwise table for a scatter-plot matrix: one row per ordered
// feature pair with its Pearson correlation ("invalid" for a constant column).
void write_feature_pairs(std::ostream& out, const data::HourlyDataset& ds);

} // namespace rainbench::harness
