// rainbench command-line front end. Exit codes: 0 success, 1 validation or
// input error, 2 when a grid or sweep finished with failed trials.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rainbench/data.hpp"
#include "rainbench/error.hpp"
#include "rainbench/harness.hpp"
#include "rainbench/rng.hpp"

namespace fs = std::filesystem;
using namespace rainbench;

namespace {

constexpr int kExitTrialFailures = 2;

std::map<std::string, std::string> parse_params(const std::string& text)
{
    std::map<std::string, std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        require(eq != std::string::npos && eq > 0, ErrorKind::validation, "parameter '" + item + "' is not key=value");
        out[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return out;
}

harness::Sources single_source(const data::HourlyDataset& ds)
{
    harness::Sources s;
    s.datasets[ds.region_set] = ds;
    return s;
}

std::ofstream open_out(const std::string& path)
{
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    return out;
}

void log_seeds(const harness::SeedLog& seeds)
{
    if (seeds.none_seed) {
        std::cerr << "split seed for 'none': " << *seeds.none_seed << (seeds.drawn ? " (drawn from entropy)" : " (pinned)")
                  << '\n';
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rainfall forecasting benchmark toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    // synth
    data::SynthOptions synth;
    std::string synth_dir = "synthetic";
    auto* cmd_synth = app.add_subcommand("synth", "Generate synthetic ASOS-style CSVs, one per region");
    cmd_synth->add_option("--hours", synth.hours, "Hours of data")->capture_default_str();
    cmd_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    cmd_synth->add_option("--regions", synth.regions, "Number of regions (first is the primary)")->capture_default_str();
    cmd_synth->add_option("--missing-frac", synth.missing_frac, "Fraction of cells blanked")->capture_default_str();
    cmd_synth->add_option("--persistence", synth.persistence, "AR(1) coefficient of the wetness process")
        ->capture_default_str();
    cmd_synth->add_option("--out-dir", synth_dir, "Output directory")->capture_default_str();

    // ingest
    std::vector<std::string> ingest_inputs;
    std::string ingest_out;
    auto* cmd_ingest = app.add_subcommand("ingest", "Group, impute and join ASOS CSVs into an hourly dataset");
    cmd_ingest->add_option("--input", ingest_inputs, "ASOS CSVs, primary region first")->required();
    cmd_ingest->add_option("--out", ingest_out, "Output dataset CSV")->required();

    // prep
    std::string prep_dataset;
    std::string prep_task = "classification";
    double prep_threshold = data::kDefaultThreshold;
    std::string prep_norm = "none";
    std::string prep_scope = "train_only";
    std::string prep_seed = "0";
    double prep_fraction = 0.7;
    bool prep_chrono = false;
    std::string prep_dir;
    auto* cmd_prep = app.add_subcommand("prep", "Build targets, subset, split and normalize a dataset");
    cmd_prep->add_option("--dataset", prep_dataset, "Hourly dataset from ingest")->required();
    cmd_prep->add_option("--task", prep_task, "classification or regression")->capture_default_str();
    cmd_prep->add_option("--threshold", prep_threshold, "Rain threshold in inches")->capture_default_str();
    cmd_prep->add_option("--normalize", prep_norm, "none, minmax or zscore")->capture_default_str();
    cmd_prep->add_option("--scope", prep_scope, "train_only or global")->capture_default_str();
    cmd_prep->add_option("--seed", prep_seed, "Split seed or 'none'")->capture_default_str();
    cmd_prep->add_option("--train-fraction", prep_fraction, "Training share")->capture_default_str();
    cmd_prep->add_flag("--chronological", prep_chrono, "Split by time instead of shuffling");
    cmd_prep->add_option("--out-dir", prep_dir, "Writes train.csv and test.csv here")->required();

    // train
    harness::TrialSpec trial;
    std::string train_model;
    std::string train_dataset;
    std::string train_task = "classification";
    std::string train_norm = "none";
    std::string train_seed = "0";
    std::string train_params;
    std::string train_config;
    std::string train_model_out;
    auto* cmd_train = app.add_subcommand("train", "Run one trial and print its report row");
    cmd_train->add_option("--model", train_model, "knn, linear, wnn, dnn, dwnn, rcc, svm, lstm, gru, bilstm")->required();
    cmd_train->add_option("--dataset", train_dataset, "Hourly dataset from ingest")->required();
    cmd_train->add_option("--task", train_task, "classification or regression")->capture_default_str();
    cmd_train->add_option("--normalize", train_norm, "none, minmax or zscore")->capture_default_str();
    cmd_train->add_option("--seed", train_seed, "Split seed or 'none' (ignored by recurrent models)")->capture_default_str();
    cmd_train->add_option("--params", train_params, "Comma-separated key=value, e.g. k=11 or kernel=rbf");
    cmd_train->add_option("--config", train_config, "Grid config supplying training settings");
    cmd_train->add_option("--model-out", train_model_out, "Write the fitted model as JSON");

    // sweep
    std::string sweep_model;
    std::string sweep_dataset;
    std::string sweep_task = "classification";
    std::string sweep_norm = "none";
    std::string sweep_seed = "0";
    std::string sweep_config;
    std::string sweep_out;
    auto* cmd_sweep = app.add_subcommand("sweep", "Sweep one model's hyperparameter axis on one dataset form");
    cmd_sweep->add_option("--model", sweep_model, "Model family")->required();
    cmd_sweep->add_option("--dataset", sweep_dataset, "Hourly dataset from ingest")->required();
    cmd_sweep->add_option("--task", sweep_task, "classification or regression")->capture_default_str();
    cmd_sweep->add_option("--normalize", sweep_norm, "none, minmax or zscore")->capture_default_str();
    cmd_sweep->add_option("--seed", sweep_seed, "Split seed or 'none'")->capture_default_str();
    cmd_sweep->add_option("--config", sweep_config, "Grid config supplying the axis and training settings");
    cmd_sweep->add_option("--out", sweep_out, "CSV output (default stdout)");

    // grid
    std::string grid_config;
    std::string grid_dir = "results";
    auto* cmd_grid = app.add_subcommand("grid", "Run the full experiment grid");
    cmd_grid->add_option("--config", grid_config, "Grid config file")->required();
    cmd_grid->add_option("--out-dir", grid_dir, "Writes reports.csv and best2.md here")->capture_default_str();

    // report
    std::string report_input;
    std::string report_format = "markdown";
    std::string report_dir = ".";
    auto* cmd_report = app.add_subcommand("report", "Re-emit a report CSV as csv or markdown");
    cmd_report->add_option("--input", report_input, "reports.csv from grid or sweep")->required();
    cmd_report->add_option("--format", report_format, "csv or markdown")->capture_default_str();
    cmd_report->add_option("--out-dir", report_dir, "Output directory")->capture_default_str();

    // feature-matrix
    std::string fm_dataset;
    std::string fm_out;
    auto* cmd_fm = app.add_subcommand("feature-matrix", "Pairwise feature correlations for a scatter-plot matrix");
    cmd_fm->add_option("--dataset", fm_dataset, "Hourly dataset from ingest")->required();
    cmd_fm->add_option("--out", fm_out, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*cmd_synth) {
            const auto regions = data::generate_synthetic(synth);
            fs::create_directories(synth_dir);
            for (std::size_t r = 0; r < regions.size(); ++r) {
                const auto path = (fs::path(synth_dir) / (data::region_name(r) + ".csv")).string();
                auto out = open_out(path);
                data::write_asos_csv(out, regions[r]);
                std::cout << path << '\n';
            }
        } else if (*cmd_ingest) {
            std::vector<std::vector<data::WeatherRecord>> regions;
            for (const auto& path : ingest_inputs) regions.push_back(data::parse_asos_csv(path));
            const auto sources = harness::sources_from_records(regions);
            const auto& ds = sources.datasets.count(data::RegionSet::mixed) ? sources.datasets.at(data::RegionSet::mixed)
                                                                            : sources.datasets.at(data::RegionSet::single);
            data::write_dataset(ingest_out, ds);
            std::cout << ingest_out << ": " << ds.size() << " hours, " << ds.dims() << " features\n";
        } else if (*cmd_prep) {
            auto ds = data::read_dataset(prep_dataset);
            const auto task = data::parse_task(prep_task);
            ds = data::make_targets(ds, task, prep_threshold);
            if (task == data::Task::regression) ds = data::regression_subset(ds, prep_threshold);
            const auto kind = normalize::parse_kind(prep_norm);
            const auto scope = normalize::parse_scope(prep_scope);
            normalize::Normalizer n;
            if (scope == normalize::Scope::global) {
                n = normalize::fit(ds, kind, scope);
                ds = normalize::apply(n, ds);
            }
            const auto seed = harness::parse_seed_choice(prep_seed);
            auto parts = data::split(
                ds, {seed.value, prep_fraction, prep_chrono ? data::SplitMode::chronological : data::SplitMode::shuffled});
            if (scope == normalize::Scope::train_only) {
                n = normalize::fit(parts.train, kind, scope);
                parts.train = normalize::apply(n, parts.train);
                parts.test = normalize::apply(n, parts.test);
            }
            const nlohmann::json extra{{"normalizer", normalize::to_json(n)}};
            data::write_dataset((fs::path(prep_dir) / "train.csv").string(), parts.train, extra);
            data::write_dataset((fs::path(prep_dir) / "test.csv").string(), parts.test, extra);
            if (parts.seed) {
                std::cerr << "split seed: " << *parts.seed << (parts.seed_drawn ? " (drawn from entropy)" : "") << '\n';
            }
            std::cout << "train " << parts.train.size() << " rows, test " << parts.test.size() << " rows\n";
        } else if (*cmd_train) {
            const auto ds = data::read_dataset(train_dataset);
            const auto config = train_config.empty() ? harness::GridConfig{} : harness::load_config(train_config);
            trial.model = train_model;
            trial.task = data::parse_task(train_task);
            trial.dataset = ds.region_set;
            trial.normalization = normalize::parse_kind(train_norm);
            trial.seed = harness::is_recurrent(train_model) ? harness::SeedChoice{std::string(harness::kChronological), {}}
                                                            : harness::parse_seed_choice(train_seed);
            trial.params = parse_params(train_params);
            harness::SeedLog seeds;
            if (!trial.seed.value && !harness::is_recurrent(train_model)) {
                seeds.none_seed = entropy_seed();
                seeds.drawn = true;
                log_seeds(seeds);
            }
            nlohmann::json model;
            const auto report = harness::run_trial(trial, single_source(ds), config, seeds, &model);
            harness::write_csv(std::cout, {report});
            if (!train_model_out.empty()) {
                auto out = open_out(train_model_out);
                out << model.dump(2) << '\n';
            }
        } else if (*cmd_sweep) {
            const auto ds = data::read_dataset(sweep_dataset);
            auto config = sweep_config.empty() ? harness::GridConfig{} : harness::load_config(sweep_config);
            const auto task = data::parse_task(sweep_task);
            config.datasets = {ds.region_set};
            config.normalizations = {normalize::parse_kind(sweep_norm)};
            config.seeds = {harness::parse_seed_choice(sweep_seed)};
            config.classifiers.clear();
            config.regressors.clear();
            (task == data::Task::classification ? config.classifiers : config.regressors).push_back(sweep_model);
            const auto result = harness::run_grid(config, single_source(ds));
            log_seeds(result.seeds);
            if (sweep_out.empty()) {
                harness::write_csv(std::cout, result.reports);
            } else {
                auto out = open_out(sweep_out);
                harness::write_csv(out, result.reports);
            }
            if (result.failures > 0) {
                std::cerr << result.failures << " trial(s) failed\n";
                exit_code = kExitTrialFailures;
            }
        } else if (*cmd_grid) {
            const auto config = harness::load_config(grid_config);
            const auto sources = harness::load_sources(config.data);
            const auto result = harness::run_grid(config, sources);
            log_seeds(result.seeds);
            std::cout << harness::emit_report(result.reports, harness::ReportFormat::csv, grid_dir) << '\n';
            std::cout << harness::emit_report(result.reports, harness::ReportFormat::markdown, grid_dir) << '\n';
            if (result.seeds.none_seed) {
                auto log = open_out((fs::path(grid_dir) / "seeds.log").string());
                log << "none " << *result.seeds.none_seed << (result.seeds.drawn ? " drawn" : " pinned") << '\n';
            }
            std::cerr << result.reports.size() << " trials, " << result.failures << " failed\n";
            if (result.failures > 0) exit_code = kExitTrialFailures;
        } else if (*cmd_report) {
            std::ifstream in(report_input, std::ios::binary);
            if (!in) throw Error(ErrorKind::io, "cannot open '" + report_input + "'");
            const auto reports = harness::read_csv(in);
            std::cout << harness::emit_report(reports, harness::parse_report_format(report_format), report_dir) << '\n';
        } else if (*cmd_fm) {
            const auto ds = data::read_dataset(fm_dataset);
            if (fm_out.empty()) {
                harness::write_feature_pairs(std::cout, ds);
            } else {
                auto out = open_out(fm_out);
                harness::write_feature_pairs(out, ds);
            }
        }
    } catch (const Error& e) {
        std::cerr << "rainbench: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "rainbench: " << e.what() << '\n';
        return 1;
    }
    return exit_code;
}
