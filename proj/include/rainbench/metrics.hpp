#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "rainbench/data.hpp"

namespace rainbench::metrics {

// Where a score came from: enough to re-run the trial.
struct Provenance {
    std::string model;         // knn, linear, wnn, dnn, dwnn, rcc, svm, lstm, gru, bilstm
    std::string dataset;       // single | mixed
    std::string normalization; // none | minmax | zscore
    std::string random;        // split seed label: none, 0, 42, or chronological
    std::optional<std::uint64_t> split_seed;
    bool seed_drawn = false;
    std::uint64_t init_seed = 0;
    std::map<std::string, std::string> params;
    std::string flags;  // ';'-joined solver notes (ridge-fallback, budget-exhausted, ...)
    bool failed = false;
    std::string message;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

// Scores for one evaluation. Regression scores carry explicit validity flags;
// "invalid" is never encoded as NaN.
struct EvalReport {
    data::Task task = data::Task::classification;
    double accuracy = 0.0;
    double r2 = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double pcc = 0.0;
    bool r2_valid = true;
    bool pcc_valid = true;
    Provenance provenance;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate_classifier(std::span<const double> truth, std::span<const double> predicted);

// r2 is flagged invalid when SStot = 0 or the residual sum is non-finite and
// otherwise reported as-is (possibly negative); pcc is flagged invalid when
// either side has zero variance.
EvalReport evaluate_regressor(std::span<const double> truth, std::span<const double> predicted);

double pearson(std::span<const double> x, std::span<const double> y, bool* valid = nullptr);

} // namespace rainbench::metrics
