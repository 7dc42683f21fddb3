#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "rainbench/error.hpp"
#include "rainbench/harness.hpp"
#include "rainbench/rng.hpp"

namespace rainbench::harness {

namespace {

using data::RegionSet;
using data::Task;

linear::Head head_for(Task task) { return task == Task::classification ? linear::Head::logistic : linear::Head::affine; }

const std::vector<std::string>& models_for(const GridConfig& c, Task task)
{
    return task == Task::classification ? c.classifiers : c.regressors;
}

// Values of the model's single hyperparameter axis, or {} when it has none.
std::pair<std::string, std::vector<std::string>> param_axis(const GridConfig& c, const std::string& model, Task task,
                                                            std::size_t knn_regress_k_max)
{
    const bool cls = task == Task::classification;
    const auto numbers = [](const std::vector<std::size_t>& v) {
        std::vector<std::string> out;
        for (const auto n : v) out.push_back(std::to_string(n));
        return out;
    };
    if (model == "knn") {
        const std::size_t k_max = cls ? c.knn.k_max_classify : knn_regress_k_max;
        std::vector<std::string> ks;
        for (std::size_t k = 1; k <= k_max; ++k) ks.push_back(std::to_string(k));
        return {"k", ks};
    }
    if (model == "rcc") return {"size", numbers(c.rcc.sizes)};
    if (model == "svm") {
        std::vector<std::string> out;
        for (const auto& k : c.svm.kernels) out.push_back(svm::to_string(k));
        return {"kernel", out};
    }
    if (model == "dnn") return {"layers", numbers(cls ? c.dnn.layers_classify : c.dnn.layers_regress)};
    if (model == "dwnn") return {"layers", numbers(cls ? c.dwnn.layers_classify : c.dwnn.layers_regress)};
    if (is_recurrent(model)) {
        return {"sequence", numbers(cls ? c.recurrent.lengths_classify : c.recurrent.lengths_regress)};
    }
    return {"", {}};
}

std::size_t to_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }

std::string flag_join(const std::vector<std::string>& flags)
{
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return out;
}

metrics::EvalReport score(Task task, std::span<const double> truth, std::span<const double> predicted)
{
    return task == Task::classification ? metrics::evaluate_classifier(truth, predicted)
                                        : metrics::evaluate_regressor(truth, predicted);
}

// Gradient-trained regressors fit standardized targets: rain amounts are a
// few hundredths of an inch, which would leave the squared-error gradient
// and the absolute early-stop threshold at the noise floor.
struct TargetScale {
    double mean = 0.0;
    double scale = 1.0;

    static TargetScale fit(std::span<const double> y)
    {
        TargetScale t;
        if (y.empty()) return t;
        for (const double v : y) t.mean += v;
        t.mean /= static_cast<double>(y.size());
        double ss = 0.0;
        for (const double v : y) ss += (v - t.mean) * (v - t.mean);
        const double sd = std::sqrt(ss / static_cast<double>(y.size()));
        t.scale = sd > 0.0 ? sd : 1.0;
        return t;
    }

    std::vector<double> forward(std::span<const double> y) const
    {
        std::vector<double> out(y.begin(), y.end());
        for (auto& v : out) v = (v - mean) / scale;
        return out;
    }

    void inverse(std::vector<double>& y) const
    {
        for (auto& v : y) v = v * scale + mean;
    }
};

metrics::Provenance base_provenance(const TrialSpec& t, const GridConfig& c)
{
    metrics::Provenance p;
    p.model = t.model;
    p.dataset = std::string(data::to_string(t.dataset));
    p.normalization = std::string(normalize::to_string(t.normalization));
    p.random = t.seed.label;
    p.params = t.params;
    p.init_seed = init_seed_for(t, c);
    return p;
}

std::optional<std::uint64_t> resolve_seed(const SeedChoice& choice, const SeedLog& seeds, bool& drawn)
{
    if (choice.value) {
        drawn = false;
        return choice.value;
    }
    drawn = seeds.drawn;
    return seeds.none_seed;
}

// The regression subset is the same rows for every dataset form (the target
// comes from the primary region), so its training size fixes the k range.
std::size_t resolve_knn_regress_k_max(const GridConfig& c, const Sources& sources)
{
    const bool wanted = std::find(c.regressors.begin(), c.regressors.end(), "knn") != c.regressors.end();
    if (!wanted || c.datasets.empty()) {
        return c.knn.k_max_regress;
    }
    try {
        const auto& base = sources.datasets.at(c.datasets.front());
        const auto subset = data::regression_subset(data::make_targets(base, Task::regression, c.threshold), c.threshold);
        const auto train = static_cast<std::size_t>(
            std::floor(c.train_fraction * static_cast<double>(subset.size()) + 1e-9));
        return std::max<std::size_t>(1, std::min(c.knn.k_max_regress, train));
    } catch (const Error&) {
        // Every regression trial will fail and be flagged; keep the nominal range.
        return c.knn.k_max_regress;
    }
}

} // namespace

bool is_recurrent(std::string_view model) { return model == "lstm" || model == "gru" || model == "bilstm"; }

std::string TrialSpec::form_key() const
{
    return std::string(data::to_string(task)) + "|" + std::string(data::to_string(dataset)) + "|"
           + std::string(normalize::to_string(normalization)) + "|" + seed.label;
}

std::string TrialSpec::key() const
{
    std::string out = model + "|" + form_key();
    for (const auto& [k, v] : params) out += "|" + k + "=" + v;
    return out;
}

std::vector<TrialSpec> build_trials(const GridConfig& c, std::size_t knn_regress_k_max)
{
    std::vector<TrialSpec> trials;
    for (const Task task : {Task::classification, Task::regression}) {
        for (const auto& model : models_for(c, task)) {
            const auto [param, values] = param_axis(c, model, task, knn_regress_k_max);
            std::vector<SeedChoice> seeds = c.seeds;
            if (is_recurrent(model)) {
                seeds = {{std::string(kChronological), std::nullopt}};
            }
            for (const auto dataset : c.datasets) {
                for (const auto norm : c.normalizations) {
                    for (const auto& seed : seeds) {
                        TrialSpec t{model, task, dataset, norm, seed, {}};
                        if (values.empty()) {
                            trials.push_back(t);
                            continue;
                        }
                        for (const auto& v : values) {
                            t.params[param] = v;
                            trials.push_back(t);
                        }
                    }
                }
            }
        }
    }
    return trials;
}

std::size_t expected_trials(const GridConfig& c, std::size_t knn_regress_k_max)
{
    const std::size_t forms = c.datasets.size() * c.normalizations.size();
    std::size_t total = 0;
    for (const auto& m : c.classifiers) {
        std::size_t axis = 1;
        if (m == "knn") axis = c.knn.k_max_classify;
        else if (m == "rcc") axis = c.rcc.sizes.size();
        else if (m == "svm") axis = c.svm.kernels.size();
        else if (m == "dnn") axis = c.dnn.layers_classify.size();
        else if (m == "dwnn") axis = c.dwnn.layers_classify.size();
        else if (is_recurrent(m)) axis = c.recurrent.lengths_classify.size();
        total += forms * (is_recurrent(m) ? 1 : c.seeds.size()) * axis;
    }
    for (const auto& m : c.regressors) {
        std::size_t axis = 1;
        if (m == "knn") axis = knn_regress_k_max;
        else if (m == "svm") axis = c.svm.kernels.size();
        else if (m == "dnn") axis = c.dnn.layers_regress.size();
        else if (m == "dwnn") axis = c.dwnn.layers_regress.size();
        else if (is_recurrent(m)) axis = c.recurrent.lengths_regress.size();
        total += forms * (is_recurrent(m) ? 1 : c.seeds.size()) * axis;
    }
    return total;
}

Sources sources_from_records(const std::vector<std::vector<data::WeatherRecord>>& regions)
{
    require(!regions.empty(), ErrorKind::validation, "at least one region is needed");
    Sources s;
    const auto primary_grouped = data::group_hourly(regions.front());
    const auto primary = data::impute(primary_grouped);
    s.datasets[RegionSet::single] = primary;
    if (regions.size() > 1) {
        std::vector<data::HourlyDataset> others;
        for (std::size_t r = 1; r < regions.size(); ++r) {
            others.push_back(data::group_hourly(regions[r], primary_grouped.origin));
        }
        auto mixed = data::join_regions(primary, others);
        s.datasets[RegionSet::mixed] = std::move(mixed);
    }
    return s;
}

Sources load_sources(const DataSettings& settings)
{
    if (settings.synthetic) {
        return sources_from_records(data::generate_synthetic(*settings.synthetic));
    }
    require(!settings.primary.empty(), ErrorKind::config, "[data] needs either synthetic = true or a primary file");
    std::vector<std::vector<data::WeatherRecord>> regions;
    regions.push_back(data::parse_asos_csv(settings.primary));
    for (const auto& path : settings.secondary) {
        regions.push_back(data::parse_asos_csv(path));
    }
    return sources_from_records(regions);
}

Prepared prepare_tabular(const data::HourlyDataset& source, Task task, normalize::Kind normalization,
                         std::optional<std::uint64_t> seed, bool seed_drawn, const GridConfig& c)
{
    auto ds = data::make_targets(source, task, c.threshold);
    if (task == Task::regression) {
        ds = data::regression_subset(ds, c.threshold);
    }
    if (c.scope == normalize::Scope::global) {
        ds = normalize::apply(normalize::fit(ds, normalization, c.scope), ds);
    }
    require(seed.has_value(), ErrorKind::validation, "tabular trials need a resolved split seed");
    auto parts = data::split(ds, {seed, c.train_fraction, data::SplitMode::shuffled});
    if (c.scope == normalize::Scope::train_only) {
        const auto n = normalize::fit(parts.train, normalization, c.scope);
        parts.train = normalize::apply(n, parts.train);
        parts.test = normalize::apply(n, parts.test);
    }
    require(parts.train.size() > 0 && parts.test.size() > 0, ErrorKind::insufficient_data,
            "split left an empty training or test part");
    Prepared p;
    p.train_x = std::move(parts.train.features);
    p.test_x = std::move(parts.test.features);
    p.train_y = std::move(parts.train.target);
    p.test_y = std::move(parts.test.target);
    p.split_seed = seed;
    p.seed_drawn = seed_drawn;
    return p;
}

PreparedSequences prepare_sequences(const data::HourlyDataset& source, Task task, normalize::Kind normalization,
                                    std::size_t length, const GridConfig& c)
{
    auto ds = data::make_targets(source, task, c.threshold);
    const auto cut_rows = static_cast<std::size_t>(std::floor(c.train_fraction * static_cast<double>(ds.size()) + 1e-9));
    require(cut_rows > 0, ErrorKind::insufficient_data, "too few rows for a chronological split");
    normalize::Normalizer n;
    if (c.scope == normalize::Scope::global) {
        n = normalize::fit(ds, normalization, c.scope);
    } else {
        std::vector<std::size_t> head(cut_rows);
        for (std::size_t i = 0; i < cut_rows; ++i) head[i] = i;
        n = normalize::fit(ds.select_rows(head), normalization, c.scope);
    }
    ds = normalize::apply(n, ds);
    auto windows = recurrent::make_sequences(ds, length);
    if (task == Task::regression) {
        windows = windows.above(c.threshold);
        if (windows.size() == 0) {
            throw Error(ErrorKind::empty_subset, "no sequence window has a target above the threshold");
        }
    }
    const auto cut = static_cast<std::size_t>(std::floor(c.train_fraction * static_cast<double>(windows.size()) + 1e-9));
    require(cut > 0 && cut < windows.size(), ErrorKind::insufficient_data, "too few sequence windows to split");
    std::vector<std::size_t> train_idx(cut);
    std::vector<std::size_t> test_idx(windows.size() - cut);
    for (std::size_t i = 0; i < cut; ++i) train_idx[i] = i;
    for (std::size_t i = cut; i < windows.size(); ++i) test_idx[i - cut] = i;
    return {windows.subset(train_idx), windows.subset(test_idx)};
}

std::uint64_t init_seed_for(const TrialSpec& trial, const GridConfig& c)
{
    if (trial.task == Task::regression) {
        return c.regressor_init_seed;
    }
    return mix_seed(c.grid_seed, hash_key(trial.key()));
}

metrics::EvalReport run_trial(const TrialSpec& t, const Sources& sources, const GridConfig& c, const SeedLog& seeds,
                              nlohmann::json* model_json)
{
    const auto src = sources.datasets.find(t.dataset);
    if (src == sources.datasets.end()) {
        throw Error(ErrorKind::validation, "no source for the " + std::string(data::to_string(t.dataset)) + " dataset");
    }
    const auto& source = src->second;
    auto prov = base_provenance(t, c);
    const auto head = head_for(t.task);
    std::vector<std::string> flags;
    std::vector<double> predicted;
    std::vector<double> truth;
    TargetScale ts;
    bool rescaled = false;

    if (is_recurrent(t.model)) {
        auto seq = prepare_sequences(source, t.task, t.normalization, to_size(t.params.at("sequence")), c);
        if (t.task == Task::regression) {
            ts = TargetScale::fit(seq.train.targets);
            seq.train.targets = ts.forward(seq.train.targets);
            rescaled = true;
        }
        const auto model = recurrent::fit_recurrent(seq.train, recurrent::parse_cell(t.model), head, c.recurrent.options,
                                                    prov.init_seed);
        if (!std::isfinite(model.loss_trace.empty() ? 0.0 : model.loss_trace.back())) flags.push_back("loss-nonfinite");
        predicted = model.predict(seq.test);
        truth = seq.test.targets;
        if (model_json) *model_json = recurrent::to_json(model);
    } else {
        bool drawn = false;
        const auto seed = resolve_seed(t.seed, seeds, drawn);
        auto p = prepare_tabular(source, t.task, t.normalization, seed, drawn, c);
        const bool gradient_trained = t.model == "wnn" || t.model == "dnn" || t.model == "dwnn";
        if (t.task == Task::regression && gradient_trained) {
            ts = TargetScale::fit(p.train_y);
            p.train_y = ts.forward(p.train_y);
            rescaled = true;
        }
        prov.split_seed = p.split_seed;
        prov.seed_drawn = p.seed_drawn;
        truth = p.test_y;
        if (t.model == "knn") {
            const knn::KnnModel m(p.train_x, p.train_y, to_size(t.params.at("k")), c.knn.metric,
                                  t.task == Task::classification ? knn::Mode::classify : knn::Mode::regress);
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = {{"type", "knn"}, {"k", m.k()}, {"metric", knn::to_string(m.metric())}};
        } else if (t.model == "linear") {
            const auto m = linear::fit_linear_regression(p.train_x, p.train_y);
            if (m.ridge_fallback) flags.push_back("ridge-fallback");
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = linear::to_json(m);
        } else if (t.model == "wnn") {
            const auto m = t.task == Task::classification ? linear::fit_wide_classifier(p.train_x, p.train_y, c.wnn.options)
                                                          : linear::fit_wide_regressor(p.train_x, p.train_y, c.wnn.options);
            if (!std::isfinite(m.final_loss())) flags.push_back("loss-nonfinite");
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = linear::to_json(m);
        } else if (t.model == "dnn") {
            const auto m = neural::fit_mlp(p.train_x, p.train_y, to_size(t.params.at("layers")), head, c.dnn.train,
                                           prov.init_seed);
            if (!std::isfinite(m.loss_trace.empty() ? 0.0 : m.loss_trace.back())) flags.push_back("loss-nonfinite");
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = neural::to_json(m);
        } else if (t.model == "dwnn") {
            const auto m = neural::fit_deep_wide(p.train_x, p.train_y, to_size(t.params.at("layers")), head,
                                                 c.dwnn.options, prov.init_seed);
            if (!std::isfinite(m.loss_trace.empty() ? 0.0 : m.loss_trace.back())) flags.push_back("loss-nonfinite");
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = neural::to_json(m);
        } else if (t.model == "rcc") {
            require(t.task == Task::classification, ErrorKind::validation, "the reservoir model is a classifier only");
            auto options = c.rcc.options;
            options.size = to_size(t.params.at("size"));
            const auto m = reservoir::fit_rcc(p.train_x, p.train_y, options, prov.init_seed);
            if (m.reservoir.regenerations() > 0) {
                flags.push_back("reservoir-regenerated=" + std::to_string(m.reservoir.regenerations()));
            }
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = reservoir::to_json(m);
        } else if (t.model == "svm") {
            const auto kernel = svm::parse_kernel(t.params.at("kernel"));
            const auto m = t.task == Task::classification
                               ? svm::fit_svc(p.train_x, p.train_y, kernel, c.svm.solver)
                               : svm::fit_svr(p.train_x, p.train_y, kernel, c.svm.epsilon, c.svm.solver);
            if (m.budget_exhausted) flags.push_back("budget-exhausted");
            predicted = m.predict(p.test_x);
            if (model_json) *model_json = svm::to_json(m);
        } else {
            throw Error(ErrorKind::validation, "unknown model '" + t.model + "'");
        }
    }

    if (rescaled) {
        ts.inverse(predicted);
        if (model_json) (*model_json)["target_scale"] = {{"mean", ts.mean}, {"scale", ts.scale}};
    }
    auto report = score(t.task, truth, predicted);
    prov.flags = flag_join(flags);
    report.provenance = std::move(prov);
    return report;
}

GridResult run_grid(const GridConfig& c, const Sources& sources)
{
    const std::size_t k_regress = resolve_knn_regress_k_max(c, sources);
    const auto trials = build_trials(c, k_regress);
    const std::size_t expected = expected_trials(c, k_regress);
    if (trials.size() != expected) {
        throw Error(ErrorKind::config, "grid enumerates " + std::to_string(trials.size()) + " trials but its axes give "
                                           + std::to_string(expected));
    }

    GridResult result;
    const bool wants_none = std::any_of(c.seeds.begin(), c.seeds.end(), [](const SeedChoice& s) { return !s.value; });
    if (wants_none) {
        if (c.none_seed) {
            result.seeds.none_seed = c.none_seed;
        } else {
            result.seeds.none_seed = entropy_seed();
            result.seeds.drawn = true;
        }
    }

    // Consecutive trials that differ only in the swept parameter form a
    // group; a KNN group shares one neighbor ordering per query.
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t i = 0; i < trials.size();) {
        std::size_t j = i + 1;
        while (j < trials.size() && trials[j].model == trials[i].model && trials[j].form_key() == trials[i].form_key()) {
            ++j;
        }
        groups.emplace_back(i, j);
        i = j;
    }

    std::vector<metrics::EvalReport> reports(trials.size());
    const auto failed_row = [&](const TrialSpec& t, const std::string& message) {
        metrics::EvalReport r;
        r.task = t.task;
        r.r2_valid = false;
        r.pcc_valid = false;
        r.provenance = base_provenance(t, c);
        if (!is_recurrent(t.model)) {
            bool drawn = false;
            r.provenance.split_seed = resolve_seed(t.seed, result.seeds, drawn);
            r.provenance.seed_drawn = drawn;
        }
        r.provenance.failed = true;
        r.provenance.message = message;
        return r;
    };

    const auto run_group = [&](std::size_t first, std::size_t last) {
        const auto& lead = trials[first];
        if (lead.model == "knn") {
            try {
                bool drawn = false;
                const auto seed = resolve_seed(lead.seed, result.seeds, drawn);
                const auto p = prepare_tabular(sources.datasets.at(lead.dataset), lead.task, lead.normalization, seed,
                                               drawn, c);
                std::size_t k_top = 0;
                for (std::size_t i = first; i < last; ++i) k_top = std::max(k_top, to_size(trials[i].params.at("k")));
                require(k_top <= p.train_x.rows(), ErrorKind::insufficient_data,
                        "k = " + std::to_string(k_top) + " exceeds the " + std::to_string(p.train_x.rows())
                            + " training rows");
                const auto mode = lead.task == Task::classification ? knn::Mode::classify : knn::Mode::regress;
                const auto sweep = knn::sweep_k(p.train_x, p.train_y, p.test_x, p.test_y, k_top, mode, c.knn.metric);
                for (std::size_t i = first; i < last; ++i) {
                    auto r = sweep.reports[to_size(trials[i].params.at("k")) - 1];
                    r.provenance = base_provenance(trials[i], c);
                    r.provenance.split_seed = p.split_seed;
                    r.provenance.seed_drawn = p.seed_drawn;
                    reports[i] = std::move(r);
                }
            } catch (const std::exception& e) {
                for (std::size_t i = first; i < last; ++i) reports[i] = failed_row(trials[i], e.what());
            }
            return;
        }
        for (std::size_t i = first; i < last; ++i) {
            try {
                reports[i] = run_trial(trials[i], sources, c, result.seeds);
            } catch (const std::exception& e) {
                reports[i] = failed_row(trials[i], e.what());
            }
        }
    };

    if (c.jobs <= 1) {
        for (const auto& [first, last] : groups) run_group(first, last);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        for (std::size_t w = 0; w < c.jobs; ++w) {
            workers.emplace_back([&] {
                for (std::size_t g = next++; g < groups.size(); g = next++) {
                    run_group(groups[g].first, groups[g].second);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    for (const auto& r : reports) {
        if (r.provenance.failed) ++result.failures;
    }
    sort_reports(reports);
    result.reports = std::move(reports);
    return result;
}

} // namespace rainbench::harness
