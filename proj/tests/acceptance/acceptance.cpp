// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Set RAINBENCH_ACCEPTANCE_SKIP_GRID=1 to skip the full
// grid replication (it reports SKIP instead).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "knn_oracle.hpp"
#include "rainbench/data.hpp"
#include "rainbench/harness.hpp"
#include "rainbench/knn.hpp"
#include "rainbench/linear.hpp"
#include "rainbench/metrics.hpp"
#include "rainbench/neural.hpp"
#include "rainbench/recurrent.hpp"
#include "rainbench/reservoir.hpp"
#include "rainbench/svm.hpp"
#include "test_support.hpp"

using namespace rainbench;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixture(const std::string& name) { return std::string(RAINBENCH_FIXTURE_DIR) + "/" + name; }

nlohmann::json load_json(const std::string& name)
{
    std::ifstream in(fixture(name));
    return nlohmann::json::parse(in);
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// --- 1 ---------------------------------------------------------------------

void knn_oracle(Outcome& out)
{
    const auto start = Clock::now();
    Rng rng(2024);
    std::size_t mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + rng.below(200);
        const std::size_t d = 1 + rng.below(36);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(51, n));
        const bool regress = t % 2 == 1;
        const auto x = testing::random_matrix(rng, n, d);
        std::vector<double> y(n);
        for (auto& v : y) v = regress ? rng.uniform(0, 2) : static_cast<double>(rng.below(3));
        const knn::KnnModel model(x, y, k, knn::Metric::euclidean(), regress ? knn::Mode::regress : knn::Mode::classify);
        for (int q = 0; q < 10; ++q) {
            const auto query = testing::random_vector(rng, d);
            if (model.predict(query) != testing::knn_oracle(x, y, query, k, regress)) ++mismatches;
        }
    }
    const double secs = seconds_since(start);
    out.check(mismatches == 0, std::to_string(mismatches) + " predictions differ from the oracle");
    out.check(secs < 10.0, "took longer than 10 s");
    out.detail << (out.pass ? "" : "; ") << "100 instances, 1000 queries, " << secs << " s";
}

// --- 2 ---------------------------------------------------------------------

void gradients(Outcome& out)
{
    const auto start = Clock::now();
    Rng rng(77);
    std::map<std::string, double> worst;
    using neural::Head;

    for (int t = 0; t < 20; ++t) {
        const std::size_t layers = 1 + static_cast<std::size_t>(t % 5);
        const Head head = t % 2 == 0 ? Head::logistic : Head::affine;
        const std::size_t d = 2 + rng.below(3);
        const auto x = testing::random_matrix(rng, 6, d, -2, 2);
        const auto y = head == Head::logistic ? testing::random_labels(rng, 6) : testing::random_vector(rng, 6);
        auto m = neural::MlpModel::initialized(d, layers, head, rng.next_u64());
        auto p = m.parameters();
        for (auto& v : p) v += rng.uniform(-0.5, 0.5);
        m.set_parameters(p);
        std::vector<double> grad;
        neural::loss_and_gradient(m, x, y, &grad);
        auto probe = m;
        worst["mlp"] = std::max(worst["mlp"], testing::gradient_check(p, grad, [&](const std::vector<double>& q) {
            probe.set_parameters(q);
            return neural::loss_and_gradient(probe, x, y, nullptr);
        }));
    }

    for (int t = 0; t < 20; ++t) {
        const Head head = t % 2 == 0 ? Head::logistic : Head::affine;
        const std::size_t d = 2 + rng.below(3);
        const auto x = testing::random_matrix(rng, 8, d, -2, 2);
        const auto y = head == Head::logistic ? testing::random_labels(rng, 8) : testing::random_vector(rng, 8);
        neural::DeepWideOptions opt;
        opt.crosses = t % 3 == 0 ? linear::CrossSet::none : linear::CrossSet::all_pairs;
        auto m = neural::init_deep_wide(x, 1 + rng.below(3), head, opt, rng.next_u64());
        auto p = m.parameters();
        for (auto& v : p) v += rng.uniform(-0.5, 0.5);
        // The deep head bias is held at zero (the wide bias is the shared one).
        p.back() = 0.0;
        m.set_parameters(p);
        std::vector<double> grad;
        neural::loss_and_gradient(m, x, y, &grad);
        grad.pop_back();
        p.pop_back();
        auto probe = m;
        worst["dwnn"] = std::max(worst["dwnn"], testing::gradient_check(p, grad, [&](std::vector<double> q) {
            q.push_back(0.0);
            probe.set_parameters(q);
            return neural::loss_and_gradient(probe, x, y, nullptr);
        }));
    }

    for (const auto cell : {recurrent::CellKind::lstm, recurrent::CellKind::gru}) {
        const std::string name(recurrent::to_string(cell));
        for (int t = 0; t < 20; ++t) {
            const Head head = t % 2 == 0 ? Head::logistic : Head::affine;
            const std::size_t d = 1 + rng.below(3);
            const std::size_t hidden = 1 + rng.below(3);
            const std::size_t length = 2 + rng.below(4);
            const auto rows = testing::random_matrix(rng, length + 5, d, -2, 2);
            const auto targets = head == Head::logistic ? testing::random_labels(rng, length + 5)
                                                        : testing::random_vector(rng, length + 5);
            const auto set = recurrent::make_sequences(rows, targets, length);
            auto m = recurrent::RecurrentModel::initialized(cell, d, hidden, head, t % 4 != 3, rng.next_u64());
            for (auto& v : m.parameters()) v += rng.uniform(-0.3, 0.3);
            std::vector<double> grad;
            recurrent::loss_and_gradient(m, set, &grad);
            auto probe = m;
            worst[name] = std::max(worst[name], testing::gradient_check(m.parameters(), grad, [&](const std::vector<double>& q) {
                probe.parameters() = q;
                return recurrent::loss_and_gradient(probe, set, nullptr);
            }));
        }
    }

    const double secs = seconds_since(start);
    for (const auto& [name, err] : worst) out.check(err < 1e-4, name + " max relative error " + std::to_string(err));
    out.check(secs < 60.0, "took longer than 60 s");
    out.detail << (out.pass ? "" : "; ") << "max relative error";
    for (const auto& [name, err] : worst) out.detail << ' ' << name << '=' << err;
    out.detail << ", " << secs << " s";
}

// --- 3 ---------------------------------------------------------------------

bool non_decreasing(const std::vector<double>& trace)
{
    for (std::size_t k = 1; k < trace.size(); ++k) {
        if (trace[k] < trace[k - 1] - 1e-12 * std::max(1.0, std::fabs(trace[k - 1]))) return false;
    }
    return true;
}

void convex_solver(Outcome& out)
{
    Rng rng(101);
    Matrix x(0, 2);
    std::vector<double> y;
    while (y.size() < 20) {
        const double a = rng.uniform(-3, 3);
        const double b = rng.uniform(-3, 3);
        const double side = b - a - 0.5;
        if (std::fabs(side) < 0.5) continue;
        x.append_row(std::vector<double>{a, b});
        y.push_back(side > 0 ? 1.0 : 0.0);
    }
    svm::KernelSpec lin;
    lin.kind = svm::KernelKind::linear;
    svm::SolverOptions opt;
    opt.c = 10.0;
    opt.record_objective = true;
    const auto svc = svm::fit_svc(x, y, lin, opt);
    const double acc = metrics::evaluate_classifier(y, svc.predict(x)).accuracy;
    const double kkt = svm::kkt_violation(svc);
    out.check(acc == 1.0, "SVC train accuracy " + std::to_string(acc));
    out.check(kkt <= 1e-3, "SVC KKT violation " + std::to_string(kkt));
    out.check(!svc.objective_trace.empty() && non_decreasing(svc.objective_trace), "SVC dual objective not monotone");

    Matrix xr(0, 2);
    std::vector<double> yr;
    for (int i = 0; i < 30; ++i) {
        const double a = rng.uniform(-1, 1);
        const double b = rng.uniform(-1, 1);
        xr.append_row(std::vector<double>{a, b});
        yr.push_back(1.5 * a - 0.7 * b + 0.3);
    }
    const double eps = 0.05;
    svm::SolverOptions ropt;
    ropt.c = 100.0;
    ropt.tol = 1e-8;
    ropt.record_objective = true;
    const auto svr = svm::fit_svr(xr, yr, lin, eps, ropt);
    double worst_residual = 0.0;
    for (std::size_t i = 0; i < yr.size(); ++i) {
        worst_residual = std::max(worst_residual, std::fabs(svr.predict(xr.row(i)) - yr[i]));
    }
    out.check(worst_residual <= eps + 1e-6, "SVR residual " + std::to_string(worst_residual));
    out.check(!svr.objective_trace.empty() && non_decreasing(svr.objective_trace), "SVR dual objective not monotone");
    out.detail << (out.pass ? "" : "; ") << "SVC accuracy " << acc << ", KKT " << kkt << ", SVR max residual "
               << worst_residual << " (eps " << eps << "), " << svc.objective_trace.size() << "+"
               << svr.objective_trace.size() << " monotone objective steps";
}

// --- 4 ---------------------------------------------------------------------

void reservoir_properties(Outcome& out)
{
    double radius_err = 0.0;
    for (const std::size_t m : {10u, 50u, 100u, 200u, 400u}) {
        const auto res = reservoir::Reservoir::build(9, m, 1.0, 0.9, 0.1, 17 + m);
        radius_err = std::max(radius_err, std::fabs(reservoir::spectral_radius(res.adjacency()) - 0.9));
    }
    out.check(radius_err <= 1e-9, "spectral radius off by " + std::to_string(radius_err));

    Rng rng(31);
    const auto res = reservoir::Reservoir::build(4, 100, 1.0, 0.9, 0.1, 12);
    const auto rows = testing::random_matrix(rng, 200, 4, 0, 1);
    auto s1 = testing::random_vector(rng, 100, -0.9, 0.9);
    auto s2 = testing::random_vector(rng, 100, -0.9, 0.9);
    double initial = 0.0;
    for (std::size_t j = 0; j < 100; ++j) initial += (s1[j] - s2[j]) * (s1[j] - s2[j]);
    res.run_states(rows, 0, s1);
    res.run_states(rows, 0, s2);
    double final_dist = 0.0;
    for (std::size_t j = 0; j < 100; ++j) final_dist += (s1[j] - s2[j]) * (s1[j] - s2[j]);
    const double contraction = std::sqrt(final_dist / initial);
    out.check(contraction < 1e-6, "contraction after 200 steps " + std::to_string(contraction));

    const auto states = res.run_states(testing::random_matrix(rng, 60, 4, 0, 1), 10);
    Matrix targets(states.rows(), 2, 0.0);
    for (std::size_t i = 0; i < states.rows(); ++i) targets(i, rng.below(2)) = 1.0;
    const auto w = reservoir::fit_readout(states, targets, 1e-12);
    double worst = 0.0;
    for (std::size_t i = 0; i < states.rows(); ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            double v = 0.0;
            for (std::size_t j = 0; j < states.cols(); ++j) v += states(i, j) * w(j, c);
            worst = std::max(worst, std::fabs(v - targets(i, c)));
        }
    }
    out.check(worst < 1e-6, "readout misses a training target by " + std::to_string(worst));
    out.detail << (out.pass ? "" : "; ") << "radius error " << radius_err << ", contraction " << contraction
               << ", readout max error " << worst;
}

// --- 5 ---------------------------------------------------------------------

void metric_identities(Outcome& out)
{
    Rng rng(17);
    double rmse_gap = 0.0;
    double mean_r2 = 0.0;
    double pcc_gap = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng.below(100);
        const auto y = testing::random_vector(rng, n, -3, 3);
        const auto p = testing::random_vector(rng, n, -3, 3);
        const auto r = metrics::evaluate_regressor(y, p);
        rmse_gap = std::max(rmse_gap, std::fabs(r.rmse * r.rmse - r.mse));
        double mean = 0.0;
        for (const double v : y) mean += v;
        mean /= static_cast<double>(n);
        mean_r2 = std::max(mean_r2, std::fabs(metrics::evaluate_regressor(y, std::vector<double>(n, mean)).r2));
        const double a = rng.uniform(0.1, 10.0);
        const double b = rng.uniform(-10.0, 10.0);
        std::vector<double> affine(n);
        for (std::size_t i = 0; i < n; ++i) affine[i] = a * p[i] + b;
        pcc_gap = std::max(pcc_gap, std::fabs(metrics::pearson(y, affine) - metrics::pearson(y, p)));
    }
    out.check(rmse_gap <= 1e-12, "rmse^2 - mse " + std::to_string(rmse_gap));
    out.check(mean_r2 <= 1e-12, "mean predictor R2 " + std::to_string(mean_r2));
    out.check(pcc_gap <= 1e-9, "pcc affine gap " + std::to_string(pcc_gap));
    const auto fixed = metrics::evaluate_regressor(std::vector<double>{0, 1}, std::vector<double>{0.5, 0.5});
    out.check(fixed.mse == 0.25 && fixed.rmse == 0.5 && fixed.r2 == 0.0, "hand fixture");
    const auto acc = metrics::evaluate_classifier(std::vector<double>{1, 0, 1, 1}, std::vector<double>{1, 1, 1, 0});
    out.check(acc.accuracy == 0.5, "accuracy fixture");
    out.detail << (out.pass ? "" : "; ") << "rmse^2-mse " << rmse_gap << ", mean-predictor R2 " << mean_r2
               << ", pcc affine gap " << pcc_gap << ", fixtures exact";
}

// --- 6 ---------------------------------------------------------------------

bool series_matches(const data::HourlyDataset& ds, std::size_t col, const nlohmann::json& want)
{
    if (ds.size() != want.size()) return false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double got = ds.features(i, col);
        if (want[i].is_null()) {
            if (!data::is_missing(got)) return false;
        } else if (std::fabs(got - want[i].get<double>()) > 1e-12 * std::max(1.0, std::fabs(got))) {
            return false;
        }
    }
    return true;
}

bool values_match(const std::vector<double>& got, const nlohmann::json& want)
{
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (std::fabs(got[i] - want[i].get<double>()) > 1e-12) return false;
    }
    return true;
}

void pipeline(Outcome& out)
{
    using namespace data;
    const auto rules = load_json("hourly_rules.expected.json");
    const auto grouped = group_hourly(parse_asos_csv(fixture("hourly_rules.csv")));
    out.check(grouped.size() == rules["rows"].get<std::size_t>(), "hourly row count");
    out.check(series_matches(grouped, kPrecipColumn, rules["grouped_p01i"]), "hourly p01i max rule");
    out.check(series_matches(grouped, index_of(Feature::tmpf), rules["grouped_tmpf"]), "hourly mean rule");
    const auto imputed = impute(grouped);
    out.check(series_matches(imputed, kPrecipColumn, rules["imputed_p01i"]), "missing p01i -> 0");
    out.check(series_matches(imputed, index_of(Feature::tmpf), rules["imputed_tmpf"]), "interpolation midpoint");
    out.check(series_matches(imputed, index_of(Feature::vsby), rules["imputed_vsby"]), "interpolation over two hours");
    const auto cls = make_targets(imputed, Task::classification);
    const auto reg = make_targets(imputed, Task::regression);
    out.check(values_match(cls.target, rules["classification_target"]), "threshold strictness");
    out.check(values_match(reg.target, rules["regression_target"]), "regression target");
    out.check(values_match(regression_subset(reg).target, rules["regression_subset_target"]), "regression subset filter");

    const auto join = load_json("join.expected.json");
    const auto roc = impute(group_hourly(parse_asos_csv(fixture("join_roc.csv"))));
    std::vector<HourlyDataset> others;
    for (const char* name : {"join_buf.csv", "join_syr.csv", "join_alb.csv"}) {
        others.push_back(group_hourly(parse_asos_csv(fixture(name))));
    }
    const auto joined = join_regions(roc, others);
    out.check(joined.dims() == 36 && joined.dims() == join["columns"].get<std::size_t>(), "left-join width");
    out.check(joined.size() == join["rows"].get<std::size_t>(), "left-join rows");
    out.check(joined.feature_names[9] == join["column_9"].get<std::string>()
                  && joined.feature_names[35] == join["column_35"].get<std::string>(),
              "joined column names");
    out.check(series_matches(joined, 18 + index_of(Feature::tmpf), join["syr_tmpf"]), "secondary interpolation");
    out.check(series_matches(joined, 18 + kPrecipColumn, join["syr_p01i"]), "secondary p01i fill");

    const auto perms = load_json("split_permutation_n20.expected.json");
    bool perm_ok = true;
    for (const auto& [seed, perm] : perms["seeds"].items()) {
        perm_ok = perm_ok && split_permutation(20, std::stoull(seed)) == perm.get<std::vector<std::size_t>>();
    }
    out.check(perm_ok, "reference permutation");

    SynthOptions opt;
    opt.hours = 1001;
    const auto thousand = make_targets(impute(group_hourly(generate_synthetic(opt)[0])), Task::classification);
    SplitSpec spec;
    spec.seed = 42;
    const auto s = split(thousand, spec);
    std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
    all.insert(s.test_indices.begin(), s.test_indices.end());
    out.check(thousand.size() == 1000 && s.train.size() == 700 && s.test.size() == 300 && all.size() == 1000,
              "700/300 split");
    out.detail << (out.pass ? "" : "; ")
               << "hourly rules, imputation, thresholds, regression subset, 36-column join, split permutation, 700/300";
}

// --- 7 ---------------------------------------------------------------------

void grid_replication(Outcome& out)
{
    const auto config = harness::load_config(std::string(RAINBENCH_CONFIG_DIR) + "/grid.ini");
    const auto sources = harness::load_sources(config.data);
    out.check(sources.datasets.at(data::RegionSet::mixed).dims() == 36, "mixed dataset is not 36 columns wide");

    const std::filesystem::path root = std::filesystem::current_path() / "acceptance_grid";
    std::vector<std::string> csv;
    std::vector<std::string> md;
    std::vector<double> secs;
    harness::GridResult first;
    for (int run = 0; run < 2; ++run) {
        const auto start = Clock::now();
        auto result = harness::run_grid(config, sources);
        secs.push_back(seconds_since(start));
        const auto dir = (root / ("run" + std::to_string(run + 1))).string();
        csv.push_back(slurp(harness::emit_report(result.reports, harness::ReportFormat::csv, dir)));
        md.push_back(slurp(harness::emit_report(result.reports, harness::ReportFormat::markdown, dir)));
        if (run == 0) first = std::move(result);
    }

    std::map<std::pair<data::Task, std::string>, std::size_t> counts;
    for (const auto& r : first.reports) ++counts[{r.task, r.provenance.model}];
    const auto count = [&](data::Task t, const char* m) {
        const auto it = counts.find({t, m});
        return it == counts.end() ? std::size_t{0} : it->second;
    };
    using data::Task;
    const std::vector<std::tuple<Task, const char*, std::size_t>> wanted{
        {Task::classification, "knn", 756}, {Task::classification, "rcc", 108}, {Task::classification, "svm", 72},
        {Task::classification, "dwnn", 72}, {Task::classification, "wnn", 18},  {Task::regression, "wnn", 18},
    };
    for (const auto& [task, model, n] : wanted) {
        const auto got = count(task, model);
        out.check(got == n, std::string(model) + " " + std::string(data::to_string(task)) + " has " + std::to_string(got)
                                + " trials, want " + std::to_string(n));
    }
    std::size_t k_regress = 0;
    for (const auto& r : first.reports) {
        if (r.task == Task::regression && r.provenance.model == "knn") {
            k_regress = std::max<std::size_t>(k_regress, std::stoul(r.provenance.params.at("k")));
        }
    }
    out.check(first.reports.size() == harness::expected_trials(config, k_regress), "total trial count");
    out.check(first.failures == 0, std::to_string(first.failures) + " failed trials");

    std::size_t tables = 0;
    for (std::size_t pos = md[0].find("### "); pos != std::string::npos; pos = md[0].find("### ", pos + 1)) ++tables;
    out.check(tables == counts.size(), std::to_string(tables) + " tables for " + std::to_string(counts.size()) + " models");
    std::size_t body_rows = 0;
    std::istringstream lines(md[0]);
    for (std::string line; std::getline(lines, line);) {
        if (line.rfind("| Mixed", 0) == 0 || line.rfind("| Single", 0) == 0) ++body_rows;
    }
    out.check(body_rows == 4 * counts.size(), "tables do not all hold two rows per dataset");
    out.check(csv[0] == csv[1] && md[0] == md[1], "the two runs differ");
    const double slowest = std::max(secs[0], secs[1]);
    out.check(slowest < 1800.0, "a run took longer than 30 min");
    out.detail << (out.pass ? "" : "; ") << first.reports.size() << " trials (knn-classify " << count(Task::classification, "knn")
               << ", rcc " << count(Task::classification, "rcc") << ", svm-classify " << count(Task::classification, "svm")
               << ", dwnn-classify " << count(Task::classification, "dwnn") << ", wnn " << count(Task::classification, "wnn")
               << "+" << count(Task::regression, "wnn") << "), " << tables << " best-2 tables, byte-identical reruns, "
               << static_cast<long>(secs[0]) << " s + " << static_cast<long>(secs[1]) << " s";
}

// --- 8 ---------------------------------------------------------------------

void sanity(Outcome& out)
{
    // Highly persistent latent wetness: next-hour rain is predictable from
    // the current observation.
    data::SynthOptions synth;
    synth.hours = 2000;
    synth.seed = 11;
    synth.regions = 4;
    synth.persistence = 0.97;
    const auto sources = harness::sources_from_records(data::generate_synthetic(synth));

    // Grid defaults everywhere except the reservoir: with input scale 1 the
    // z-scored 36-column rows saturate every tanh unit, and the carried state
    // is meaningless across shuffled rows.
    harness::GridConfig base;
    harness::GridConfig reservoir_config = base;
    reservoir_config.rcc.options.mode = reservoir::StateMode::reset;
    reservoir_config.rcc.options.input_scale = 0.1;

    const auto trial = [](const std::string& model, data::Task task, std::map<std::string, std::string> params) {
        harness::TrialSpec t;
        t.model = model;
        t.task = task;
        t.dataset = data::RegionSet::mixed;
        t.normalization = normalize::Kind::zscore;
        t.seed = harness::is_recurrent(model) ? harness::SeedChoice{std::string(harness::kChronological), std::nullopt}
                                              : harness::SeedChoice{"0", 0};
        t.params = std::move(params);
        return t;
    };

    using data::Task;
    const harness::SeedLog seeds;
    std::ostringstream scores;
    const std::vector<harness::TrialSpec> regressors{
        trial("knn", Task::regression, {{"k", "10"}}),
        trial("linear", Task::regression, {}),
        trial("svm", Task::regression, {{"kernel", "rbf"}}),
        trial("dnn", Task::regression, {{"layers", "2"}}),
        trial("wnn", Task::regression, {}),
        trial("dwnn", Task::regression, {{"layers", "2"}}),
        trial("lstm", Task::regression, {{"sequence", "3"}}),
        trial("bilstm", Task::regression, {{"sequence", "3"}}),
        trial("gru", Task::regression, {{"sequence", "3"}}),
    };
    for (const auto& t : regressors) {
        const auto r = harness::run_trial(t, sources, base, seeds);
        scores << ' ' << t.model << "-R2=" << r.r2;
        out.check(r.r2_valid && r.r2 > 0.0, t.model + " regression R2 " + std::to_string(r.r2));
    }

    const auto prepared = harness::prepare_tabular(sources.datasets.at(data::RegionSet::mixed), Task::classification,
                                                   normalize::Kind::zscore, 0, false, base);
    double positives = 0.0;
    for (const double v : prepared.test_y) positives += v;
    const double majority =
        std::max(positives, static_cast<double>(prepared.test_y.size()) - positives) / static_cast<double>(prepared.test_y.size());
    const auto chrono = harness::prepare_sequences(sources.datasets.at(data::RegionSet::mixed), Task::classification,
                                                   normalize::Kind::zscore, 3, base);
    double seq_pos = 0.0;
    for (const double v : chrono.test.targets) seq_pos += v;
    const double seq_majority = std::max(seq_pos, static_cast<double>(chrono.test.size()) - seq_pos)
                                / static_cast<double>(chrono.test.size());

    // The reservoir is the only family without a regressor, so it is held to
    // the classification analogue of the mean predictor: the majority rate.
    const auto rcc = harness::run_trial(trial("rcc", Task::classification, {{"size", "200"}}), sources,
                                        reservoir_config, seeds);
    scores << " rcc-acc=" << rcc.accuracy;
    out.check(rcc.accuracy > majority, "rcc accuracy " + std::to_string(rcc.accuracy) + " <= majority "
                                           + std::to_string(majority));

    // Reported only: the other classifiers against the same majority rates.
    std::ostringstream info;
    const std::vector<harness::TrialSpec> classifiers{
        trial("knn", Task::classification, {{"k", "10"}}),
        trial("svm", Task::classification, {{"kernel", "rbf"}}),
        trial("dnn", Task::classification, {{"layers", "2"}}),
        trial("wnn", Task::classification, {}),
        trial("dwnn", Task::classification, {{"layers", "2"}}),
        trial("lstm", Task::classification, {{"sequence", "3"}}),
    };
    for (const auto& t : classifiers) {
        const auto r = harness::run_trial(t, sources, base, seeds);
        const double floor = harness::is_recurrent(t.model) ? seq_majority : majority;
        info << ' ' << t.model << "-acc=" << r.accuracy << (r.accuracy > floor ? "" : "(not above majority)");
    }

    Rng rng(5);
    const auto x = testing::random_matrix(rng, 300, 9, -2, 2);
    const auto w = testing::random_vector(rng, 9, -3, 3);
    std::vector<double> y(300);
    for (std::size_t i = 0; i < 300; ++i) {
        y[i] = 0.75;
        for (std::size_t j = 0; j < 9; ++j) y[i] += w[j] * x(i, j);
    }
    std::vector<std::size_t> train_rows(210);
    std::vector<std::size_t> test_rows(90);
    for (std::size_t i = 0; i < 300; ++i) (i < 210 ? train_rows[i] : test_rows[i - 210]) = i;
    Matrix xtr(0, 9);
    Matrix xte(0, 9);
    std::vector<double> ytr;
    std::vector<double> yte;
    for (const auto i : train_rows) { xtr.append_row(x.row(i)); ytr.push_back(y[i]); }
    for (const auto i : test_rows) { xte.append_row(x.row(i)); yte.push_back(y[i]); }
    const auto lin = linear::fit_linear_regression(xtr, ytr);
    const double lin_r2 = metrics::evaluate_regressor(yte, lin.predict(xte)).r2;
    out.check(lin_r2 >= 0.999, "noiseless linear R2 " + std::to_string(lin_r2));

    out.detail << (out.pass ? "" : "; ") << scores.str().substr(1) << " (majority " << majority << "), noiseless linear R2="
               << lin_r2 << " | informational: window majority " << seq_majority << ',' << info.str();
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"KNN oracle equivalence", knn_oracle},
        {"gradient correctness", gradients},
        {"convex solver correctness", convex_solver},
        {"reservoir properties", reservoir_properties},
        {"metric identities", metric_identities},
        {"pipeline fidelity", pipeline},
        {"protocol replication", grid_replication},
        {"sanity separation", sanity},
    };
    const char* skip = std::getenv("RAINBENCH_ACCEPTANCE_SKIP_GRID");
    const bool skip_grid = skip && std::string(skip) == "1";
    // The grid runs last so the quick criteria report first.
    const std::vector<std::size_t> order{0, 1, 2, 3, 4, 5, 7, 6};
    int failures = 0;
    for (const auto i : order) {
        const auto& [name, fn] = criteria[i];
        if (i == 6 && skip_grid) {
            std::cout << "SKIP " << i + 1 << ". " << name << " (RAINBENCH_ACCEPTANCE_SKIP_GRID=1)" << std::endl;
            continue;
        }
        Outcome outcome;
        try {
            fn(outcome);
        } catch (const std::exception& e) {
            outcome.check(false, std::string("exception: ") + e.what());
        }
        if (!outcome.pass) ++failures;
        std::cout << (outcome.pass ? "PASS " : "FAIL ") << i + 1 << ". " << name << ": " << outcome.detail.str()
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
