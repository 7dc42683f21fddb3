#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rainbench/error.hpp"
#include "rainbench/harness.hpp"

namespace rainbench::harness {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) {
            out.push_back(piece);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& section, const std::string& key, const std::string& text)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorKind::config, "[" + section + "] " + key + ": '" + text + "' is not a valid number");
    }
    return value;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& text)
{
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    throw Error(ErrorKind::config, "[" + section + "] " + key + ": expected true or false, got '" + text + "'");
}

// Walks one section, rejecting keys nobody claimed.
class Section {
public:
    Section(const pt::ptree& tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key)
    {
        seen_.insert(key);
        const auto child = tree_.get_optional<std::string>(key);
        if (!child) {
            return std::nullopt;
        }
        return trim(*child);
    }

    template <typename T>
    void number(const std::string& key, T& target)
    {
        if (const auto v = raw(key)) {
            target = parse_number<T>(name_, key, *v);
        }
    }

    void flag(const std::string& key, bool& target)
    {
        if (const auto v = raw(key)) {
            target = parse_bool(name_, key, *v);
        }
    }

    void sizes(const std::string& key, std::vector<std::size_t>& target)
    {
        if (const auto v = raw(key)) {
            target.clear();
            for (const auto& item : split_list(*v)) {
                target.push_back(parse_number<std::size_t>(name_, key, item));
            }
            require(!target.empty(), ErrorKind::config, "[" + name_ + "] " + key + " must list at least one value");
        }
    }

    template <typename Fn>
    void list(const std::string& key, Fn&& each)
    {
        if (const auto v = raw(key)) {
            const auto items = split_list(*v);
            require(!items.empty(), ErrorKind::config, "[" + name_ + "] " + key + " must list at least one value");
            for (const auto& item : items) {
                each(item);
            }
        }
    }

    void finish() const
    {
        for (const auto& [key, value] : tree_) {
            if (!seen_.count(key)) {
                throw Error(ErrorKind::config, "unknown key '" + key + "' in [" + name_ + "]");
            }
        }
    }

    const std::string& name() const { return name_; }

private:
    const pt::ptree& tree_;
    std::string name_;
    std::set<std::string> seen_;
};

// Library parse errors come back as validation errors; in a config file they
// are config errors and name the key.
template <typename Fn>
auto config_value(const std::string& section, const std::string& key, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(ErrorKind::config, "[" + section + "] " + key + ": " + e.what());
    }
}

const std::set<std::string> kClassifiers{"knn", "rcc", "svm", "dnn", "wnn", "dwnn", "lstm"};
const std::set<std::string> kRegressors{"knn", "linear", "svm", "dnn", "wnn", "dwnn", "lstm", "bilstm", "gru"};

data::RegionSet parse_region_set(std::string_view text)
{
    if (text == "single") return data::RegionSet::single;
    if (text == "mixed") return data::RegionSet::mixed;
    throw Error(ErrorKind::validation, "unknown dataset form '" + std::string(text) + "'");
}

void read_grid(Section s, GridConfig& c)
{
    s.number("seed", c.grid_seed);
    if (const auto v = s.raw("none_seed"); v && !v->empty()) {
        c.none_seed = parse_number<std::uint64_t>(s.name(), "none_seed", *v);
    }
    if (s.raw("datasets")) {
        c.datasets.clear();
        s.list("datasets", [&](const std::string& v) {
            c.datasets.push_back(config_value(s.name(), "datasets", [&] { return parse_region_set(v); }));
        });
    }
    if (s.raw("normalizations")) {
        c.normalizations.clear();
        s.list("normalizations", [&](const std::string& v) {
            c.normalizations.push_back(config_value(s.name(), "normalizations", [&] { return normalize::parse_kind(v); }));
        });
    }
    if (s.raw("seeds")) {
        c.seeds.clear();
        s.list("seeds", [&](const std::string& v) {
            c.seeds.push_back(config_value(s.name(), "seeds", [&] { return parse_seed_choice(v); }));
        });
    }
    const auto models = [&](const std::string& key, std::vector<std::string>& target, const std::set<std::string>& allowed) {
        if (const auto v = s.raw(key)) {
            target.clear();
            for (const auto& m : split_list(*v)) {
                require(allowed.count(m) > 0, ErrorKind::config, "[grid] " + key + ": unknown model '" + m + "'");
                target.push_back(m);
            }
        }
    };
    models("classifiers", c.classifiers, kClassifiers);
    models("regressors", c.regressors, kRegressors);
    s.number("threshold", c.threshold);
    s.number("train_fraction", c.train_fraction);
    if (const auto v = s.raw("scope")) {
        c.scope = config_value(s.name(), "scope", [&] { return normalize::parse_scope(*v); });
    }
    s.number("regressor_init_seed", c.regressor_init_seed);
    s.number("jobs", c.jobs);
    s.finish();
    require(c.train_fraction > 0.0 && c.train_fraction < 1.0, ErrorKind::config, "[grid] train_fraction must lie in (0, 1)");
    require(c.jobs >= 1, ErrorKind::config, "[grid] jobs must be at least 1");
}

void read_data(Section s, DataSettings& d)
{
    if (const auto v = s.raw("primary")) d.primary = *v;
    if (const auto v = s.raw("secondary")) d.secondary = split_list(*v);
    data::SynthOptions synth;
    bool any = false;
    if (const auto v = s.raw("synthetic")) any = parse_bool(s.name(), "synthetic", *v);
    s.number("synthetic_hours", synth.hours);
    s.number("synthetic_seed", synth.seed);
    s.number("synthetic_regions", synth.regions);
    s.number("synthetic_missing_frac", synth.missing_frac);
    s.number("synthetic_persistence", synth.persistence);
    s.finish();
    if (any) {
        d.synthetic = synth;
    }
}

} // namespace

SeedChoice parse_seed_choice(std::string_view text)
{
    const auto t = trim(text);
    if (t == "none" || t == "None") {
        return {"none", std::nullopt};
    }
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorKind::validation, "seed must be 'none' or a non-negative integer, got '" + t + "'");
    }
    return {t, v};
}

GridConfig::GridConfig()
{
    seeds = {{"none", std::nullopt}, {"0", 0}, {"42", 42}};
    for (const auto* k : {"linear", "poly", "rbf", "sigmoid"}) {
        svm.kernels.push_back(svm::parse_kernel(k));
    }
}

GridConfig parse_config(std::istream& in)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::config, std::string("malformed config: ") + e.message() + " at line "
                                           + std::to_string(e.line()));
    }
    GridConfig c;
    static const pt::ptree empty;
    const auto section = [&](const std::string& name) -> const pt::ptree& {
        const auto child = tree.get_child_optional(name);
        return child ? *child : empty;
    };
    for (const auto& [name, sub] : tree) {
        static const std::set<std::string> known{"grid", "data", "knn", "wnn", "dnn", "dwnn", "rcc", "svm", "recurrent"};
        if (!known.count(name)) {
            throw Error(ErrorKind::config, "unknown section [" + name + "]");
        }
        if (sub.empty() && !sub.data().empty()) {
            throw Error(ErrorKind::config, "key '" + name + "' appears outside any section");
        }
    }

    read_grid(Section(section("grid"), "grid"), c);
    read_data(Section(section("data"), "data"), c.data);

    {
        Section s(section("knn"), "knn");
        s.number("k_max_classify", c.knn.k_max_classify);
        s.number("k_max_regress", c.knn.k_max_regress);
        if (const auto v = s.raw("metric")) c.knn.metric = config_value("knn", "metric", [&] { return knn::parse_metric(*v); });
        s.finish();
        require(c.knn.k_max_classify >= 1 && c.knn.k_max_regress >= 1, ErrorKind::config, "[knn] k ranges must be >= 1");
    }
    {
        Section s(section("wnn"), "wnn");
        auto& o = c.wnn.options;
        s.number("epochs", o.epochs);
        s.number("lr", o.lr);
        s.number("batch_size", o.batch_size);
        if (const auto v = s.raw("crosses")) o.crosses = config_value("wnn", "crosses", [&] { return linear::parse_cross_set(*v); });
        s.finish();
    }
    {
        Section s(section("dnn"), "dnn");
        s.sizes("layers_classify", c.dnn.layers_classify);
        s.sizes("layers_regress", c.dnn.layers_regress);
        s.number("epochs", c.dnn.train.epochs);
        s.number("lr", c.dnn.train.lr);
        s.number("early_stop", c.dnn.train.early_stop);
        s.finish();
    }
    {
        Section s(section("dwnn"), "dwnn");
        s.sizes("layers_classify", c.dwnn.layers_classify);
        s.sizes("layers_regress", c.dwnn.layers_regress);
        s.number("epochs", c.dwnn.options.train.epochs);
        s.number("lr", c.dwnn.options.train.lr);
        s.number("early_stop", c.dwnn.options.train.early_stop);
        if (const auto v = s.raw("crosses")) {
            c.dwnn.options.crosses = config_value("dwnn", "crosses", [&] { return linear::parse_cross_set(*v); });
        }
        s.finish();
    }
    {
        Section s(section("rcc"), "rcc");
        auto& o = c.rcc.options;
        s.sizes("sizes", c.rcc.sizes);
        s.number("input_scale", o.input_scale);
        s.number("spectral_radius", o.spectral_radius);
        s.number("p_conn", o.p_conn);
        s.number("washout", o.washout);
        s.number("ridge", o.ridge);
        if (const auto v = s.raw("mode")) o.mode = config_value("rcc", "mode", [&] { return reservoir::parse_state_mode(*v); });
        s.finish();
    }
    {
        Section s(section("svm"), "svm");
        if (s.raw("kernels")) {
            c.svm.kernels.clear();
            s.list("kernels", [&](const std::string& v) {
                c.svm.kernels.push_back(config_value("svm", "kernels", [&] { return svm::parse_kernel(v); }));
            });
        }
        s.number("c", c.svm.solver.c);
        s.number("tol", c.svm.solver.tol);
        s.number("max_passes", c.svm.solver.max_passes);
        s.number("epsilon", c.svm.epsilon);
        s.finish();
    }
    {
        Section s(section("recurrent"), "recurrent");
        auto& o = c.recurrent.options;
        s.sizes("lengths_classify", c.recurrent.lengths_classify);
        s.sizes("lengths_regress", c.recurrent.lengths_regress);
        s.number("hidden", o.hidden);
        s.number("epochs", o.epochs);
        s.number("lr", o.lr);
        s.number("batch_size", o.batch_size);
        s.flag("biases", o.biases);
        s.finish();
    }
    require(!c.datasets.empty() && !c.normalizations.empty() && !c.seeds.empty(), ErrorKind::config,
            "[grid] datasets, normalizations and seeds must be non-empty");
    return c;
}

GridConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open config file '" + path + "'");
    }
    return parse_config(in);
}

} // namespace rainbench::harness
