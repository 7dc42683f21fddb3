#include <cstdio>
#include <fstream>
#include <sstream>

#include "rainbench/data.hpp"

namespace rainbench::data {

namespace {

std::string format_cell(double v)
{
    if (is_missing(v)) {
        return "M";
    }
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

} // namespace

void write_dataset(const std::string& path, const HourlyDataset& ds, const nlohmann::json& extra)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    out << "valid";
    for (const auto& name : ds.feature_names) {
        out << ',' << name;
    }
    if (ds.labeled()) {
        out << ",target";
    }
    out << '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
        out << format_timestamp(ds.origin + ds.hours[r] * 60);
        for (const double v : ds.features.row(r)) {
            out << ',' << format_cell(v);
        }
        if (ds.labeled()) {
            out << ',' << format_cell(ds.target[r]);
        }
        out << '\n';
    }

    nlohmann::json meta = {
        {"origin", format_timestamp(ds.origin)},
        {"region_set", std::string(to_string(ds.region_set))},
        {"regions", ds.regions},
        {"task", std::string(to_string(ds.task))},
        {"threshold", ds.threshold},
        {"normalization", ds.normalization},
        {"split_seed", ds.split_seed ? nlohmann::json(*ds.split_seed) : nlohmann::json(nullptr)},
        {"split_seed_drawn", ds.split_seed_drawn},
    };
    if (!extra.is_null()) {
        meta["extra"] = extra;
    }
    std::ofstream side(path + ".meta.json");
    if (!side) {
        throw Error(ErrorKind::io, "cannot write '" + path + ".meta.json'");
    }
    side << meta.dump(2) << '\n';
}

HourlyDataset read_dataset(const std::string& path, nlohmann::json* extra)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    HourlyDataset ds;
    nlohmann::json meta;
    if (std::ifstream side(path + ".meta.json"); side) {
        try {
            side >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, path + ".meta.json: " + e.what());
        }
    }

    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::parse, path + ": missing header row");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = split_line(line);
    require(!header.empty() && header.front() == "valid", ErrorKind::parse, path + ": first column must be 'valid'");
    const bool labeled = header.back() == "target";
    ds.feature_names.assign(header.begin() + 1, header.end() - (labeled ? 1 : 0));
    const std::size_t d = ds.feature_names.size();
    ds.features = Matrix(0, d);

    std::vector<Minutes> stamps;
    std::vector<double> values(d);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto fields = split_line(line);
        const auto where = path + ":" + std::to_string(line_no);
        require(fields.size() == header.size(), ErrorKind::parse, where + ": wrong field count");
        try {
            stamps.push_back(parse_timestamp(fields[0]));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, where + ": " + e.what());
        }
        auto parse_cell = [&](const std::string& text) {
            if (text.empty() || text == "M") {
                return missing_value();
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(text, &used);
                require(used == text.size(), ErrorKind::parse, where + ": bad number '" + text + "'");
                return v;
            } catch (const std::logic_error&) {
                throw Error(ErrorKind::parse, where + ": bad number '" + text + "'");
            }
        };
        for (std::size_t c = 0; c < d; ++c) {
            values[c] = parse_cell(fields[c + 1]);
        }
        ds.features.append_row(values);
        if (labeled) {
            ds.target.push_back(parse_cell(fields.back()));
        }
    }

    ds.origin = meta.contains("origin") ? parse_timestamp(meta["origin"].get<std::string>())
                                        : (stamps.empty() ? 0 : stamps.front() - stamps.front() % 60);
    for (const auto t : stamps) {
        ds.hours.push_back((t - ds.origin) / 60);
    }
    ds.region_set = meta.value("region_set", std::string("single")) == "mixed" ? RegionSet::mixed : RegionSet::single;
    ds.regions = meta.value("regions", std::vector<std::string>{});
    ds.task = labeled ? parse_task(meta.value("task", std::string("classification"))) : Task::none;
    ds.threshold = meta.value("threshold", kDefaultThreshold);
    ds.normalization = meta.value("normalization", std::string("none"));
    if (meta.contains("split_seed") && !meta["split_seed"].is_null()) {
        ds.split_seed = meta["split_seed"].get<std::uint64_t>();
    }
    ds.split_seed_drawn = meta.value("split_seed_drawn", false);
    if (extra != nullptr) {
        *extra = meta.value("extra", nlohmann::json{});
    }
    return ds;
}

} // namespace rainbench::data
