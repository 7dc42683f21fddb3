#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "rainbench/data.hpp"

namespace rainbench::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool parse_int(std::string_view s, int& out)
{
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

std::optional<double> parse_number(std::string_view field, bool& ok)
{
    ok = true;
    field = trim(field);
    if (field.empty() || field == "M") {
        return std::nullopt;
    }
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        ok = false;
        return std::nullopt;
    }
    return value;
}

} // namespace

Minutes parse_timestamp(std::string_view text)
{
    text = trim(text);
    // YYYY-MM-DD HH:MM
    int year = 0, month = 0, day = 0, hour = 0, minute = 0;
    const bool shape_ok = text.size() == 16 && text[4] == '-' && text[7] == '-' && (text[10] == ' ' || text[10] == 'T')
                          && text[13] == ':';
    if (!shape_ok || !parse_int(text.substr(0, 4), year) || !parse_int(text.substr(5, 2), month)
        || !parse_int(text.substr(8, 2), day) || !parse_int(text.substr(11, 2), hour)
        || !parse_int(text.substr(14, 2), minute)) {
        throw Error(ErrorKind::parse, "malformed timestamp '" + std::string(text) + "'");
    }
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || hour < 0 || minute < 0) {
        throw Error(ErrorKind::parse, "invalid calendar time '" + std::string(text) + "'");
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<Minutes>(days) * 1440 + hour * 60 + minute;
}

std::string format_timestamp(Minutes t)
{
    using namespace std::chrono;
    const auto day_count = static_cast<int>(t >= 0 ? t / 1440 : -((-t + 1439) / 1440));
    const Minutes in_day = t - static_cast<Minutes>(day_count) * 1440;
    const year_month_day ymd{sys_days{days{day_count}}};
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u %02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(in_day / 60),
                  static_cast<int>(in_day % 60));
    return buffer;
}

std::vector<WeatherRecord> parse_asos_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path + "'");
    }
    return parse_asos_csv(in, path);
}

std::vector<WeatherRecord> parse_asos_csv(std::istream& in, const std::string& source)
{
    std::string line;
    std::size_t line_no = 0;
    // Skip IEM-style '#' comment lines before the header.
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty() && line.front() != '#') {
            break;
        }
    }
    if (trim(line).empty()) {
        throw Error(ErrorKind::parse, source + ": missing header row");
    }

    const auto header = split_fields(line);
    auto column_of = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (trim(header[i]) == name) {
                return i;
            }
        }
        throw Error(ErrorKind::parse, source + ": header lacks column '" + std::string(name) + "'");
    };
    const std::size_t station_col = column_of("station");
    const std::size_t valid_col = column_of("valid");
    std::array<std::size_t, kFeaturesPerRegion> feature_cols{};
    for (std::size_t f = 0; f < kFeaturesPerRegion; ++f) {
        feature_cols[f] = column_of(kFeatureNames[f]);
    }

    std::vector<WeatherRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto where = source + ":" + std::to_string(line_no);
        const auto fields = split_fields(line);
        if (fields.size() < header.size()) {
            throw Error(ErrorKind::parse, where + ": expected " + std::to_string(header.size()) + " fields, found "
                                              + std::to_string(fields.size()));
        }
        WeatherRecord rec;
        rec.station = std::string(trim(fields[station_col]));
        try {
            rec.valid = parse_timestamp(fields[valid_col]);
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, where + ": " + e.what());
        }
        for (std::size_t f = 0; f < kFeaturesPerRegion; ++f) {
            bool ok = true;
            rec.values[f] = parse_number(fields[feature_cols[f]], ok);
            if (!ok) {
                throw Error(ErrorKind::parse, where + ": non-numeric " + std::string(kFeatureNames[f]) + " value '"
                                                  + std::string(trim(fields[feature_cols[f]])) + "'");
            }
        }
        if (const auto relh = rec.get(Feature::relh); relh && (*relh < 0.0 || *relh > 100.0)) {
            throw Error(ErrorKind::validation, where + ": relh " + std::to_string(*relh) + " outside [0,100]");
        }
        if (const auto p = rec.get(Feature::p01i); p && *p < 0.0) {
            throw Error(ErrorKind::validation, where + ": negative p01i " + std::to_string(*p));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_asos_csv(std::ostream& out, const std::vector<WeatherRecord>& records)
{
    out << "station,valid";
    for (const auto name : kFeatureNames) {
        out << ',' << name;
    }
    out << '\n';
    char buffer[64];
    for (const auto& rec : records) {
        out << rec.station << ',' << format_timestamp(rec.valid);
        for (const auto& v : rec.values) {
            out << ',';
            if (v) {
                std::snprintf(buffer, sizeof buffer, "%.2f", *v);
                out << buffer;
            } else {
                out << 'M';
            }
        }
        out << '\n';
    }
}

} // namespace rainbench::data
