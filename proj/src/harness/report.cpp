#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rainbench/error.hpp"
#include "rainbench/harness.hpp"

namespace rainbench::harness {

namespace {

constexpr std::string_view kHeader =
    "model,task,dataset,normalization,random,split_seed,seed_drawn,init_seed,params,accuracy,r2,r2_valid,mse,rmse,"
    "pcc,pcc_valid,flags,failed,message";
constexpr std::size_t kColumns = 19;

bool parse_double(std::string_view s, double& out)
{
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

// Numeric values compare as numbers so k=9 sorts before k=10.
int compare_value(const std::string& a, const std::string& b)
{
    double x = 0.0;
    double y = 0.0;
    if (parse_double(a, x) && parse_double(b, y)) {
        if (x < y) return -1;
        if (y < x) return 1;
        return 0;
    }
    return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (const char ch : s) {
        if (ch == '"') out += '"';
        out += (ch == '\n' || ch == '\r') ? ' ' : ch;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no)
{
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    if (quoted) {
        throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": unterminated quote");
    }
    return fields;
}

std::string params_text(const std::map<std::string, std::string>& params)
{
    std::string out;
    for (const auto& [k, v] : params) {
        if (!out.empty()) out += ';';
        out += k + "=" + v;
    }
    return out;
}

std::map<std::string, std::string> parse_params(const std::string& text, std::size_t line_no)
{
    std::map<std::string, std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        const auto end = std::min(text.find(';', start), text.size());
        const auto item = text.substr(start, end - start);
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": malformed parameter '" + item + "'");
        }
        out[item.substr(0, eq)] = item.substr(eq + 1);
        start = end + 1;
    }
    return out;
}

double number_field(const std::string& s, const char* column, std::size_t line_no)
{
    double v = 0.0;
    // from_chars rejects the "nan"/"inf" spellings printf may produce.
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!parse_double(s, v)) {
        throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": column " + column + " is not a number: '"
                                          + s + "'");
    }
    return v;
}

bool bool_field(const std::string& s, const char* column, std::size_t line_no)
{
    if (s == "1") return true;
    if (s == "0") return false;
    throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": column " + column + " must be 0 or 1");
}

std::uint64_t u64_field(const std::string& s, const char* column, std::size_t line_no)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": column " + column
                                          + " is not an unsigned integer");
    }
    return v;
}

std::string display_model(const std::string& model, data::Task task)
{
    const bool cls = task == data::Task::classification;
    if (model == "knn") return cls ? "KNN classifier" : "KNN regressor";
    if (model == "linear") return "Linear regressor";
    if (model == "wnn") return cls ? "WNN classifier" : "WNN regressor";
    if (model == "dnn") return cls ? "DNN classifier" : "DNN regressor";
    if (model == "dwnn") return cls ? "DWNN classifier" : "DWNN regressor";
    if (model == "rcc") return "RCC classifier";
    if (model == "svm") return cls ? "SVM classifier" : "SVM regressor";
    if (model == "lstm") return cls ? "LSTM classifier" : "LSTM regressor";
    if (model == "bilstm") return "LSTM bi-direction regressor";
    if (model == "gru") return "GRU regressor";
    return model;
}

std::string display_norm(const std::string& n)
{
    if (n == "minmax") return "MinMax";
    if (n == "zscore") return "ZScore";
    return "None";
}

std::string display_dataset(const std::string& d) { return d == "mixed" ? "Mixed" : "Single"; }

std::string fixed(double v, int digits = 9)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Higher is better; failed rows and invalid R2 go to the bottom.
bool ranks_before(const metrics::EvalReport& a, const metrics::EvalReport& b)
{
    const auto tier = [](const metrics::EvalReport& r) {
        if (r.provenance.failed) return 2;
        if (r.task == data::Task::regression && !r.r2_valid) return 1;
        return 0;
    };
    if (tier(a) != tier(b)) return tier(a) < tier(b);
    if (tier(a) != 0) return false;
    const double x = a.task == data::Task::classification ? a.accuracy : a.r2;
    const double y = b.task == data::Task::classification ? b.accuracy : b.r2;
    return x > y;
}

} // namespace

bool provenance_less(const metrics::Provenance& a, const metrics::Provenance& b)
{
    for (const auto& [x, y] : {std::pair{&a.model, &b.model}, std::pair{&a.dataset, &b.dataset},
                               std::pair{&a.normalization, &b.normalization}, std::pair{&a.random, &b.random}}) {
        if (*x != *y) return *x < *y;
    }
    auto i = a.params.begin();
    auto j = b.params.begin();
    for (; i != a.params.end() && j != b.params.end(); ++i, ++j) {
        if (i->first != j->first) return i->first < j->first;
        if (const int c = compare_value(i->second, j->second); c != 0) return c < 0;
    }
    if ((i == a.params.end()) != (j == b.params.end())) return i == a.params.end();
    return a.split_seed < b.split_seed;
}

void sort_reports(std::vector<metrics::EvalReport>& reports)
{
    std::stable_sort(reports.begin(), reports.end(), [](const metrics::EvalReport& a, const metrics::EvalReport& b) {
        if (a.task != b.task) return a.task < b.task;
        return provenance_less(a.provenance, b.provenance);
    });
}

void write_csv(std::ostream& out, const std::vector<metrics::EvalReport>& reports)
{
    out << kHeader << '\n';
    for (const auto& r : reports) {
        const auto& p = r.provenance;
        out << csv_field(p.model) << ',' << data::to_string(r.task) << ',' << csv_field(p.dataset) << ','
            << csv_field(p.normalization) << ',' << csv_field(p.random) << ','
            << (p.split_seed ? std::to_string(*p.split_seed) : std::string()) << ',' << (p.seed_drawn ? 1 : 0) << ','
            << p.init_seed << ',' << csv_field(params_text(p.params)) << ',' << format_double(r.accuracy) << ','
            << format_double(r.r2) << ',' << (r.r2_valid ? 1 : 0) << ',' << format_double(r.mse) << ','
            << format_double(r.rmse) << ',' << format_double(r.pcc) << ',' << (r.pcc_valid ? 1 : 0) << ','
            << csv_field(p.flags) << ',' << (p.failed ? 1 : 0) << ',' << csv_field(p.message) << '\n';
    }
}

std::vector<metrics::EvalReport> read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kHeader) {
        throw Error(ErrorKind::parse, "report file does not start with the expected header");
    }
    std::vector<metrics::EvalReport> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line, line_no);
        if (f.size() != kColumns) {
            throw Error(ErrorKind::parse, "report line " + std::to_string(line_no) + ": expected "
                                              + std::to_string(kColumns) + " fields, found " + std::to_string(f.size()));
        }
        metrics::EvalReport r;
        auto& p = r.provenance;
        p.model = f[0];
        r.task = data::parse_task(f[1]);
        p.dataset = f[2];
        p.normalization = f[3];
        p.random = f[4];
        if (!f[5].empty()) p.split_seed = u64_field(f[5], "split_seed", line_no);
        p.seed_drawn = bool_field(f[6], "seed_drawn", line_no);
        p.init_seed = u64_field(f[7], "init_seed", line_no);
        p.params = parse_params(f[8], line_no);
        r.accuracy = number_field(f[9], "accuracy", line_no);
        r.r2 = number_field(f[10], "r2", line_no);
        r.r2_valid = bool_field(f[11], "r2_valid", line_no);
        r.mse = number_field(f[12], "mse", line_no);
        r.rmse = number_field(f[13], "rmse", line_no);
        r.pcc = number_field(f[14], "pcc", line_no);
        r.pcc_valid = bool_field(f[15], "pcc_valid", line_no);
        p.flags = f[16];
        p.failed = bool_field(f[17], "failed", line_no);
        p.message = f[18];
        out.push_back(std::move(r));
    }
    return out;
}

std::string markdown_tables(const std::vector<metrics::EvalReport>& input)
{
    auto reports = input;
    sort_reports(reports);

    std::vector<std::pair<data::Task, std::string>> groups;
    for (const auto& r : reports) {
        const std::pair key{r.task, r.provenance.model};
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }

    std::ostringstream md;
    bool first_table = true;
    for (const auto& [task, model] : groups) {
        const bool cls = task == data::Task::classification;
        if (!first_table) md << '\n';
        first_table = false;
        md << "### " << display_model(model, task) << "\n\n";
        md << (cls ? "| Dataset | Normalization | Random | Parameter | Accuracy |\n|---|---|---|---|---|\n"
                   : "| Dataset | Normalization | Random | Parameter | R² | MSE | RMSE | Pcc |\n"
                     "|---|---|---|---|---|---|---|---|\n");
        for (const char* dataset : {"mixed", "single"}) {
            std::vector<const metrics::EvalReport*> rows;
            for (const auto& r : reports) {
                if (r.task == task && r.provenance.model == model && r.provenance.dataset == dataset) rows.push_back(&r);
            }
            std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) { return ranks_before(*a, *b); });
            for (std::size_t i = 0; i < rows.size() && i < 2; ++i) {
                const auto& r = *rows[i];
                const auto& p = r.provenance;
                std::string param;
                for (const auto& [k, v] : p.params) param += (param.empty() ? "" : " ") + v;
                if (param.empty()) param = "-";
                md << "| " << display_dataset(p.dataset) << " | " << display_norm(p.normalization) << " | " << p.random
                   << " | " << param << " | ";
                if (p.failed) {
                    md << (cls ? "failed |\n" : "failed | failed | failed | failed |\n");
                } else if (cls) {
                    md << fixed(r.accuracy * 100.0, 2) << "% |\n";
                } else {
                    md << (r.r2_valid ? fixed(r.r2) : "invalid") << " | " << fixed(r.mse) << " | " << fixed(r.rmse)
                       << " | " << (r.pcc_valid ? fixed(r.pcc) : "invalid") << " |\n";
                }
            }
        }
    }
    return md.str();
}

ReportFormat parse_report_format(std::string_view text)
{
    if (text == "csv") return ReportFormat::csv;
    if (text == "markdown" || text == "md") return ReportFormat::markdown;
    throw Error(ErrorKind::validation, "report format must be csv or markdown, got '" + std::string(text) + "'");
}

std::string emit_report(const std::vector<metrics::EvalReport>& reports, ReportFormat format, const std::string& dir)
{
    require(!reports.empty(), ErrorKind::validation, "there are no reports to emit");
    std::filesystem::create_directories(dir);
    const auto path = (std::filesystem::path(dir) / (format == ReportFormat::csv ? "reports.csv" : "best2.md")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write '" + path + "'");
    }
    if (format == ReportFormat::csv) {
        auto sorted = reports;
        sort_reports(sorted);
        write_csv(out, sorted);
    } else {
        out << markdown_tables(reports);
    }
    if (!out) {
        throw Error(ErrorKind::io, "write to '" + path + "' failed");
    }
    return path;
}

void write_feature_pairs(std::ostream& out, const data::HourlyDataset& ds)
{
    const std::size_t d = ds.dims();
    std::vector<std::vector<double>> columns(d, std::vector<double>(ds.size()));
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) columns[c][r] = ds.features(r, c);
    }
    const auto name = [&](std::size_t c) {
        return c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c);
    };
    out << "feature_x,feature_y,pearson\n";
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
            bool valid = false;
            const double r = metrics::pearson(columns[a], columns[b], &valid);
            out << csv_field(name(a)) << ',' << csv_field(name(b)) << ',' << (valid ? format_double(r) : "invalid") << '\n';
        }
    }
}

} // namespace rainbench::harness
