#include "rainbench/normalize.hpp"

#include <algorithm>
#include <cmath>

namespace rainbench::normalize {

std::string_view to_string(Kind k)
{
    switch (k) {
    case Kind::minmax: return "minmax";
    case Kind::zscore: return "zscore";
    case Kind::none: break;
    }
    return "none";
}

std::string_view to_string(Scope s) { return s == Scope::global ? "global" : "train"; }

Kind parse_kind(std::string_view text)
{
    if (text == "none") return Kind::none;
    if (text == "minmax") return Kind::minmax;
    if (text == "zscore") return Kind::zscore;
    throw Error(ErrorKind::validation, "unknown normalization '" + std::string(text) + "'");
}

Scope parse_scope(std::string_view text)
{
    if (text == "train" || text == "train-only" || text == "train_only") return Scope::train_only;
    if (text == "global") return Scope::global;
    throw Error(ErrorKind::validation, "unknown normalization scope '" + std::string(text) + "'");
}

Normalizer fit(const Matrix& x, Kind kind, Scope scope)
{
    Normalizer n{kind, scope, {}, {}};
    if (kind == Kind::none) {
        return n;
    }
    require(x.rows() > 0, ErrorKind::insufficient_data, "cannot fit a normalizer on zero rows");
    const std::size_t d = x.cols();
    const auto rows = static_cast<double>(x.rows());
    n.lower.assign(d, 0.0);
    n.upper.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        if (kind == Kind::minmax) {
            double lo = x(0, c);
            double hi = x(0, c);
            for (std::size_t r = 1; r < x.rows(); ++r) {
                lo = std::min(lo, x(r, c));
                hi = std::max(hi, x(r, c));
            }
            n.lower[c] = lo;
            n.upper[c] = hi;
        } else {
            double mean = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                mean += x(r, c);
            }
            mean /= rows;
            double ss = 0.0;
            for (std::size_t r = 0; r < x.rows(); ++r) {
                const double dev = x(r, c) - mean;
                ss += dev * dev;
            }
            n.lower[c] = mean;
            n.upper[c] = std::sqrt(ss / rows);
        }
    }
    return n;
}

Normalizer fit(const data::HourlyDataset& ds, Kind kind, Scope scope) { return fit(ds.features, kind, scope); }

Matrix apply(const Normalizer& n, const Matrix& x)
{
    if (n.kind == Kind::none) {
        return x;
    }
    require(x.cols() == n.dims(), ErrorKind::dimension_mismatch,
            "normalizer has " + std::to_string(n.dims()) + " features, data has " + std::to_string(x.cols()));
    Matrix out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double shift = n.lower[c];
        const double scale = n.kind == Kind::minmax ? n.upper[c] - n.lower[c] : n.upper[c];
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out(r, c) = scale > 0.0 ? (x(r, c) - shift) / scale : 0.0;
        }
    }
    return out;
}

data::HourlyDataset apply(const Normalizer& n, const data::HourlyDataset& ds)
{
    data::HourlyDataset out = ds;
    out.features = apply(n, ds.features);
    out.normalization = std::string(to_string(n.kind));
    return out;
}

Matrix inverse(const Normalizer& n, const Matrix& x)
{
    if (n.kind == Kind::none) {
        return x;
    }
    require(x.cols() == n.dims(), ErrorKind::dimension_mismatch, "normalizer width mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        const double scale = n.kind == Kind::minmax ? n.upper[c] - n.lower[c] : n.upper[c];
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out(r, c) = x(r, c) * scale + n.lower[c];
        }
    }
    return out;
}

nlohmann::json to_json(const Normalizer& n)
{
    return {
        {"kind", std::string(to_string(n.kind))},
        {"scope", std::string(to_string(n.scope))},
        {"lower", n.lower},
        {"upper", n.upper},
    };
}

Normalizer normalizer_from_json(const nlohmann::json& j)
{
    Normalizer n;
    n.kind = parse_kind(j.at("kind").get<std::string>());
    n.scope = parse_scope(j.value("scope", std::string("train")));
    n.lower = j.value("lower", std::vector<double>{});
    n.upper = j.value("upper", std::vector<double>{});
    require(n.lower.size() == n.upper.size(), ErrorKind::parse, "normalizer statistics have unequal lengths");
    return n;
}

} // namespace rainbench::normalize
