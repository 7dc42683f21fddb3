#include "rainbench/linear.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rainbench/error.hpp"
#include "rainbench/simd/kernels.hpp"

namespace rainbench::linear {

CrossSet parse_cross_set(std::string_view text)
{
    if (text == "none") return CrossSet::none;
    if (text == "primary" || text == "primary_pairs" || text == "primary-pairs") return CrossSet::primary_pairs;
    if (text == "all" || text == "all_pairs" || text == "all-pairs") return CrossSet::all_pairs;
    throw Error(ErrorKind::validation, "unknown cross set '" + std::string(text) + "'");
}

std::string_view to_string(CrossSet c)
{
    switch (c) {
    case CrossSet::primary_pairs: return "primary-pairs";
    case CrossSet::all_pairs: return "all-pairs";
    case CrossSet::none: break;
    }
    return "none";
}

std::vector<Cross> make_crosses(std::size_t dims, CrossSet set)
{
    const std::size_t limit = set == CrossSet::all_pairs ? dims : (set == CrossSet::primary_pairs ? std::min<std::size_t>(dims, 9) : 0);
    std::vector<Cross> crosses;
    for (std::size_t i = 0; i < limit; ++i) {
        for (std::size_t j = i + 1; j < limit; ++j) {
            crosses.emplace_back(i, j);
        }
    }
    return crosses;
}

std::vector<double> cross_transform(std::span<const double> x, std::span<const Cross> crosses,
                                    std::span<const double> thresholds)
{
    std::vector<double> out(crosses.size());
    for (std::size_t k = 0; k < crosses.size(); ++k) {
        const auto [i, j] = crosses[k];
        require(i < x.size() && j < x.size() && i < thresholds.size() && j < thresholds.size(),
                ErrorKind::dimension_mismatch, "cross index outside the feature vector");
        const double bi = x[i] > thresholds[i] ? 1.0 : 0.0;
        const double bj = x[j] > thresholds[j] ? 1.0 : 0.0;
        out[k] = bi * bj;
    }
    return out;
}

std::vector<double> column_medians(const Matrix& x)
{
    std::vector<double> medians(x.cols(), 0.0);
    std::vector<double> column(x.rows());
    for (std::size_t c = 0; c < x.cols(); ++c) {
        if (x.rows() == 0) {
            continue;
        }
        for (std::size_t r = 0; r < x.rows(); ++r) {
            column[r] = x(r, c);
        }
        std::sort(column.begin(), column.end());
        const std::size_t mid = column.size() / 2;
        medians[c] = column.size() % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
    }
    return medians;
}

double sigmoid(double z)
{
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<double> WideModel::expand(std::span<const double> x) const
{
    std::vector<double> out(x.begin(), x.end());
    if (!crosses.empty()) {
        const auto crossed = cross_transform(x, crosses, thresholds);
        out.insert(out.end(), crossed.begin(), crossed.end());
    }
    return out;
}

double WideModel::logit(std::span<const double> x) const
{
    require(x.size() == input_dims, ErrorKind::dimension_mismatch, "wide model input width mismatch");
    if (crosses.empty()) {
        return simd::dot(w, x) + b;
    }
    const auto expanded = expand(x);
    return simd::dot(w, expanded) + b;
}

double WideModel::predict(std::span<const double> x) const
{
    const double z = logit(x);
    if (head == Head::logistic) {
        return z >= 0.0 ? 1.0 : 0.0;
    }
    return z;
}

std::vector<double> WideModel::predict(const Matrix& x) const
{
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict(x.row(r));
    }
    return out;
}

WideModel fit_linear_regression(const Matrix& x, std::span<const double> y)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "linear regression features and targets differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "linear regression needs at least one row");
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();

    Eigen::VectorXd mean_x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    double mean_y = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            mean_x[static_cast<Eigen::Index>(c)] += x(r, c);
        }
        mean_y += y[r];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    Eigen::MatrixXd centred(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    Eigen::VectorXd target(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            centred(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c) - mean_x[static_cast<Eigen::Index>(c)];
        }
        target[static_cast<Eigen::Index>(r)] = y[r] - mean_y;
    }
    Eigen::MatrixXd gram = centred.transpose() * centred;
    const Eigen::VectorXd rhs = centred.transpose() * target;

    WideModel model;
    model.head = Head::affine;
    model.input_dims = d;
    Eigen::VectorXd w;
    if (d > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        // Pivot ratio of the LDLT diagonal; rcond() reports NaN on an exactly zero pivot.
        const Eigen::VectorXd pivots = ldlt.vectorD();
        const bool singular = ldlt.info() != Eigen::Success || n <= d || !(pivots.minCoeff() > 1e-13 * pivots.maxCoeff());
        if (singular) {
            model.ridge_fallback = true;
            gram.diagonal().array() += 1e-8;
            ldlt.compute(gram);
        }
        w = ldlt.solve(rhs);
    }
    model.w.assign(w.data(), w.data() + w.size());
    model.b = mean_y - (d > 0 ? w.dot(mean_x) : 0.0);
    model.loss_trace.push_back(wide_loss(model, x, y));
    return model;
}

namespace {

WideModel fit_wide(const Matrix& x, std::span<const double> y, const WideOptions& options, Head head)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "wide model features and targets differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "wide model needs at least one row");
    if (head == Head::logistic) {
        for (const double label : y) {
            require(label == 0.0 || label == 1.0, ErrorKind::validation, "wide classifier needs 0/1 labels");
        }
    }

    WideModel model;
    model.head = head;
    model.input_dims = x.cols();
    model.crosses = make_crosses(x.cols(), options.crosses);
    if (!model.crosses.empty()) {
        model.thresholds = column_medians(x);
    }
    const std::size_t width = x.cols() + model.crosses.size();
    model.w.assign(width, 0.0);

    // Pre-expand once; crosses do not change during training.
    Matrix expanded(x.rows(), width);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto e = model.expand(x.row(r));
        std::copy(e.begin(), e.end(), expanded.row(r).begin());
    }

    const std::size_t n = x.rows();
    const std::size_t batch = options.batch_size == 0 ? n : std::min(options.batch_size, n);
    std::vector<double> grad(width);
    auto full_loss = [&] {
        double loss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double z = simd::dot(model.w, expanded.row(r)) + model.b;
            if (head == Head::logistic) {
                // log(1 + e^z) - y z, stable form
                loss += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y[r] * z;
            } else {
                loss += 0.5 * (z - y[r]) * (z - y[r]);
            }
        }
        return loss / static_cast<double>(n);
    };

    model.loss_trace.push_back(full_loss());
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t r = start; r < stop; ++r) {
                const double z = simd::dot(model.w, expanded.row(r)) + model.b;
                const double residual = (head == Head::logistic ? sigmoid(z) : z) - y[r];
                simd::axpy(residual, expanded.row(r), grad);
                grad_b += residual;
            }
            const double scale = options.lr / static_cast<double>(stop - start);
            simd::axpy(-scale, grad, model.w);
            model.b -= scale * grad_b;
        }
        model.loss_trace.push_back(full_loss());
    }
    return model;
}

} // namespace

WideModel fit_wide_classifier(const Matrix& x, std::span<const double> y, const WideOptions& options)
{
    return fit_wide(x, y, options, Head::logistic);
}

WideModel fit_wide_regressor(const Matrix& x, std::span<const double> y, const WideOptions& options)
{
    return fit_wide(x, y, options, Head::affine);
}

double wide_loss(const WideModel& m, const Matrix& x, std::span<const double> y)
{
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double z = m.logit(x.row(r));
        if (m.head == Head::logistic) {
            loss += std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y[r] * z;
        } else {
            loss += 0.5 * (z - y[r]) * (z - y[r]);
        }
    }
    return x.rows() == 0 ? 0.0 : loss / static_cast<double>(x.rows());
}

nlohmann::json to_json(const WideModel& m)
{
    nlohmann::json crosses = nlohmann::json::array();
    for (const auto& [i, j] : m.crosses) {
        crosses.push_back({i, j});
    }
    return {
        {"type", "wide"},
        {"head", m.head == Head::logistic ? "logistic" : "affine"},
        {"input_dims", m.input_dims},
        {"w", m.w},
        {"b", m.b},
        {"crosses", crosses},
        {"thresholds", m.thresholds},
        {"ridge_fallback", m.ridge_fallback},
    };
}

WideModel wide_from_json(const nlohmann::json& j)
{
    WideModel m;
    m.head = j.at("head").get<std::string>() == "logistic" ? Head::logistic : Head::affine;
    m.input_dims = j.at("input_dims").get<std::size_t>();
    m.w = j.at("w").get<std::vector<double>>();
    m.b = j.at("b").get<double>();
    for (const auto& c : j.at("crosses")) {
        m.crosses.emplace_back(c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>());
    }
    m.thresholds = j.value("thresholds", std::vector<double>{});
    m.ridge_fallback = j.value("ridge_fallback", false);
    return m;
}

} // namespace rainbench::linear
