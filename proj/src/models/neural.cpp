#include "rainbench/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rainbench/error.hpp"
#include "rainbench/rng.hpp"
#include "rainbench/simd/kernels.hpp"

namespace rainbench::neural {

using linear::sigmoid;

MlpModel::MlpModel(std::size_t input_dims, std::size_t hidden_layers, Head head)
    : input_dims_(input_dims), head_(head)
{
    require(hidden_layers >= 1, ErrorKind::validation, "an MLP needs at least one hidden layer");
    require(input_dims >= 1, ErrorKind::validation, "an MLP needs at least one input feature");
    for (std::size_t k = 0; k < hidden_layers; ++k) {
        layers_.push_back({Matrix(input_dims, input_dims), std::vector<double>(input_dims, 0.0)});
    }
    layers_.push_back({Matrix(1, input_dims), std::vector<double>(1, 0.0)});
}

MlpModel MlpModel::initialized(std::size_t input_dims, std::size_t hidden_layers, Head head, std::uint64_t seed)
{
    MlpModel m(input_dims, hidden_layers, head);
    Rng rng(seed);
    for (auto& layer : m.layers_) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
        for (auto& v : layer.w.data()) {
            v = rng.uniform(-0.5, 0.5) * scale;
        }
    }
    return m;
}

double MlpModel::forward(std::span<const double> x, ForwardCache* cache) const
{
    if (x.size() != input_dims_) {
        throw Error(ErrorKind::dimension_mismatch, "MLP expects " + std::to_string(input_dims_) + " inputs, got "
                                                       + std::to_string(x.size()));
    }
    std::vector<double> current(x.begin(), x.end());
    if (cache != nullptr) {
        cache->values.assign(1, current);
    }
    std::vector<double> next;
    for (std::size_t k = 0; k + 1 < layers_.size(); ++k) {
        const auto& layer = layers_[k];
        next.assign(layer.w.rows(), 0.0);
        simd::gemv(layer.w.data(), layer.w.rows(), layer.w.cols(), current, next);
        for (std::size_t j = 0; j < next.size(); ++j) {
            next[j] = sigmoid(next[j] + layer.b[j]);
        }
        current.swap(next);
        if (cache != nullptr) {
            cache->values.push_back(current);
        }
    }
    const auto& out = layers_.back();
    const double z = simd::dot(out.w.row(0), current) + out.b[0];
    const double y = head_ == Head::logistic ? sigmoid(z) : z;
    if (cache != nullptr) {
        cache->logit = z;
        cache->values.push_back({y});
    }
    return y;
}

double MlpModel::logit(std::span<const double> x) const
{
    ForwardCache cache;
    forward(x, &cache);
    return cache.logit;
}

double MlpModel::predict(std::span<const double> x) const
{
    const double y = forward(x);
    if (head_ == Head::logistic) {
        return y >= 0.5 ? 1.0 : 0.0;
    }
    return y;
}

std::vector<double> MlpModel::predict(const Matrix& x) const
{
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict(x.row(r));
    }
    return out;
}

std::size_t MlpModel::parameter_count() const
{
    std::size_t count = 0;
    for (const auto& layer : layers_) {
        count += layer.w.data().size() + layer.b.size();
    }
    return count;
}

std::vector<double> MlpModel::parameters() const
{
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& layer : layers_) {
        flat.insert(flat.end(), layer.w.data().begin(), layer.w.data().end());
        flat.insert(flat.end(), layer.b.begin(), layer.b.end());
    }
    return flat;
}

void MlpModel::set_parameters(std::span<const double> flat)
{
    require(flat.size() == parameter_count(), ErrorKind::dimension_mismatch, "MLP parameter record has the wrong length");
    std::size_t pos = 0;
    for (auto& layer : layers_) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.w.data().size(), layer.w.data().begin());
        pos += layer.w.data().size();
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), layer.b.size(), layer.b.begin());
        pos += layer.b.size();
    }
}

namespace {

// acts[k] is the input of layer k for every row (acts[0] = x).
struct BatchState {
    std::vector<Matrix> acts;
    std::vector<double> logits;
};

void forward_batch(const MlpModel& m, const Matrix& x, BatchState& st, bool head_bias)
{
    const auto& layers = m.layers();
    const std::size_t n = x.rows();
    st.acts.resize(layers.size());
    st.acts[0] = x;
    for (std::size_t k = 0; k + 1 < layers.size(); ++k) {
        const auto& layer = layers[k];
        Matrix out(n, layer.w.rows());
        for (std::size_t r = 0; r < n; ++r) {
            auto row = out.row(r);
            simd::gemv(layer.w.data(), layer.w.rows(), layer.w.cols(), st.acts[k].row(r), row);
            for (std::size_t j = 0; j < row.size(); ++j) {
                row[j] = sigmoid(row[j] + layer.b[j]);
            }
        }
        st.acts[k + 1] = std::move(out);
    }
    const auto& head = layers.back();
    st.logits.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        st.logits[r] = simd::dot(head.w.row(0), st.acts.back().row(r)) + (head_bias ? head.b[0] : 0.0);
    }
}

// Accumulates dLoss/dparams into grad (parameters() order) given dLoss/dlogit
// per row.
void backward_batch(const MlpModel& m, const BatchState& st, std::span<const double> delta_out, std::span<double> grad)
{
    const auto& layers = m.layers();
    const std::size_t n = delta_out.size();
    std::vector<std::size_t> offsets(layers.size());
    std::size_t pos = 0;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        offsets[k] = pos;
        pos += layers[k].w.data().size() + layers[k].b.size();
    }

    Matrix delta(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        delta(r, 0) = delta_out[r];
    }
    for (std::size_t k = layers.size(); k-- > 0;) {
        const auto& layer = layers[k];
        const std::size_t units = layer.w.rows();
        const std::size_t inputs = layer.w.cols();
        auto grad_w = grad.subspan(offsets[k], units * inputs);
        auto grad_b = grad.subspan(offsets[k] + units * inputs, units);
        const Matrix& input = st.acts[k];
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < units; ++j) {
                const double dj = delta(r, j);
                if (dj == 0.0) {
                    continue;
                }
                simd::axpy(dj, input.row(r), grad_w.subspan(j * inputs, inputs));
                grad_b[j] += dj;
            }
        }
        if (k == 0) {
            break;
        }
        Matrix previous(n, inputs, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = previous.row(r);
            for (std::size_t j = 0; j < units; ++j) {
                simd::axpy(delta(r, j), layer.w.row(j), row);
            }
            const auto a = input.row(r);
            for (std::size_t i = 0; i < inputs; ++i) {
                row[i] *= a[i] * (1.0 - a[i]);
            }
        }
        delta = std::move(previous);
    }
}

double head_loss(Head head, double z, double y)
{
    if (head == Head::logistic) {
        return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y * z;
    }
    return 0.5 * (z - y) * (z - y);
}

double head_residual(Head head, double z, double y) { return (head == Head::logistic ? sigmoid(z) : z) - y; }

void check_training_set(const Matrix& x, std::span<const double> y, Head head)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "features and targets differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "training needs at least one row");
    if (head == Head::logistic) {
        for (const double label : y) {
            require(label == 0.0 || label == 1.0, ErrorKind::validation, "classification needs 0/1 labels");
        }
    }
}

} // namespace

double loss_and_gradient(const MlpModel& m, const Matrix& x, std::span<const double> y, std::vector<double>* grad)
{
    BatchState st;
    forward_batch(m, x, st, true);
    const auto n = static_cast<double>(x.rows());
    double loss = 0.0;
    std::vector<double> delta(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        loss += head_loss(m.head(), st.logits[r], y[r]);
        delta[r] = head_residual(m.head(), st.logits[r], y[r]) / n;
    }
    if (grad != nullptr) {
        grad->assign(m.parameter_count(), 0.0);
        backward_batch(m, st, delta, *grad);
    }
    return loss / n;
}

MlpModel fit_mlp(const Matrix& x, std::span<const double> y, std::size_t hidden_layers, Head head,
                 const TrainOptions& options, std::uint64_t init_seed)
{
    check_training_set(x, y, head);
    MlpModel model = MlpModel::initialized(x.cols(), hidden_layers, head, init_seed);
    std::vector<double> params = model.parameters();
    std::vector<double> accepted = params;
    std::vector<double> grad;
    double previous = std::numeric_limits<double>::infinity();
    bool stopped = false;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const double loss = loss_and_gradient(model, x, y, &grad);
        if (!(loss <= previous)) {
            // The last step overshot: return the parameters it started from.
            model.set_parameters(accepted);
            stopped = true;
            break;
        }
        model.loss_trace.push_back(loss);
        if (previous - loss < options.early_stop) {
            stopped = true;
            break;
        }
        previous = loss;
        accepted = params;
        simd::axpy(-options.lr, grad, params);
        model.set_parameters(params);
    }
    if (!stopped) {
        model.loss_trace.push_back(loss_and_gradient(model, x, y, nullptr));
    }
    return model;
}

// --- wide and deep --------------------------------------------------------

double DeepWideModel::logit(std::span<const double> x) const
{
    ForwardCache cache;
    deep.forward(x, &cache);
    const double deep_z = cache.logit - deep.layers().back().b[0];
    return wide.logit(x) + deep_z;
}

double DeepWideModel::forward(std::span<const double> x) const
{
    const double z = logit(x);
    return wide.head == Head::logistic ? sigmoid(z) : z;
}

double DeepWideModel::predict(std::span<const double> x) const
{
    const double z = logit(x);
    if (wide.head == Head::logistic) {
        return z >= 0.0 ? 1.0 : 0.0;
    }
    return z;
}

std::vector<double> DeepWideModel::predict(const Matrix& x) const
{
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict(x.row(r));
    }
    return out;
}

std::vector<double> DeepWideModel::parameters() const
{
    std::vector<double> flat = wide.w;
    flat.push_back(wide.b);
    const auto deep_params = deep.parameters();
    flat.insert(flat.end(), deep_params.begin(), deep_params.end());
    return flat;
}

void DeepWideModel::set_parameters(std::span<const double> flat)
{
    require(flat.size() == wide.w.size() + 1 + deep.parameter_count(), ErrorKind::dimension_mismatch,
            "wide-and-deep parameter record has the wrong length");
    std::copy_n(flat.begin(), wide.w.size(), wide.w.begin());
    wide.b = flat[wide.w.size()];
    deep.set_parameters(flat.subspan(wide.w.size() + 1));
}

namespace {

Matrix expand_rows(const linear::WideModel& wide, const Matrix& x)
{
    if (wide.crosses.empty()) {
        return x;
    }
    Matrix out(x.rows(), wide.w.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto e = wide.expand(x.row(r));
        std::copy(e.begin(), e.end(), out.row(r).begin());
    }
    return out;
}

double joint_loss_and_gradient(const DeepWideModel& m, const Matrix& x, const Matrix& expanded,
                               std::span<const double> y, std::vector<double>* grad)
{
    BatchState st;
    forward_batch(m.deep, x, st, false);
    const Head head = m.wide.head;
    const auto n = static_cast<double>(x.rows());
    const std::size_t width = m.wide.w.size();
    std::vector<double> delta(x.rows());
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const double z = simd::dot(m.wide.w, expanded.row(r)) + m.wide.b + st.logits[r];
        loss += head_loss(head, z, y[r]);
        delta[r] = head_residual(head, z, y[r]) / n;
    }
    if (grad != nullptr) {
        grad->assign(width + 1 + m.deep.parameter_count(), 0.0);
        auto g = std::span<double>(*grad);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            simd::axpy(delta[r], expanded.row(r), g.subspan(0, width));
            g[width] += delta[r];
        }
        backward_batch(m.deep, st, delta, g.subspan(width + 1));
        g.back() = 0.0; // deep head bias is folded into the shared bias
    }
    return loss / n;
}

} // namespace

double loss_and_gradient(const DeepWideModel& m, const Matrix& x, std::span<const double> y, std::vector<double>* grad)
{
    return joint_loss_and_gradient(m, x, expand_rows(m.wide, x), y, grad);
}

DeepWideModel init_deep_wide(const Matrix& x, std::size_t hidden_layers, Head head, const DeepWideOptions& options,
                             std::uint64_t init_seed)
{
    DeepWideModel m;
    m.wide.head = head;
    m.wide.input_dims = x.cols();
    m.wide.crosses = linear::make_crosses(x.cols(), options.crosses);
    if (!m.wide.crosses.empty()) {
        m.wide.thresholds = linear::column_medians(x);
    }
    m.wide.w.assign(x.cols() + m.wide.crosses.size(), 0.0);
    m.deep = MlpModel::initialized(x.cols(), hidden_layers, head, init_seed);
    if (options.zero_deep) {
        std::vector<double> zeros(m.deep.parameter_count(), 0.0);
        m.deep.set_parameters(zeros);
    }
    m.deep.layers().back().b[0] = 0.0;
    return m;
}

DeepWideModel fit_deep_wide(const Matrix& x, std::span<const double> y, std::size_t hidden_layers, Head head,
                            const DeepWideOptions& options, std::uint64_t init_seed)
{
    check_training_set(x, y, head);
    DeepWideModel model = init_deep_wide(x, hidden_layers, head, options, init_seed);
    const Matrix expanded = expand_rows(model.wide, x);
    const std::size_t width = model.wide.w.size();
    std::vector<double> params = model.parameters();
    std::vector<double> accepted = params;
    std::vector<double> grad;
    double previous = std::numeric_limits<double>::infinity();
    bool stopped = false;
    for (std::size_t epoch = 0; epoch < options.train.epochs; ++epoch) {
        const double loss = joint_loss_and_gradient(model, x, expanded, y, &grad);
        if (!(loss <= previous)) {
            model.set_parameters(accepted);
            stopped = true;
            break;
        }
        model.loss_trace.push_back(loss);
        if (previous - loss < options.train.early_stop) {
            stopped = true;
            break;
        }
        previous = loss;
        accepted = params;
        if (options.freeze_wide_weights) {
            std::fill_n(grad.begin(), width, 0.0);
        }
        if (options.freeze_deep) {
            std::fill(grad.begin() + static_cast<std::ptrdiff_t>(width + 1), grad.end(), 0.0);
        }
        simd::axpy(-options.train.lr, grad, params);
        model.set_parameters(params);
    }
    if (!stopped) {
        model.loss_trace.push_back(joint_loss_and_gradient(model, x, expanded, y, nullptr));
    }
    return model;
}

nlohmann::json to_json(const MlpModel& m)
{
    return {
        {"type", "mlp"},
        {"head", m.head() == Head::logistic ? "logistic" : "affine"},
        {"input_dims", m.input_dims()},
        {"hidden_layers", m.hidden_layers()},
        {"parameters", m.parameters()},
    };
}

MlpModel mlp_from_json(const nlohmann::json& j)
{
    const Head head = j.at("head").get<std::string>() == "logistic" ? Head::logistic : Head::affine;
    MlpModel m(j.at("input_dims").get<std::size_t>(), j.at("hidden_layers").get<std::size_t>(), head);
    m.set_parameters(j.at("parameters").get<std::vector<double>>());
    return m;
}

nlohmann::json to_json(const DeepWideModel& m)
{
    return {{"type", "deep_wide"}, {"wide", linear::to_json(m.wide)}, {"deep", to_json(m.deep)}};
}

} // namespace rainbench::neural
