#include "rainbench/recurrent.hpp"

#include <algorithm>
#include <cmath>

#include "rainbench/error.hpp"
#include "rainbench/rng.hpp"
#include "rainbench/simd/kernels.hpp"

namespace rainbench::recurrent {

using linear::sigmoid;

SequenceSet SequenceSet::subset(std::span<const std::size_t> indices) const
{
    SequenceSet out;
    out.rows = rows;
    out.length = length;
    out.ends.reserve(indices.size());
    out.targets.reserve(indices.size());
    for (const auto k : indices) {
        out.ends.push_back(ends.at(k));
        out.targets.push_back(targets.at(k));
    }
    return out;
}

SequenceSet SequenceSet::above(double threshold) const
{
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < size(); ++k) {
        if (targets[k] > threshold) {
            keep.push_back(k);
        }
    }
    return subset(keep);
}

SequenceSet make_sequences(const Matrix& rows, std::span<const double> targets, std::size_t length)
{
    require(length >= 1, ErrorKind::validation, "sequence length must be at least 1");
    require(rows.rows() == targets.size(), ErrorKind::dimension_mismatch, "rows and targets differ in length");
    if (rows.rows() < length) {
        throw Error(ErrorKind::insufficient_data, "sequence length " + std::to_string(length) + " exceeds the "
                                                      + std::to_string(rows.rows()) + " available rows");
    }
    SequenceSet set;
    set.rows = rows;
    set.length = length;
    for (std::size_t i = length - 1; i < rows.rows(); ++i) {
        set.ends.push_back(i);
        set.targets.push_back(targets[i]);
    }
    return set;
}

SequenceSet make_sequences(const data::HourlyDataset& ds, std::size_t length)
{
    require(ds.labeled() && ds.target.size() == ds.size(), ErrorKind::validation,
            "sequence windows need a labeled dataset");
    return make_sequences(ds.features, ds.target, length);
}

CellKind parse_cell(std::string_view text)
{
    if (text == "lstm") return CellKind::lstm;
    if (text == "gru") return CellKind::gru;
    if (text == "bilstm") return CellKind::bilstm;
    throw Error(ErrorKind::validation, "unknown recurrent cell '" + std::string(text) + "'");
}

std::string_view to_string(CellKind cell)
{
    switch (cell) {
    case CellKind::gru: return "gru";
    case CellKind::bilstm: return "bilstm";
    case CellKind::lstm: break;
    }
    return "lstm";
}

RecurrentModel::RecurrentModel(CellKind cell, std::size_t input_dims, std::size_t hidden, Head head, bool biases)
    : cell_(cell), input_dims_(input_dims), hidden_(hidden), head_(head), biases_(biases)
{
    require(input_dims >= 1, ErrorKind::validation, "recurrent model needs at least one input feature");
    require(hidden >= 1, ErrorKind::validation, "recurrent hidden size must be at least 1");
    params_.assign(readout_offset() + directions() * hidden_ + 1, 0.0);
}

RecurrentModel RecurrentModel::initialized(CellKind cell, std::size_t input_dims, std::size_t hidden, Head head,
                                           bool biases, std::uint64_t seed)
{
    RecurrentModel m(cell, input_dims, hidden, head, biases);
    Rng rng(seed);
    const double gate_scale = 1.0 / std::sqrt(static_cast<double>(input_dims + hidden));
    for (std::size_t dir = 0; dir < m.directions(); ++dir) {
        for (std::size_t g = 0; g < m.gates(); ++g) {
            const std::size_t base = m.block_offset(dir, g);
            const std::size_t weights = hidden * input_dims + hidden * hidden;
            for (std::size_t k = 0; k < weights; ++k) {
                m.params_[base + k] = rng.uniform(-0.5, 0.5) * gate_scale;
            }
        }
    }
    const std::size_t width = m.directions() * hidden;
    const double readout_scale = 1.0 / std::sqrt(static_cast<double>(width));
    for (std::size_t k = 0; k < width; ++k) {
        m.params_[m.readout_offset() + k] = rng.uniform(-0.5, 0.5) * readout_scale;
    }
    return m;
}

std::size_t RecurrentModel::block_offset(std::size_t direction, std::size_t gate) const
{
    return (direction * gates() + gate) * block_size();
}

std::span<const double> RecurrentModel::u(std::size_t direction, std::size_t gate) const
{
    return std::span<const double>(params_).subspan(block_offset(direction, gate), hidden_ * input_dims_);
}

std::span<const double> RecurrentModel::w(std::size_t direction, std::size_t gate) const
{
    return std::span<const double>(params_).subspan(block_offset(direction, gate) + hidden_ * input_dims_,
                                                    hidden_ * hidden_);
}

std::span<const double> RecurrentModel::b(std::size_t direction, std::size_t gate) const
{
    if (!biases_) {
        return {};
    }
    return std::span<const double>(params_).subspan(
        block_offset(direction, gate) + hidden_ * input_dims_ + hidden_ * hidden_, hidden_);
}

namespace {

// Everything one step needs for backpropagation.
struct Step {
    std::span<const double> x;
    std::vector<double> h_prev;
    std::vector<double> c_prev;
    std::vector<double> gate[4]; // post-activation gate values
    std::vector<double> c;
    std::vector<double> h;
    std::vector<double> rh; // GRU: reset gate times h_prev
};

// out = U x + W h + b for one gate block.
void pre_activation(const RecurrentModel& m, std::size_t dir, std::size_t g, std::span<const double> x,
                    std::span<const double> h, std::vector<double>& out, std::vector<double>& scratch)
{
    const std::size_t hidden = m.hidden();
    out.assign(hidden, 0.0);
    scratch.assign(hidden, 0.0);
    simd::gemv(m.u(dir, g), hidden, m.input_dims(), x, out);
    simd::gemv(m.w(dir, g), hidden, hidden, h, scratch);
    const auto bias = m.b(dir, g);
    for (std::size_t k = 0; k < hidden; ++k) {
        out[k] += scratch[k] + (bias.empty() ? 0.0 : bias[k]);
    }
}

void run_step(const RecurrentModel& m, std::size_t dir, Step& s, std::vector<double>& scratch)
{
    const std::size_t hidden = m.hidden();
    s.h.assign(hidden, 0.0);
    if (m.cell() == CellKind::gru) {
        auto& z = s.gate[0];
        auto& r = s.gate[1];
        auto& cand = s.gate[2];
        pre_activation(m, dir, 0, s.x, s.h_prev, z, scratch);
        pre_activation(m, dir, 1, s.x, s.h_prev, r, scratch);
        for (std::size_t k = 0; k < hidden; ++k) {
            z[k] = sigmoid(z[k]);
            r[k] = sigmoid(r[k]);
        }
        s.rh.resize(hidden);
        for (std::size_t k = 0; k < hidden; ++k) {
            s.rh[k] = r[k] * s.h_prev[k];
        }
        pre_activation(m, dir, 2, s.x, s.rh, cand, scratch);
        for (std::size_t k = 0; k < hidden; ++k) {
            cand[k] = std::tanh(cand[k]);
            s.h[k] = z[k] * s.h_prev[k] + (1.0 - z[k]) * cand[k];
        }
        s.c.clear();
        return;
    }
    for (std::size_t g = 0; g < 4; ++g) {
        pre_activation(m, dir, g, s.x, s.h_prev, s.gate[g], scratch);
    }
    auto& f = s.gate[0];
    auto& in = s.gate[1];
    auto& cand = s.gate[2];
    auto& o = s.gate[3];
    s.c.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
        f[k] = sigmoid(f[k]);
        in[k] = sigmoid(in[k]);
        cand[k] = std::tanh(cand[k]);
        o[k] = sigmoid(o[k]);
        s.c[k] = f[k] * s.c_prev[k] + in[k] * cand[k];
        s.h[k] = std::tanh(s.c[k]) * o[k];
    }
}

// Runs one direction over the window (reversed for direction 1), filling
// trace with one Step per time step.
void run_direction(const RecurrentModel& m, std::size_t dir, std::span<const double> window, std::vector<Step>& trace,
                   std::vector<double>& scratch)
{
    const std::size_t d = m.input_dims();
    const std::size_t length = window.size() / d;
    trace.resize(length);
    for (std::size_t t = 0; t < length; ++t) {
        const std::size_t row = dir == 0 ? t : length - 1 - t;
        Step& s = trace[t];
        s.x = window.subspan(row * d, d);
        if (t == 0) {
            s.h_prev.assign(m.hidden(), 0.0);
            s.c_prev.assign(m.hidden(), 0.0);
        } else {
            s.h_prev = trace[t - 1].h;
            s.c_prev = trace[t - 1].c;
            if (s.c_prev.empty()) {
                s.c_prev.assign(m.hidden(), 0.0);
            }
        }
        run_step(m, dir, s, scratch);
    }
}

// Outer-product accumulation for one gate block: dU += da x', dW += da h',
// db += da; and dh += W' da.
void accumulate_block(const RecurrentModel& m, std::size_t dir, std::size_t g, std::span<const double> da,
                      std::span<const double> x, std::span<const double> h, std::span<double> grad,
                      std::span<double> dh)
{
    const std::size_t hidden = m.hidden();
    const std::size_t d = m.input_dims();
    const std::size_t base = m.block_offset(dir, g);
    auto du = grad.subspan(base, hidden * d);
    auto dw = grad.subspan(base + hidden * d, hidden * hidden);
    const auto wmat = m.w(dir, g);
    for (std::size_t k = 0; k < hidden; ++k) {
        const double a = da[k];
        if (a == 0.0) {
            continue;
        }
        simd::axpy(a, x, du.subspan(k * d, d));
        simd::axpy(a, h, dw.subspan(k * hidden, hidden));
        simd::axpy(a, wmat.subspan(k * hidden, hidden), dh);
    }
    if (m.biases()) {
        auto db = grad.subspan(base + hidden * d + hidden * hidden, hidden);
        for (std::size_t k = 0; k < hidden; ++k) {
            db[k] += da[k];
        }
    }
}

void backprop_direction(const RecurrentModel& m, std::size_t dir, const std::vector<Step>& trace,
                        std::vector<double> dh, std::span<double> grad)
{
    const std::size_t hidden = m.hidden();
    std::vector<double> dc(hidden, 0.0);
    std::vector<double> da[4];
    for (auto& v : da) {
        v.assign(hidden, 0.0);
    }
    std::vector<double> dh_prev(hidden);
    std::vector<double> drh(hidden);

    for (std::size_t t = trace.size(); t-- > 0;) {
        const Step& s = trace[t];
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        if (m.cell() == CellKind::gru) {
            const auto& z = s.gate[0];
            const auto& r = s.gate[1];
            const auto& cand = s.gate[2];
            for (std::size_t k = 0; k < hidden; ++k) {
                const double dz = dh[k] * (s.h_prev[k] - cand[k]);
                const double dcand = dh[k] * (1.0 - z[k]);
                dh_prev[k] = dh[k] * z[k];
                da[0][k] = dz * z[k] * (1.0 - z[k]);
                da[2][k] = dcand * (1.0 - cand[k] * cand[k]);
            }
            std::fill(drh.begin(), drh.end(), 0.0);
            accumulate_block(m, dir, 2, da[2], s.x, s.rh, grad, drh);
            for (std::size_t k = 0; k < hidden; ++k) {
                const double dr = drh[k] * s.h_prev[k];
                dh_prev[k] += drh[k] * r[k];
                da[1][k] = dr * r[k] * (1.0 - r[k]);
            }
            accumulate_block(m, dir, 0, da[0], s.x, s.h_prev, grad, dh_prev);
            accumulate_block(m, dir, 1, da[1], s.x, s.h_prev, grad, dh_prev);
        } else {
            const auto& f = s.gate[0];
            const auto& in = s.gate[1];
            const auto& cand = s.gate[2];
            const auto& o = s.gate[3];
            for (std::size_t k = 0; k < hidden; ++k) {
                const double tc = std::tanh(s.c[k]);
                const double d_o = dh[k] * tc;
                dc[k] += dh[k] * o[k] * (1.0 - tc * tc);
                da[0][k] = dc[k] * s.c_prev[k] * f[k] * (1.0 - f[k]);
                da[1][k] = dc[k] * cand[k] * in[k] * (1.0 - in[k]);
                da[2][k] = dc[k] * in[k] * (1.0 - cand[k] * cand[k]);
                da[3][k] = d_o * o[k] * (1.0 - o[k]);
                dc[k] *= f[k];
            }
            for (std::size_t g = 0; g < 4; ++g) {
                accumulate_block(m, dir, g, da[g], s.x, s.h_prev, grad, dh_prev);
            }
        }
        dh.swap(dh_prev);
    }
}

double head_loss(Head head, double z, double y)
{
    if (head == Head::logistic) {
        return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))) - y * z;
    }
    return 0.5 * (z - y) * (z - y);
}

struct Workspace {
    std::vector<Step> trace[2];
    std::vector<double> scratch;
};

double readout_logit(const RecurrentModel& m, const Workspace& ws)
{
    const auto& p = m.parameters();
    const std::size_t off = m.readout_offset();
    double z = p[off + m.directions() * m.hidden()];
    for (std::size_t dir = 0; dir < m.directions(); ++dir) {
        const auto& h = ws.trace[dir].back().h;
        z += simd::dot(std::span<const double>(p).subspan(off + dir * m.hidden(), m.hidden()), h);
    }
    return z;
}

double window_logit(const RecurrentModel& m, std::span<const double> window, Workspace& ws)
{
    require(window.size() % m.input_dims() == 0 && !window.empty(), ErrorKind::dimension_mismatch,
            "window width does not match the model input");
    for (std::size_t dir = 0; dir < m.directions(); ++dir) {
        run_direction(m, dir, window, ws.trace[dir], ws.scratch);
    }
    return readout_logit(m, ws);
}

// Loss over windows [first, last) with gradient of the mean over that range.
double batch_loss_and_gradient(const RecurrentModel& m, const SequenceSet& set, std::size_t first, std::size_t last,
                               std::vector<double>* grad, Workspace& ws)
{
    const auto count = static_cast<double>(last - first);
    const std::size_t hidden = m.hidden();
    const std::size_t off = m.readout_offset();
    const auto& p = m.parameters();
    double loss = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        const double z = window_logit(m, set.window(k), ws);
        const double y = set.targets[k];
        loss += head_loss(m.head(), z, y);
        if (grad == nullptr) {
            continue;
        }
        const double dz = ((m.head() == Head::logistic ? sigmoid(z) : z) - y) / count;
        auto g = std::span<double>(*grad);
        g[off + m.directions() * hidden] += dz;
        for (std::size_t dir = 0; dir < m.directions(); ++dir) {
            const auto& h = ws.trace[dir].back().h;
            simd::axpy(dz, h, g.subspan(off + dir * hidden, hidden));
            std::vector<double> dh(hidden);
            for (std::size_t j = 0; j < hidden; ++j) {
                dh[j] = dz * p[off + dir * hidden + j];
            }
            backprop_direction(m, dir, ws.trace[dir], std::move(dh), g);
        }
    }
    return loss / count;
}

} // namespace

CellState RecurrentModel::cell_step(std::span<const double> x, const CellState& prev, std::size_t direction) const
{
    require(x.size() == input_dims_, ErrorKind::dimension_mismatch, "cell input width mismatch");
    require(prev.h.size() == hidden_, ErrorKind::dimension_mismatch, "cell hidden state has the wrong length");
    require(direction < directions(), ErrorKind::validation, "cell direction out of range");
    Step s;
    s.x = x;
    s.h_prev = prev.h;
    s.c_prev = prev.c.empty() ? std::vector<double>(hidden_, 0.0) : prev.c;
    require(s.c_prev.size() == hidden_, ErrorKind::dimension_mismatch, "cell state has the wrong length");
    std::vector<double> scratch;
    run_step(*this, direction, s, scratch);
    return {std::move(s.h), std::move(s.c)};
}

std::vector<std::vector<double>> RecurrentModel::final_states(std::span<const double> window) const
{
    Workspace ws;
    window_logit(*this, window, ws);
    std::vector<std::vector<double>> out;
    for (std::size_t dir = 0; dir < directions(); ++dir) {
        out.push_back(ws.trace[dir].back().h);
    }
    return out;
}

double RecurrentModel::logit(std::span<const double> window) const
{
    Workspace ws;
    return window_logit(*this, window, ws);
}

double RecurrentModel::forward(std::span<const double> window) const
{
    const double z = logit(window);
    return head_ == Head::logistic ? sigmoid(z) : z;
}

double RecurrentModel::predict(std::span<const double> window) const
{
    const double z = logit(window);
    if (head_ == Head::logistic) {
        return z >= 0.0 ? 1.0 : 0.0;
    }
    return z;
}

std::vector<double> RecurrentModel::predict(const SequenceSet& set) const
{
    require(set.dims() == input_dims_, ErrorKind::dimension_mismatch, "sequence width does not match the model");
    std::vector<double> out(set.size());
    Workspace ws;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const double z = window_logit(*this, set.window(k), ws);
        out[k] = head_ == Head::logistic ? (z >= 0.0 ? 1.0 : 0.0) : z;
    }
    return out;
}

double loss_and_gradient(const RecurrentModel& m, const SequenceSet& set, std::vector<double>* grad)
{
    require(set.size() > 0, ErrorKind::insufficient_data, "no sequence windows");
    require(set.dims() == m.input_dims(), ErrorKind::dimension_mismatch, "sequence width does not match the model");
    if (grad != nullptr) {
        grad->assign(m.parameter_count(), 0.0);
    }
    Workspace ws;
    return batch_loss_and_gradient(m, set, 0, set.size(), grad, ws);
}

RecurrentModel fit_recurrent(const SequenceSet& train, CellKind cell, Head head, const RecurrentOptions& options,
                             std::uint64_t init_seed)
{
    require(train.size() > 0, ErrorKind::insufficient_data, "recurrent training needs at least one window");
    if (head == Head::logistic) {
        for (const double label : train.targets) {
            require(label == 0.0 || label == 1.0, ErrorKind::validation, "classification needs 0/1 labels");
        }
    }
    const std::size_t hidden = options.hidden == 0 ? train.dims() : options.hidden;
    RecurrentModel model = RecurrentModel::initialized(cell, train.dims(), hidden, head, options.biases, init_seed);
    const std::size_t n = train.size();
    const std::size_t batch = options.batch_size == 0 ? n : std::min(options.batch_size, n);
    std::vector<double> grad;
    Workspace ws;
    model.loss_trace.push_back(batch_loss_and_gradient(model, train, 0, n, nullptr, ws));
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            grad.assign(model.parameter_count(), 0.0);
            batch_loss_and_gradient(model, train, start, stop, &grad, ws);
            simd::axpy(-options.lr, grad, model.parameters());
        }
        model.loss_trace.push_back(batch_loss_and_gradient(model, train, 0, n, nullptr, ws));
    }
    return model;
}

nlohmann::json to_json(const RecurrentModel& m)
{
    return {
        {"type", std::string(to_string(m.cell()))},
        {"head", m.head() == Head::logistic ? "logistic" : "affine"},
        {"input_dims", m.input_dims()},
        {"hidden", m.hidden()},
        {"biases", m.biases()},
        {"parameters", m.parameters()},
    };
}

RecurrentModel recurrent_from_json(const nlohmann::json& j)
{
    const Head head = j.at("head").get<std::string>() == "logistic" ? Head::logistic : Head::affine;
    RecurrentModel m(parse_cell(j.at("type").get<std::string>()), j.at("input_dims").get<std::size_t>(),
                     j.at("hidden").get<std::size_t>(), head, j.at("biases").get<bool>());
    auto params = j.at("parameters").get<std::vector<double>>();
    require(params.size() == m.parameter_count(), ErrorKind::dimension_mismatch,
            "recurrent parameter record has the wrong length");
    m.parameters() = std::move(params);
    return m;
}

} // namespace rainbench::recurrent
