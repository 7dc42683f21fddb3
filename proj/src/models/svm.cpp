#include "rainbench/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rainbench/error.hpp"
#include "rainbench/simd/kernels.hpp"

namespace rainbench::svm {

std::string_view to_string(KernelKind kind)
{
    switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::poly: return "poly";
    case KernelKind::sigmoid: return "sigmoid";
    case KernelKind::rbf: break;
    }
    return "rbf";
}

KernelSpec parse_kernel(std::string_view text)
{
    KernelSpec spec;
    if (text == "linear") {
        spec.kind = KernelKind::linear;
    } else if (text == "poly") {
        spec.kind = KernelKind::poly;
    } else if (text == "rbf") {
        spec.kind = KernelKind::rbf;
    } else if (text == "sigmoid") {
        spec.kind = KernelKind::sigmoid;
    } else {
        throw Error(ErrorKind::validation, "unknown kernel '" + std::string(text) + "'");
    }
    return spec;
}

std::string to_string(const KernelSpec& k) { return std::string(to_string(k.kind)); }

KernelSpec resolve(KernelSpec spec, std::size_t dims)
{
    if (spec.gamma <= 0.0) {
        require(dims > 0, ErrorKind::validation, "kernel gamma default needs at least one feature");
        spec.gamma = 1.0 / static_cast<double>(dims);
    }
    require(spec.degree >= 1, ErrorKind::validation, "polynomial degree must be at least 1");
    return spec;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw Error(ErrorKind::dimension_mismatch, "kernel arguments differ in dimension");
    }
    switch (spec.kind) {
    case KernelKind::linear: return simd::dot(x, y);
    case KernelKind::poly: return std::pow(spec.gamma * simd::dot(x, y) + spec.coef0, spec.degree);
    case KernelKind::sigmoid: return std::tanh(spec.gamma * simd::dot(x, y) + spec.coef0);
    case KernelKind::rbf: break;
    }
    return std::exp(-spec.gamma * simd::squared_distance(x, y));
}

namespace {

// Kernel matrix over the training rows, filled one row at a time on first use.
class KernelRows {
public:
    KernelRows(const Matrix& x, const KernelSpec& spec) : x_(x), spec_(spec), rows_(x.rows()) {}

    const std::vector<double>& row(std::size_t i)
    {
        auto& r = rows_[i];
        if (r.empty()) {
            r.resize(x_.rows());
            for (std::size_t j = 0; j < x_.rows(); ++j) {
                // Reuse the symmetric entry when the other row is already known.
                r[j] = (j == i || rows_[j].empty()) ? kernel_eval(spec_, x_.row(i), x_.row(j)) : rows_[j][i];
            }
        }
        return r;
    }

private:
    const Matrix& x_;
    KernelSpec spec_;
    std::vector<std::vector<double>> rows_;
};

// Minimizes 0.5 a'Qa + p'a subject to y'a = 0 and 0 <= a <= C, where
// Q_ts = y_t y_s K(sample(t), sample(s)) and dual variable t maps to training
// row t mod N. First-order maximal-violating-pair working sets.
void solve(KernelRows& kernel, std::size_t samples, std::span<const double> p, std::span<const double> y,
           const SolverOptions& options, SvmModel& out)
{
    constexpr double tau = 1e-12;
    const std::size_t n = p.size();
    const double c = options.c;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(p.begin(), p.end());
    const std::size_t budget = std::max<std::size_t>(options.max_passes * n, 1000);

    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };
    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            f += alpha[t] * (grad[t] + p[t]);
        }
        return -0.5 * f;
    };

    if (options.record_objective) {
        out.objective_trace.push_back(objective());
    }
    std::size_t iter = 0;
    for (;; ++iter) {
        double g_max = -std::numeric_limits<double>::infinity();
        double g_min = std::numeric_limits<double>::infinity();
        std::size_t i = n;
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > g_max) {
                g_max = v;
                i = t;
            }
            if (in_low(t) && v < g_min) {
                g_min = v;
                j = t;
            }
        }
        if (i == n || j == n || g_max - g_min < options.tol) {
            break;
        }
        if (iter >= budget) {
            out.budget_exhausted = true;
            break;
        }

        const std::size_t si = i % samples;
        const std::size_t sj = j % samples;
        const auto& ki = kernel.row(si);
        const auto& kj = kernel.row(sj);
        const double q_ii = ki[si];
        const double q_jj = kj[sj];
        const double q_ij = y[i] * y[j] * ki[sj];
        const double old_i = alpha[i];
        const double old_j = alpha[j];

        if (y[i] != y[j]) {
            double quad = q_ii + q_jj + 2.0 * q_ij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = q_ii + q_jj - 2.0 * q_ij;
            if (quad <= 0.0) quad = tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double step_i = y[i] * (alpha[i] - old_i);
        const double step_j = y[j] * (alpha[j] - old_j);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t st = t % samples;
            grad[t] += y[t] * (step_i * ki[st] + step_j * kj[st]);
        }
        if (options.record_objective) {
            out.objective_trace.push_back(objective());
        }
    }
    out.iterations = iter;

    // Bias from the free multipliers, or the middle of the feasible interval
    // when every multiplier sits at a bound.
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) upper = std::min(upper, yg);
            else lower = std::max(lower, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    double rho = 0.0;
    if (free_count > 0) {
        rho = free_sum / static_cast<double>(free_count);
    } else if (std::isfinite(upper) && std::isfinite(lower)) {
        rho = 0.5 * (upper + lower);
    } else if (std::isfinite(upper)) {
        rho = upper;
    } else if (std::isfinite(lower)) {
        rho = lower;
    }
    out.b = -rho;
    out.alpha = std::move(alpha);
    out.gradient = std::move(grad);
    out.dual_labels.assign(y.begin(), y.end());
}

void collect_support(const Matrix& x, std::span<const double> coef, SvmModel& out)
{
    out.support = Matrix(0, x.cols());
    out.coef.clear();
    for (std::size_t s = 0; s < x.rows(); ++s) {
        if (coef[s] != 0.0) {
            out.support.append_row(x.row(s));
            out.coef.push_back(coef[s]);
        }
    }
}

void check_options(const SolverOptions& options)
{
    require(options.c >= 0.0, ErrorKind::validation, "box constraint C must be non-negative");
    require(options.tol > 0.0, ErrorKind::validation, "solver tolerance must be positive");
}

} // namespace

SvmModel fit_svc(const Matrix& x, std::span<const double> y, const KernelSpec& kernel, const SolverOptions& options)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "SVM features and labels differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "SVM needs training rows");
    check_options(options);
    const bool zero_one = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0 || v == 1.0; });
    const bool signed_labels = std::all_of(y.begin(), y.end(), [](double v) { return v == -1.0 || v == 1.0; });
    require(zero_one || signed_labels, ErrorKind::validation, "SVM classifier needs binary labels (0/1 or -1/+1)");

    SvmModel model;
    model.kernel = resolve(kernel, x.cols());
    model.c = options.c;
    model.negative_label = zero_one ? 0.0 : -1.0;
    std::vector<double> labels(y.size());
    for (std::size_t s = 0; s < y.size(); ++s) {
        labels[s] = y[s] == 1.0 ? 1.0 : -1.0;
    }
    std::vector<double> p(y.size(), -1.0);
    KernelRows rows(x, model.kernel);
    solve(rows, x.rows(), p, labels, options, model);

    std::vector<double> coef(x.rows());
    for (std::size_t s = 0; s < x.rows(); ++s) {
        coef[s] = model.alpha[s] * labels[s];
    }
    collect_support(x, coef, model);
    return model;
}

SvmModel fit_svr(const Matrix& x, std::span<const double> y, const KernelSpec& kernel, double epsilon,
                 const SolverOptions& options)
{
    require(x.rows() == y.size(), ErrorKind::dimension_mismatch, "SVR features and targets differ in length");
    require(x.rows() > 0, ErrorKind::insufficient_data, "SVR needs training rows");
    require(epsilon >= 0.0, ErrorKind::validation, "SVR tube width must be non-negative");
    check_options(options);

    SvmModel model;
    model.kernel = resolve(kernel, x.cols());
    model.regression = true;
    model.c = options.c;
    model.epsilon = epsilon;
    const std::size_t n = x.rows();
    std::vector<double> p(2 * n);
    std::vector<double> labels(2 * n);
    for (std::size_t s = 0; s < n; ++s) {
        p[s] = epsilon - y[s];
        labels[s] = 1.0;
        p[s + n] = epsilon + y[s];
        labels[s + n] = -1.0;
    }
    KernelRows rows(x, model.kernel);
    solve(rows, n, p, labels, options, model);

    std::vector<double> coef(n);
    for (std::size_t s = 0; s < n; ++s) {
        coef[s] = model.alpha[s] - model.alpha[s + n];
    }
    collect_support(x, coef, model);
    return model;
}

double SvmModel::decision(std::span<const double> x) const
{
    double sum = b;
    for (std::size_t s = 0; s < coef.size(); ++s) {
        sum += coef[s] * kernel_eval(kernel, support.row(s), x);
    }
    return sum;
}

double SvmModel::predict(std::span<const double> x) const
{
    const double f = decision(x);
    if (regression) {
        return f;
    }
    return f > 0.0 ? 1.0 : negative_label;
}

std::vector<double> SvmModel::predict(const Matrix& x) const
{
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = predict(x.row(r));
    }
    return out;
}

double kkt_violation(const SvmModel& m)
{
    if (m.c == 0.0) {
        return 0.0;
    }
    double worst = 0.0;
    for (std::size_t t = 0; t < m.alpha.size(); ++t) {
        const double margin = m.gradient[t] + m.dual_labels[t] * m.b;
        double v;
        if (m.alpha[t] <= 0.0) {
            v = std::max(0.0, -margin);
        } else if (m.alpha[t] >= m.c) {
            v = std::max(0.0, margin);
        } else {
            v = std::fabs(margin);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

nlohmann::json to_json(const SvmModel& m)
{
    return {
        {"type", m.regression ? "svr" : "svc"},
        {"kernel", to_string(m.kernel)},
        {"gamma", m.kernel.gamma},
        {"degree", m.kernel.degree},
        {"coef0", m.kernel.coef0},
        {"c", m.c},
        {"epsilon", m.epsilon},
        {"b", m.b},
        {"coef", m.coef},
        {"support_rows", m.support.rows()},
        {"support", m.support.data()},
        {"iterations", m.iterations},
        {"budget_exhausted", m.budget_exhausted},
    };
}

} // namespace rainbench::svm
