#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rainbench/matrix.hpp"

namespace rainbench::svm {

enum class KernelKind { linear, poly, rbf, sigmoid };

// gamma <= 0 means "1 / d", resolved against the training width at fit time.
struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 0.0;
    int degree = 3;
    double coef0 = 0.0;
};

KernelSpec parse_kernel(std::string_view text);
std::string to_string(const KernelSpec& k);
std::string_view to_string(KernelKind kind);

// Replaces a non-positive gamma with 1/d and validates the rest.
KernelSpec resolve(KernelSpec spec, std::size_t dims);

// linear: x.y; poly: (g x.y + c0)^deg; rbf: exp(-g |x-y|^2); sigmoid: tanh(g x.y + c0).
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

struct SolverOptions {
    double c = 1.0;
    double tol = 1e-3;
    // Iteration budget is max_passes times the number of dual variables.
    std::size_t max_passes = 1000;
    bool record_objective = false;
};

struct SvmModel {
    KernelSpec kernel;
    bool regression = false;
    double c = 1.0;
    double epsilon = 0.0;
    double b = 0.0;

    Matrix support;            // rows with non-zero coefficient
    std::vector<double> coef;  // a_i y_i (classifier) or alpha_i - alpha*_i (regressor)

    // Full solver state kept for auditing: one multiplier per dual variable
    // (N for the classifier, 2N for the regressor: alpha then alpha*).
    std::vector<double> alpha;
    std::vector<double> dual_labels; // +1 / -1 per dual variable
    std::vector<double> gradient;    // gradient of the minimized dual at alpha

    double negative_label = -1.0; // label reported for a negative decision
    std::size_t iterations = 0;
    bool budget_exhausted = false;
    std::vector<double> objective_trace; // dual objective (maximized form) per iteration

    double decision(std::span<const double> x) const;
    double predict(std::span<const double> x) const;
    std::vector<double> predict(const Matrix& x) const;
};

// Labels must be {0, 1} or {-1, +1}; 0 maps to -1 and predictions come back in
// the same convention.
SvmModel fit_svc(const Matrix& x, std::span<const double> y, const KernelSpec& kernel, const SolverOptions& options = {});

SvmModel fit_svr(const Matrix& x, std::span<const double> y, const KernelSpec& kernel, double epsilon = 0.1,
                 const SolverOptions& options = {});

// Largest complementary-slackness violation over all dual variables, using
// the fitted bias: zero multipliers need margin >= -tol, multipliers at C
// need margin <= tol, free ones |margin| <= tol.
double kkt_violation(const SvmModel& m);

nlohmann::json to_json(const SvmModel& m);

} // namespace rainbench::svm
