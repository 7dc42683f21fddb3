#include "rainbench/simd/kernels.hpp"

#include <cmath>

namespace rainbench::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return sum;
}

double manhattan_distance_scalar(const double* a, const double* b, std::size_t n)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum += std::fabs(a[i] - b[i]);
    }
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y)
{
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_scalar(a + r * cols, x, cols);
    }
}

} // namespace

const KernelTable& scalar_kernels()
{
    static const KernelTable table{
        "scalar", dot_scalar, squared_distance_scalar, manhattan_distance_scalar, axpy_scalar, gemv_scalar,
    };
    return table;
}

} // namespace rainbench::simd
