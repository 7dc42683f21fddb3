#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace rainbench::simd {

// Inner-loop kernels shared by the models. Every backend implements the same
// table; the scalar backend is the reference the others are tested against.
struct KernelTable {
    std::string_view name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    double (*manhattan_distance)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y = A x for row-major A (rows x cols)
    void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
};

const KernelTable& scalar_kernels();

// Returns nullptr when the backend was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Best available backend, resolved once. RAINBENCH_SIMD=scalar|avx2|neon
// overrides the choice (falls back to scalar if the request is unavailable).
const KernelTable& active_kernels();

inline double dot(std::span<const double> a, std::span<const double> b)
{
    return active_kernels().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b)
{
    return active_kernels().squared_distance(a.data(), b.data(), a.size());
}

inline double manhattan_distance(std::span<const double> a, std::span<const double> b)
{
    return active_kernels().manhattan_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void gemv(std::span<const double> a, std::size_t rows, std::size_t cols, std::span<const double> x,
                 std::span<double> y)
{
    active_kernels().gemv(a.data(), rows, cols, x.data(), y.data());
}

} // namespace rainbench::simd
