#include "rainbench/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace rainbench::simd {
namespace detail {
#if defined(RAINBENCH_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(RAINBENCH_HAVE_NEON)
const KernelTable& neon_table();
#endif
} // namespace detail

const KernelTable* avx2_kernels()
{
#if defined(RAINBENCH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &detail::avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_kernels()
{
#if defined(RAINBENCH_HAVE_NEON)
    return &detail::neon_table();
#else
    return nullptr;
#endif
}

namespace {

const KernelTable& resolve()
{
    const char* env = std::getenv("RAINBENCH_SIMD");
    const std::string_view request = env != nullptr ? env : "";
    if (request == "scalar") {
        return scalar_kernels();
    }
    if (request.empty() || request == "avx2") {
        if (const auto* table = avx2_kernels()) {
            return *table;
        }
    }
    if (request.empty() || request == "neon") {
        if (const auto* table = neon_kernels()) {
            return *table;
        }
    }
    return scalar_kernels();
}

} // namespace

const KernelTable& active_kernels()
{
    static const KernelTable& table = resolve();
    return table;
}

} // namespace rainbench::simd
