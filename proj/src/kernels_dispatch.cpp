#include "bmc/kernels.hpp"

#include <atomic>

#include "bmc/errors.hpp"

namespace bmc::kernels {

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {
std::atomic<SimdMode> g_mode{SimdMode::Auto};
}

void set_simd_mode(SimdMode mode) {
    if (mode == SimdMode::Avx2 && !avx2_available())
        throw ConfigError("simd: avx2 requested but not available on this CPU");
    g_mode.store(mode);
}

SimdMode parse_simd_mode(const std::string& s) {
    if (s == "auto") return SimdMode::Auto;
    if (s == "scalar") return SimdMode::Scalar;
    if (s == "avx2") return SimdMode::Avx2;
    throw ConfigError("simd: unknown mode '" + s + "' (auto|scalar|avx2)");
}

const Kernels& active_kernels() {
    const SimdMode mode = g_mode.load();
#if defined(__x86_64__) || defined(_M_X64)
    if (mode == SimdMode::Avx2) return avx2_kernels();
    if (mode == SimdMode::Auto && avx2_available()) return avx2_kernels();
#endif
    (void)mode;
    return scalar_kernels();
}

}  // namespace bmc::kernels
