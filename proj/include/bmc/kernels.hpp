#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace bmc::kernels {

// Per-path quadratic step y = (b + sqrt(b^2 + A*C)) / A with
// A = 2 + kappa_eff*h, C = c_eff*h, b = y_prev + gamma*dw.
// Both CIR and CEV reduce to this form after the Lamperti transform.
struct StepParams {
    double kappa_eff = 0.0;
    double c_eff = 0.0;
    double gamma = 0.0;
};

struct PayoffParams {
    double disc = 1.0;    // e^{-rT}
    double strike = 0.0;  // asset-space strike
    double power = 2.0;   // asset value = y^power
    bool square = true;   // power == 2 fast path (CIR)
};

// Barrier in transformed coordinates. bsign = +1 for down-out (distance
// y - level), -1 for up-out (distance level - y).
struct BarrierParams {
    double level = 0.0;
    double bsign = 1.0;
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t stream = 0;  // caller-chosen substream id (level, role, ...)
};

// Coupled fine/coarse sampling job for one MLMC level l >= 1.
// Writes per-sample fine payoff, coarse payoff and failure flags for
// samples [sample_base, sample_base + n).
struct CoupledJob {
    StepParams step;
    PayoffParams payoff;
    BarrierParams barrier;
    StreamKey key;
    double y0 = 0.0;  // transformed-space start value
    double maturity = 1.0;
    int level = 1;
    std::uint64_t sample_base = 0;
    std::size_t n = 0;
    double* pf = nullptr;
    double* pc = nullptr;
    std::uint8_t* fail = nullptr;
};

// Single-grid job (level 0 of the MLMC telescope and the MC baseline):
// n_steps steps of size maturity / n_steps, bridge survival factors on
// every interval, discounted payoff at the terminal node.
struct FineJob {
    StepParams step;
    PayoffParams payoff;
    BarrierParams barrier;
    StreamKey key;
    double y0 = 0.0;
    double maturity = 1.0;
    int n_steps = 1;
    std::uint64_t sample_base = 0;
    std::size_t n = 0;
    double* payoff_out = nullptr;
    std::uint8_t* fail = nullptr;
};

// Running-extreme sampling job: simulates fine paths and accumulates, for
// each of the n_levels barrier levels, the Brownian-bridge survival
// product of the whole path (smoothed empirical crossing estimator).
// survival is an n x n_levels row-major matrix.
struct ExtremeJob {
    StepParams step;
    StreamKey key;
    double y0 = 0.0;
    double maturity = 1.0;
    int level = 12;
    double bsign = 1.0;  // +1: down-crossing of each z, -1: up-crossing
    const double* z_levels = nullptr;
    std::size_t n_levels = 0;
    std::uint64_t sample_base = 0;
    std::size_t n = 0;
    double* survival = nullptr;
    double* terminal = nullptr;  // optional, may be null
    std::uint8_t* fail = nullptr;
};

struct Kernels {
    void (*fill_gaussians)(StreamKey key, std::uint64_t sample, std::uint32_t step0,
                           std::size_t count, double sqrt_h, double* out);
    void (*norminv_batch)(const double* u, double* z, std::size_t n);
    void (*coupled)(const CoupledJob&);
    void (*fine)(const FineJob&);
    void (*extremes)(const ExtremeJob&);
    const char* name;
};

enum class SimdMode { Auto, Scalar, Avx2 };

// Runtime lane selection. Defaults to the widest lane the CPU supports.
const Kernels& active_kernels();
void set_simd_mode(SimdMode mode);
SimdMode parse_simd_mode(const std::string& s);
bool avx2_available();

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

// Scalar math kernels (reference definitions; the SIMD lane mirrors the
// exact operation order so results are bitwise identical per element).
namespace ref {
double exp_d(double x);
double expm1_d(double x);
double log_d(double x);
double norminv_d(double u);
double uniform_from_bits(std::uint64_t bits);
void philox4x32(const std::uint32_t ctr[4], const std::uint32_t key[2], std::uint32_t out[4]);
double survival_factor(double y0, double y1, double barrier, double bsign, double inv_g2h);
}  // namespace ref

}  // namespace bmc::kernels
