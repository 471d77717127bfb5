#pragma once

// Group reductions evaluated once per candidate download time gamma by the
// Lyapunov scheduler. Columns are structure-of-arrays over the users in the
// decider's view.

#include <cstddef>
#include <string_view>

namespace coopstream::kernels {

// Sum over users of 0.5 * ((cap - [buf - gamma]^+)^2 - (cap - buf)^2): the
// quadratic drift if every listed buffer just drains for gamma seconds.
using DrainDriftFn = double (*)(const double* cap, const double* buf, std::size_t n,
                                double gamma);

// Sum over users of weight * [gamma - buf]^+: weighted stall time.
using StallFn = double (*)(const double* buf, const double* weight, std::size_t n,
                           double gamma);

struct DriftKernels {
  std::string_view name;
  DrainDriftFn drain_drift;
  StallFn stall;
};

double drain_drift_scalar(const double* cap, const double* buf, std::size_t n, double gamma);
double stall_scalar(const double* buf, const double* weight, std::size_t n, double gamma);

// Only callable when the CPU supports AVX2 and FMA.
double drain_drift_avx2(const double* cap, const double* buf, std::size_t n, double gamma);
double stall_avx2(const double* buf, const double* weight, std::size_t n, double gamma);

const DriftKernels& scalar_kernels();
bool avx2_available();
const DriftKernels& avx2_kernels();  // throws std::runtime_error if unavailable

// AVX2 when the CPU has it, scalar otherwise or when COOPSTREAM_SIMD=scalar.
const DriftKernels& active_kernels();

}  // namespace coopstream::kernels
