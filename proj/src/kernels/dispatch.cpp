#include "coopstream/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace coopstream::kernels {

namespace {

const DriftKernels kScalar{"scalar", &drain_drift_scalar, &stall_scalar};
const DriftKernels kAvx2{"avx2", &drain_drift_avx2, &stall_avx2};

const DriftKernels& pick() {
  const char* env = std::getenv("COOPSTREAM_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return kScalar;
  return avx2_available() ? kAvx2 : kScalar;
}

}  // namespace

const DriftKernels& scalar_kernels() { return kScalar; }

bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const DriftKernels& avx2_kernels() {
  if (!avx2_available()) throw std::runtime_error("AVX2/FMA not supported on this CPU");
  return kAvx2;
}

const DriftKernels& active_kernels() {
  static const DriftKernels& k = pick();
  return k;
}

}  // namespace coopstream::kernels
