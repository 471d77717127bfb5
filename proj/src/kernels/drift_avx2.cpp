#include "coopstream/kernels.hpp"

#include <immintrin.h>

namespace coopstream::kernels {

namespace {

__attribute__((target("avx2,fma"))) double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

__attribute__((target("avx2,fma")))
double drain_drift_avx2(const double* cap, const double* buf, std::size_t n, double gamma) {
  const __m256d g = _mm256_set1_pd(gamma);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d c = _mm256_loadu_pd(cap + i);
    const __m256d q = _mm256_loadu_pd(buf + i);
    const __m256d after = _mm256_max_pd(_mm256_sub_pd(q, g), zero);
    const __m256d a = _mm256_sub_pd(c, after);
    const __m256d b = _mm256_sub_pd(c, q);
    // a^2 - b^2 = (a - b)(a + b), exact enough and one multiply fewer
    const __m256d d = _mm256_mul_pd(_mm256_sub_pd(a, b), _mm256_add_pd(a, b));
    acc = _mm256_fmadd_pd(half, d, acc);
  }
  double sum = hsum(acc);
  return sum + drain_drift_scalar(cap + i, buf + i, n - i, gamma);
}

__attribute__((target("avx2,fma")))
double stall_avx2(const double* buf, const double* weight, std::size_t n, double gamma) {
  const __m256d g = _mm256_set1_pd(gamma);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = zero;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d q = _mm256_loadu_pd(buf + i);
    const __m256d w = _mm256_loadu_pd(weight + i);
    acc = _mm256_fmadd_pd(w, _mm256_max_pd(_mm256_sub_pd(g, q), zero), acc);
  }
  return hsum(acc) + stall_scalar(buf + i, weight + i, n - i, gamma);
}

}  // namespace coopstream::kernels
