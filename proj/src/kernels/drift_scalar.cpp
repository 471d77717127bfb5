#include "coopstream/kernels.hpp"

namespace coopstream::kernels {

double drain_drift_scalar(const double* cap, const double* buf, std::size_t n, double gamma) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double after = buf[i] > gamma ? buf[i] - gamma : 0.0;
    const double a = cap[i] - after;
    const double b = cap[i] - buf[i];
    sum += 0.5 * (a * a - b * b);
  }
  return sum;
}

double stall_scalar(const double* buf, const double* weight, std::size_t n, double gamma) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gamma > buf[i]) sum += weight[i] * (gamma - buf[i]);
  }
  return sum;
}

}  // namespace coopstream::kernels
