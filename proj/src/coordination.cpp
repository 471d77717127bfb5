#include "coopstream/coordination.hpp"

#include <algorithm>

namespace coopstream {

void CoordinationConfig::validate() const {
  if (!(sleep_window > 0.0)) throw ModelError("sleep_window must be > 0");
  if (!(ready_retry > 0.0)) throw ModelError("ready_retry must be > 0");
}

CoordinationTracker::CoordinationTracker(int users, CoordinationConfig cfg)
    : cfg_(cfg),
      last_ack_(static_cast<std::size_t>(users), 0.0),
      asleep_(static_cast<std::size_t>(users), false) {
  cfg_.validate();
}

void CoordinationTracker::on_decision(double t, UserId n, int others, int needy,
                                      bool self_needy) {
  if (others > 0) {
    ++stats_.ready;
    timeline_.emplace_back(t, stats_.ready);
  }
  stats_.ack += needy;
  if (needy > 0 || self_needy) last_ack_[static_cast<std::size_t>(n)] = t;
}

double CoordinationTracker::on_idle(double t, UserId n, int others) {
  const auto i = static_cast<std::size_t>(n);
  const bool quiet = t - last_ack_[i] >= cfg_.sleep_window - kTimeEps;
  if (others == 0 || (cfg_.sleep_enabled && quiet)) {
    asleep_[i] = true;
    ++stats_.sleeps;
    return -1.0;
  }
  if (!cfg_.sleep_enabled) return t + cfg_.ready_retry;
  return std::min(t + cfg_.ready_retry, last_ack_[i] + cfg_.sleep_window);
}

bool CoordinationTracker::wake(double t, UserId n) {
  const auto i = static_cast<std::size_t>(n);
  last_ack_[i] = t;
  if (!asleep_[i]) return false;
  asleep_[i] = false;
  ++stats_.awakes;
  return true;
}

}  // namespace coopstream
