#pragma once

// Message accounting for the READY/ACK exchange inside a cooperative group,
// with Sleep/Awake of downloaders that find no one to help. The exchange
// itself is abstract: only counts and timing are modeled.

#include <cstdint>
#include <utility>
#include <vector>

#include "coopstream/model.hpp"

namespace coopstream {

struct MessageStats {
  std::int64_t ready = 0;
  std::int64_t ack = 0;
  std::int64_t sleeps = 0;
  std::int64_t awakes = 0;
};

struct CoordinationConfig {
  double sleep_window = 10.0;  // seconds without an ACK before sleeping
  double ready_retry = 1.0;    // re-broadcast period while idle but awake
  bool sleep_enabled = true;

  void validate() const;
};

class CoordinationTracker {
 public:
  CoordinationTracker(int users, CoordinationConfig cfg);

  // A decision by `n` at t with `others` co-located users, `needy` of which
  // still have unreserved segments; `self_needy` when n's own video does.
  void on_decision(double t, UserId n, int others, int needy, bool self_needy);

  // n found nothing to do. Returns a negative value when n goes to sleep,
  // else the time of its next READY poll.
  double on_idle(double t, UserId n, int others);

  // Virtual or overheard ACK. Returns true if n was asleep.
  bool wake(double t, UserId n);

  bool asleep(UserId n) const { return asleep_[static_cast<std::size_t>(n)]; }
  const MessageStats& stats() const { return stats_; }
  // (time, cumulative READY count) after every READY.
  const std::vector<std::pair<double, std::int64_t>>& ready_timeline() const {
    return timeline_;
  }

 private:
  CoordinationConfig cfg_;
  MessageStats stats_;
  std::vector<double> last_ack_;
  std::vector<bool> asleep_;
  std::vector<std::pair<double, std::int64_t>> timeline_;
};

}  // namespace coopstream
