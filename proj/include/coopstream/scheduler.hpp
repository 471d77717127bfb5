#pragma once

// Download policies mapping what a user observes at a decision-making time
// to one action: download a segment, wait, or go idle.

#include <memory>
#include <string>
#include <variant>

#include "coopstream/view.hpp"

namespace coopstream {

struct Download {
  UserId owner = 0;
  int level = 1;
  bool operator==(const Download&) const = default;
};
struct Wait {
  double duration = 0.0;  // seconds until some candidate buffer has room
  bool operator==(const Wait&) const = default;
};
struct Idle {
  bool operator==(const Idle&) const = default;
};
using SchedulerDecision = std::variant<Download, Wait, Idle>;

std::string describe(const SchedulerDecision& d);

struct LyapunovConfig {
  double lambda = 100.0;
  // Go idle when the best download scores no better than idling for its
  // download time (all buffers drain, the same stalls occur, no welfare).
  bool skip_unprofitable = true;

  void validate() const;
};

struct BaselineConfig {
  double delta_th = 0.5;      // helper must be at least this full (fraction of Q)
  double Delta_th = 4.0;      // helper must lead the helped user by this many seconds
  int prediction_window = 3;  // past downloads averaged by the prediction baseline

  void validate() const;
};

// Drift-plus-penalty objective Delta - lambda * P for one candidate.
double lyapunov_objective(const SchedulerView& view, UserId owner, int level, double lambda);

SchedulerDecision lyapunov_decide(const SchedulerView& view, const LyapunovConfig& cfg);
SchedulerDecision buffer_based_decide(const SchedulerView& view, const BaselineConfig& cfg);
SchedulerDecision prediction_based_decide(const SchedulerView& view, const BaselineConfig& cfg);
// Lyapunov restricted to the decider's own video.
SchedulerDecision greedy_noncoop_decide(const SchedulerView& view, const LyapunovConfig& cfg);

// Owner chosen by the baselines' helping rule, or -1 when no candidate has
// buffer room.
UserId baseline_owner(const SchedulerView& view, const BaselineConfig& cfg);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual SchedulerDecision decide(const SchedulerView& view) const = 0;
  virtual std::string name() const = 0;
};

std::unique_ptr<Scheduler> make_lyapunov(LyapunovConfig cfg);
std::unique_ptr<Scheduler> make_buffer_based(BaselineConfig cfg);
std::unique_ptr<Scheduler> make_prediction_based(BaselineConfig cfg);
std::unique_ptr<Scheduler> make_greedy_noncoop(LyapunovConfig cfg);

}  // namespace coopstream
