#include "coopstream/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coopstream/kernels.hpp"
#include "coopstream/qoe.hpp"

namespace coopstream {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

double half_sq_diff(double cap, double before, double after) {
  const double a = cap - after;
  const double b = cap - before;
  return 0.5 * (a * a - b * b);
}

double received_buffer(const ViewUser& u, double gamma) {
  return std::min(u.profile->buffer_cap, pos(u.buffer - gamma) + u.profile->segment_len);
}

// Wait guard shared by every policy: nullopt when some candidate has room.
std::optional<SchedulerDecision> guard(const SchedulerView& view) {
  bool any = false;
  double wait = std::numeric_limits<double>::infinity();
  for (const auto& m : view.users) {
    if (!m.candidate()) continue;
    any = true;
    if (m.has_room()) return std::nullopt;
    wait = std::min(wait, m.room_deficit());
  }
  if (!any || view.capacity <= 0.0) return Idle{};
  return Wait{wait};
}

// Structure-of-arrays copy of the view for the group reductions.
struct GroupColumns {
  std::vector<double> drift_cap, drift_buf;
  std::vector<double> stall_buf, stall_weight;

  explicit GroupColumns(const SchedulerView& view) {
    for (const auto& m : view.users) {
      if (m.active()) {
        drift_cap.push_back(m.profile->buffer_cap);
        drift_buf.push_back(m.buffer);
      }
      if (m.can_rebuffer()) {
        stall_buf.push_back(m.buffer);
        stall_weight.push_back(m.profile->phi_rebuf);
      }
    }
  }
};

}  // namespace

std::string describe(const SchedulerDecision& d) {
  std::ostringstream os;
  if (const auto* dl = std::get_if<Download>(&d)) {
    os << "Download(owner=" << dl->owner << ", level=" << dl->level << ")";
  } else if (const auto* w = std::get_if<Wait>(&d)) {
    os << "Wait(" << w->duration << ")";
  } else {
    os << "Idle";
  }
  return os.str();
}

void LyapunovConfig::validate() const {
  if (!(lambda >= 0.0)) throw ModelError("lambda must be >= 0");
}

void BaselineConfig::validate() const {
  if (!(delta_th >= 0.0 && delta_th <= 1.0)) throw ModelError("delta_th must be in [0, 1]");
  if (!(Delta_th >= 0.0)) throw ModelError("Delta_th must be >= 0");
  if (prediction_window < 1) throw ModelError("prediction_window must be >= 1");
}

double lyapunov_objective(const SchedulerView& view, UserId owner, int level, double lambda) {
  const ViewUser* recv = view.find(owner);
  if (recv == nullptr) throw ModelError("owner " + std::to_string(owner) + " not in view");
  const double gamma = estimated_download_time(view, *recv->profile, level);
  double drift = 0.0;
  for (const auto& m : view.users) {
    if (!m.active()) continue;
    const double after = m.id == owner ? received_buffer(m, gamma) : pos(m.buffer - gamma);
    drift += half_sq_diff(m.profile->buffer_cap, m.buffer, after);
  }
  return drift - lambda * decision_welfare(view, owner, level);
}

SchedulerDecision lyapunov_decide(const SchedulerView& view, const LyapunovConfig& cfg) {
  if (auto g = guard(view)) return *g;

  const auto& k = kernels::active_kernels();
  const GroupColumns cols(view);
  const UserProfile& dp = *view.self().profile;

  double best = std::numeric_limits<double>::infinity();
  double best_gamma = 0.0;
  Download choice;
  for (const auto& u : view.users) {
    if (!u.candidate() || !u.has_room()) continue;
    const UserProfile& up = *u.profile;
    for (int z = 1; z <= up.ladder.size(); ++z) {
      const double rate = up.ladder.at(z);
      const double volume = rate * up.segment_len;
      const double gamma = volume / view.capacity;

      double drift = k.drain_drift(cols.drift_cap.data(), cols.drift_buf.data(),
                                   cols.drift_cap.size(), gamma);
      drift -= half_sq_diff(up.buffer_cap, u.buffer, pos(u.buffer - gamma));
      drift += half_sq_diff(up.buffer_cap, u.buffer, received_buffer(u, gamma));

      double welfare = value_fn(up.theta, rate) * up.segment_len;
      if (u.last_bitrate) welfare -= up.phi_qdeg * pos(*u.last_bitrate - rate);
      // covers the receiver's own stall term too: both use [gamma - q]^+
      welfare -= k.stall(cols.stall_buf.data(), cols.stall_weight.data(),
                         cols.stall_buf.size(), gamma);
      welfare -= dp.c_time * gamma + dp.c_data * volume;
      if (u.id != view.decider) welfare -= dp.w_data * volume;

      const double phi = drift - cfg.lambda * welfare;
      if (phi < best) {
        best = phi;
        best_gamma = gamma;
        choice = Download{u.id, z};
      }
    }
  }
  if (cfg.skip_unprofitable) {
    // idling for the same time: every buffer drains, stalls still happen
    const double idle =
        k.drain_drift(cols.drift_cap.data(), cols.drift_buf.data(), cols.drift_cap.size(),
                      best_gamma) +
        cfg.lambda * k.stall(cols.stall_buf.data(), cols.stall_weight.data(),
                             cols.stall_buf.size(), best_gamma);
    if (best >= idle) return Idle{};
  }
  return choice;
}

UserId baseline_owner(const SchedulerView& view, const BaselineConfig& cfg) {
  const ViewUser* neediest = nullptr;
  for (const auto& m : view.users) {
    if (!m.candidate() || !m.has_room()) continue;
    if (neediest == nullptr || m.buffer < neediest->buffer) neediest = &m;
  }
  if (neediest == nullptr) return -1;

  const ViewUser& self = view.self();
  if (!self.candidate() || !self.has_room()) return neediest->id;
  if (neediest->id == self.id) return self.id;
  const bool full_enough = self.buffer >= cfg.delta_th * self.profile->buffer_cap;
  const bool leads = self.buffer - neediest->buffer >= cfg.Delta_th;
  return full_enough && leads ? neediest->id : self.id;
}

SchedulerDecision buffer_based_decide(const SchedulerView& view, const BaselineConfig& cfg) {
  if (auto g = guard(view)) return *g;
  const UserId owner = baseline_owner(view, cfg);
  const ViewUser& u = *view.find(owner);
  const int levels = u.profile->ladder.size();
  const double fill = u.buffer / u.profile->buffer_cap;
  const int z = static_cast<int>(std::ceil(fill * levels - kTimeEps));
  return Download{owner, std::clamp(z, 1, levels)};
}

SchedulerDecision prediction_based_decide(const SchedulerView& view, const BaselineConfig& cfg) {
  if (auto g = guard(view)) return *g;
  const UserId owner = baseline_owner(view, cfg);
  const ViewUser& u = *view.find(owner);

  double predicted = view.capacity;
  const auto& hist = view.throughput_history;
  if (!hist.empty()) {
    const std::size_t w = std::min(hist.size(), static_cast<std::size_t>(cfg.prediction_window));
    double sum = 0.0;
    for (std::size_t i = hist.size() - w; i < hist.size(); ++i) sum += hist[i];
    predicted = sum / static_cast<double>(w);
  }
  int z = 1;
  const auto& ladder = u.profile->ladder;
  for (int l = 1; l <= ladder.size(); ++l) {
    if (ladder.at(l) <= predicted + kTimeEps) z = l;
  }
  return Download{owner, z};
}

SchedulerDecision greedy_noncoop_decide(const SchedulerView& view, const LyapunovConfig& cfg) {
  SchedulerView own = view;
  own.users.clear();
  own.users.push_back(view.self());
  return lyapunov_decide(own, cfg);
}

namespace {

class LyapunovScheduler final : public Scheduler {
 public:
  explicit LyapunovScheduler(LyapunovConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  SchedulerDecision decide(const SchedulerView& v) const override { return lyapunov_decide(v, cfg_); }
  std::string name() const override { return "lyapunov"; }

 private:
  LyapunovConfig cfg_;
};

class GreedyScheduler final : public Scheduler {
 public:
  explicit GreedyScheduler(LyapunovConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  SchedulerDecision decide(const SchedulerView& v) const override {
    return greedy_noncoop_decide(v, cfg_);
  }
  std::string name() const override { return "greedy-noncoop"; }

 private:
  LyapunovConfig cfg_;
};

class BufferScheduler final : public Scheduler {
 public:
  explicit BufferScheduler(BaselineConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  SchedulerDecision decide(const SchedulerView& v) const override {
    return buffer_based_decide(v, cfg_);
  }
  std::string name() const override { return "buffer"; }

 private:
  BaselineConfig cfg_;
};

class PredictionScheduler final : public Scheduler {
 public:
  explicit PredictionScheduler(BaselineConfig cfg) : cfg_(cfg) { cfg_.validate(); }
  SchedulerDecision decide(const SchedulerView& v) const override {
    return prediction_based_decide(v, cfg_);
  }
  std::string name() const override { return "prediction"; }

 private:
  BaselineConfig cfg_;
};

}  // namespace

std::unique_ptr<Scheduler> make_lyapunov(LyapunovConfig cfg) {
  return std::make_unique<LyapunovScheduler>(cfg);
}
std::unique_ptr<Scheduler> make_buffer_based(BaselineConfig cfg) {
  return std::make_unique<BufferScheduler>(cfg);
}
std::unique_ptr<Scheduler> make_prediction_based(BaselineConfig cfg) {
  return std::make_unique<PredictionScheduler>(cfg);
}
std::unique_ptr<Scheduler> make_greedy_noncoop(LyapunovConfig cfg) {
  return std::make_unique<GreedyScheduler>(cfg);
}

}  // namespace coopstream
