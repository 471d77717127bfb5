#include "coopstream/sim.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>

namespace coopstream {

Playback advance_playback(double after_receipt, double elapsed) {
  Playback p;
  p.buffer = after_receipt > elapsed ? after_receipt - elapsed : 0.0;
  p.stall = elapsed > after_receipt ? elapsed - after_receipt : 0.0;
  return p;
}

namespace {

// Same-time events: transfers finish first, then mobility changes, then
// decisions in ascending user id.
enum class EventKind { Transfer = 0, Mobility = 1, Decision = 2 };

struct Event {
  double t;
  EventKind kind;
  UserId user;
  std::uint64_t seq;
  std::uint64_t payload;  // decision token or transfer index

  bool operator>(const Event& o) const {
    if (t != o.t) return t > o.t;
    if (kind != o.kind) return kind > o.kind;
    if (user != o.user) return user > o.user;
    return seq > o.seq;
  }
};

struct Transfer {
  UserId downloader;
  UserId owner;
  int level;
  double bitrate;
  double t_start;
  double t_end;
  bool abort;
};

struct OwnerState {
  int total = 0;
  int delivered = 0;
  int in_flight = 0;
  double last_receipt = 0.0;
  double after_receipt = 0.0;
  std::optional<double> last_bitrate;
  RebufferLog log;

  int remaining() const { return total - delivered - in_flight; }
  double buffer_at(double t) const {
    if (delivered == 0) return 0.0;
    return advance_playback(after_receipt, t - last_receipt).buffer;
  }
};

class Engine {
 public:
  Engine(const NetworkTraces& traces, std::span<const UserProfile> profiles,
         const Scheduler& scheduler, const RunConfig& cfg)
      : traces_(traces),
        profiles_(profiles),
        scheduler_(scheduler),
        cfg_(cfg),
        users_(static_cast<int>(profiles.size())),
        horizon_(traces.capacity.horizon()),
        coord_(users_, cfg.coordination) {
    if (traces.capacity.users() != users_ || traces.mobility.users() != users_) {
      throw ModelError("trace user count does not match profiles");
    }
    if (std::abs(traces.mobility.horizon() - horizon_) > kTimeEps) {
      throw ModelError("capacity and mobility horizons differ");
    }
    if (!(horizon_ > 0.0)) throw ModelError("horizon must be > 0");
    for (int n = 0; n < users_; ++n) {
      const auto& p = profiles_[static_cast<std::size_t>(n)];
      if (p.id != n) throw ModelError("profile " + std::to_string(n) + " has id " + std::to_string(p.id));
      validate_profile(p);
    }
    owners_.resize(profiles.size());
    for (int n = 0; n < users_; ++n) owners_[idx(n)].total = profiles_[idx(n)].segment_count();
    tokens_.assign(profiles.size(), 0);
    history_.resize(profiles.size());
    downloads_.resize(profiles.size());
    for (int n = 0; n < users_; ++n) downloads_[idx(n)].downloader = n;
    aborted_energy_.assign(profiles.size(), 0.0);
  }

  SimResult run() {
    if (!cfg_.force_noncoop) {
      std::vector<double> bps;
      for (int n = 0; n < users_; ++n) {
        for (const auto& piece : traces_.mobility.pieces(n)) {
          if (piece.t_from > 0.0) bps.push_back(piece.t_from);
        }
      }
      std::sort(bps.begin(), bps.end());
      bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
      for (double t : bps) push(t, EventKind::Mobility, 0, 0);
    }
    // virtual ACK at start-up
    for (int n = 0; n < users_; ++n) {
      coord_.wake(0.0, n);
      schedule_decision(n, 0.0);
    }

    while (!queue_.empty()) {
      const Event e = queue_.top();
      queue_.pop();
      switch (e.kind) {
        case EventKind::Transfer:
          finish_transfer(e.t, transfers_[e.payload]);
          break;
        case EventKind::Mobility:
          on_mobility(e.t);
          break;
        case EventKind::Decision:
          if (e.payload == tokens_[idx(e.user)]) decide(e.user, e.t);
          break;
      }
    }
    return collect();
  }

 private:
  static std::size_t idx(UserId n) { return static_cast<std::size_t>(n); }
  const UserProfile& profile(UserId n) const { return profiles_[idx(n)]; }

  void push(double t, EventKind kind, UserId user, std::uint64_t payload) {
    queue_.push(Event{t, kind, user, next_seq_++, payload});
  }

  void schedule_decision(UserId n, double t) {
    ++tokens_[idx(n)];
    if (t >= horizon_ - kTimeEps) return;
    push(t, EventKind::Decision, n, tokens_[idx(n)]);
  }

  bool needy(UserId u) const {
    return profile(u).is_video_user && owners_[idx(u)].remaining() > 0;
  }

  std::vector<UserId> group(UserId n, double t) const {
    if (cfg_.force_noncoop) return {n};
    std::vector<UserId> ids;
    for (int u = 0; u < users_; ++u) {
      if (encountered(traces_.mobility, n, u, t)) ids.push_back(u);
    }
    return ids;
  }

  SchedulerView make_view(UserId n, double t, double capacity,
                          const std::vector<UserId>& ids) const {
    SchedulerView v;
    v.decider = n;
    v.clock = t;
    v.capacity = capacity;
    v.throughput_history = history_[idx(n)];
    for (UserId u : ids) {
      const auto& o = owners_[idx(u)];
      ViewUser vu;
      vu.id = u;
      vu.profile = &profile(u);
      vu.buffer = o.buffer_at(t);
      vu.last_bitrate = o.last_bitrate;
      vu.remaining = o.remaining();
      vu.in_flight = o.in_flight;
      vu.started = o.delivered > 0;
      vu.all_received = o.delivered == o.total;
      v.users.push_back(vu);
    }
    return v;
  }

  [[noreturn]] void infeasible(UserId n, double t, const SchedulerDecision& d,
                               const std::string& why) const {
    std::ostringstream os;
    os << "user " << n << " at t=" << t << ": " << describe(d) << " infeasible: " << why;
    throw SimError(os.str());
  }

  void decide(UserId n, double t) {
    const double capacity = traces_.capacity.value_at(n, t);
    if (capacity <= 0.0) {
      if (auto nb = traces_.capacity.next_breakpoint(n, t)) schedule_decision(n, *nb);
      return;
    }
    const auto ids = group(n, t);
    const int others = static_cast<int>(ids.size()) - 1;
    int needy_others = 0;
    for (UserId u : ids) {
      if (u != n && needy(u)) ++needy_others;
    }
    coord_.on_decision(t, n, others, needy_others, needy(n));

    const SchedulerView view = make_view(n, t, capacity, ids);
    const SchedulerDecision d = scheduler_.decide(view);

    if (const auto* w = std::get_if<Wait>(&d)) {
      if (!(w->duration >= 0.0)) infeasible(n, t, d, "negative wait");
      schedule_decision(n, t + std::max(w->duration, kMinWait));
      return;
    }
    if (std::holds_alternative<Idle>(d)) {
      if (needy(n)) {
        // declined its own video for now; never sleeps on itself
        double next = t + cfg_.coordination.ready_retry;
        if (auto nb = traces_.capacity.next_breakpoint(n, t)) next = std::min(next, *nb);
        schedule_decision(n, next);
        return;
      }
      const double next = coord_.on_idle(t, n, others);
      if (next >= 0.0) schedule_decision(n, next);
      return;
    }
    start_download(n, t, view, std::get<Download>(d), d);
  }

  void start_download(UserId n, double t, const SchedulerView& view, const Download& dl,
                      const SchedulerDecision& d) {
    const ViewUser* owner = view.find(dl.owner);
    if (owner == nullptr) infeasible(n, t, d, "owner not encountered (C.3)");
    if (!owner->is_video_user()) infeasible(n, t, d, "owner has no video");
    if (owner->remaining <= 0) infeasible(n, t, d, "no unreserved segment left");
    const UserProfile& op = profile(dl.owner);
    if (!op.ladder.contains_level(dl.level)) infeasible(n, t, d, "level out of range");
    if (!owner->has_room()) infeasible(n, t, d, "owner buffer would overflow (C.4)");

    auto& os = owners_[idx(dl.owner)];
    ++os.in_flight;

    const double volume = segment_volume(op, dl.level);
    const auto end = download_end_time(traces_.capacity, n, t, volume);
    const double limit = end ? std::min(*end, horizon_) : horizon_;
    const auto sep = separation_time(traces_.mobility, n, dl.owner, t, limit);

    Transfer tr{n, dl.owner, dl.level, op.ladder.at(dl.level), t, 0.0, false};
    if (sep) {
      tr.t_end = *sep;
      tr.abort = true;
    } else if (!end || *end > horizon_ + kTimeEps) {
      // cannot finish before the horizon: reserved, never delivered, not charged
      ++discarded_;
      return;
    } else {
      tr.t_end = *end;
    }
    transfers_.push_back(tr);
    push(tr.t_end, EventKind::Transfer, n, transfers_.size() - 1);
  }

  void finish_transfer(double t, const Transfer& tr) {
    auto& os = owners_[idx(tr.owner)];
    --os.in_flight;
    if (tr.abort) {
      const UserProfile& dp = profile(tr.downloader);
      const double moved = integrate_capacity(traces_.capacity, tr.downloader, tr.t_start, t);
      const double energy = dp.c_time * (t - tr.t_start) + dp.c_data * moved;
      aborted_energy_[idx(tr.downloader)] += energy;
      aborted_.push_back({tr.downloader, tr.owner, tr.level, tr.t_start, t, energy});
      schedule_decision(tr.downloader, t);
      // the segment is back in the pool: wake sleepers around its owner
      for (int w = 0; w < users_; ++w) {
        if (w == tr.downloader || !coord_.asleep(w)) continue;
        if (encountered(traces_.mobility, w, tr.owner, t) && !cfg_.force_noncoop) {
          coord_.wake(t, w);
          schedule_decision(w, t);
        } else if (w == tr.owner) {
          coord_.wake(t, w);
          schedule_decision(w, t);
        }
      }
      return;
    }

    const UserProfile& op = profile(tr.owner);
    if (os.delivered == 0) {
      os.after_receipt = op.segment_len;
    } else {
      const Playback p = advance_playback(os.after_receipt, t - os.last_receipt);
      if (p.stall > 0.0) os.log.push_back({os.delivered + 1, p.stall});
      os.after_receipt = p.buffer + op.segment_len;
    }
    os.last_receipt = t;
    ++os.delivered;
    os.last_bitrate = tr.bitrate;

    DownloadRecord rec;
    rec.downloader = tr.downloader;
    rec.owner = tr.owner;
    rec.level = tr.level;
    rec.bitrate = tr.bitrate;
    rec.t_start = tr.t_start;
    rec.t_end = t;
    rec.owner_seq_no = os.delivered;
    downloads_[idx(tr.downloader)].records.push_back(rec);
    if (t > tr.t_start) {
      history_[idx(tr.downloader)].push_back(tr.bitrate * op.segment_len / (t - tr.t_start));
    }
    schedule_decision(tr.downloader, t);
  }

  void on_mobility(double t) {
    for (int w = 0; w < users_; ++w) {
      if (!coord_.asleep(w)) continue;
      const auto ids = group(w, t);
      if (std::any_of(ids.begin(), ids.end(), [&](UserId u) { return needy(u); })) {
        coord_.wake(t, w);
        schedule_decision(w, t);
      }
    }
  }

  SimResult collect() const {
    SimResult r;
    r.horizon = horizon_;
    r.downloads = downloads_;
    r.receives = build_receive_sequences(downloads_, users_);
    r.aborted = aborted_;
    r.discarded_at_horizon = discarded_;
    r.messages = coord_.stats();
    r.ready_timeline = coord_.ready_timeline();
    for (int n = 0; n < users_; ++n) {
      const auto i = idx(n);
      r.rebuffer_logs.push_back(owners_[i].log);
      UserMetrics m;
      m.welfare = user_welfare(r.downloads[i], r.receives[i], profile(n), profiles_);
      m.welfare.energy_cell += aborted_energy_[i];
      m.welfare.compose();
      const auto& rx = r.receives[i].records;
      m.segments_received = static_cast<int>(rx.size());
      if (!rx.empty()) {
        double sum = 0.0;
        for (const auto& rec : rx) sum += rec.bitrate;
        m.avg_bitrate = sum / static_cast<double>(rx.size());
      }
      for (const auto& s : owners_[i].log) m.rebuf_s += s.duration;
      for (const auto& rec : r.downloads[i].records) {
        if (rec.owner != n) ++m.downloads_for_others;
      }
      r.social_welfare += m.welfare.welfare;
      r.users.push_back(m);
    }
    return r;
  }

  static constexpr double kMinWait = 1e-6;

  const NetworkTraces& traces_;
  std::span<const UserProfile> profiles_;
  const Scheduler& scheduler_;
  RunConfig cfg_;
  int users_;
  double horizon_;
  CoordinationTracker coord_;

  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t next_seq_ = 0;
  std::vector<std::uint64_t> tokens_;
  std::vector<OwnerState> owners_;
  std::vector<std::vector<double>> history_;
  std::vector<DownloadSequence> downloads_;
  std::vector<Transfer> transfers_;
  std::vector<AbortedDownload> aborted_;
  std::vector<double> aborted_energy_;
  int discarded_ = 0;
};

}  // namespace

SimResult run(const NetworkTraces& traces, std::span<const UserProfile> profiles,
              const Scheduler& scheduler, const RunConfig& cfg) {
  return Engine(traces, profiles, scheduler, cfg).run();
}

nlohmann::json to_json(const SimResult& r) {
  nlohmann::json users = nlohmann::json::array();
  for (std::size_t n = 0; n < r.users.size(); ++n) {
    const auto& m = r.users[n];
    const auto& w = m.welfare;
    users.push_back({{"user", n},
                     {"welfare",
                      {{"value", w.value},
                       {"loss_qdeg", w.loss_qdeg},
                       {"loss_rebuf", w.loss_rebuf},
                       {"energy_cell", w.energy_cell},
                       {"energy_wifi", w.energy_wifi},
                       {"utility", w.utility},
                       {"cost", w.cost},
                       {"welfare", w.welfare}}},
                     {"avg_bitrate_mbps", m.avg_bitrate},
                     {"rebuf_s", m.rebuf_s},
                     {"segments_received", m.segments_received},
                     {"downloads_for_others", m.downloads_for_others}});
  }
  return {{"horizon", r.horizon},
          {"social_welfare", r.social_welfare},
          {"users", users},
          {"aborted_downloads", r.aborted.size()},
          {"discarded_at_horizon", r.discarded_at_horizon},
          {"messages",
           {{"ready", r.messages.ready},
            {"ack", r.messages.ack},
            {"sleeps", r.messages.sleeps},
            {"awakes", r.messages.awakes}}}};
}

void write_records_csv(std::ostream& out, const SimResult& r) {
  std::vector<DownloadRecord> all;
  for (const auto& seq : r.downloads) all.insert(all.end(), seq.records.begin(), seq.records.end());
  std::sort(all.begin(), all.end(), [](const DownloadRecord& a, const DownloadRecord& b) {
    if (a.t_start != b.t_start) return a.t_start < b.t_start;
    return a.downloader < b.downloader;
  });
  out << "downloader,owner,seq_no,level,bitrate,t_start,t_end\n";
  for (const auto& rec : all) {
    out << rec.downloader << ',' << rec.owner << ',' << rec.owner_seq_no << ',' << rec.level
        << ',' << format_double(rec.bitrate) << ',' << format_double(rec.t_start) << ','
        << format_double(rec.t_end) << '\n';
  }
}

}  // namespace coopstream
