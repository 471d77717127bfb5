#include "coopstream/qoe.hpp"

#include <algorithm>
#include <cmath>

namespace coopstream {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }

const UserProfile& owner_profile(std::span<const UserProfile> profiles, UserId u) {
  if (u < 0 || static_cast<std::size_t>(u) >= profiles.size()) {
    throw ModelError("record owner " + std::to_string(u) + " has no profile");
  }
  return profiles[static_cast<std::size_t>(u)];
}

}  // namespace

double value_fn(double theta, double bitrate) { return std::log1p(theta * bitrate); }

double total_value(const ReceiveSequence& seq, const UserProfile& p) {
  double v = 0.0;
  for (const auto& r : seq.records) v += value_fn(p.theta, r.bitrate) * p.segment_len;
  return v;
}

double qdeg_loss(const ReceiveSequence& seq, const UserProfile& p) {
  double loss = 0.0;
  for (std::size_t k = 1; k < seq.records.size(); ++k) {
    loss += p.phi_qdeg * pos(seq.records[k - 1].bitrate - seq.records[k].bitrate);
  }
  return loss;
}

std::pair<double, RebufferLog> rebuf_loss(const ReceiveSequence& seq, const UserProfile& p) {
  RebufferLog log;
  double total = 0.0;
  double q = 0.0;
  for (std::size_t k = 0; k < seq.records.size(); ++k) {
    const auto& r = seq.records[k];
    if (k == 0) {
      q = p.segment_len;
      continue;
    }
    const double gap = r.t_end - seq.records[k - 1].t_end;
    const double stall = pos(gap - q);
    if (stall > 0.0) {
      log.push_back({r.owner_seq_no, stall});
      total += p.phi_rebuf * stall;
    }
    q = pos(q - gap) + p.segment_len;
  }
  return {total, log};
}

std::vector<double> buffer_trajectory(const ReceiveSequence& seq, const UserProfile& p) {
  std::vector<double> out;
  out.reserve(seq.records.size());
  double q = 0.0;
  for (std::size_t k = 0; k < seq.records.size(); ++k) {
    if (k == 0) {
      q = p.segment_len;
    } else {
      q = pos(q - (seq.records[k].t_end - seq.records[k - 1].t_end)) + p.segment_len;
    }
    out.push_back(q);
  }
  return out;
}

double energy_cell(const DownloadSequence& seq, const UserProfile& p,
                   std::span<const UserProfile> profiles) {
  double e = 0.0;
  for (const auto& r : seq.records) {
    const double volume = r.bitrate * owner_profile(profiles, r.owner).segment_len;
    e += p.c_time * (r.t_end - r.t_start) + p.c_data * volume;
  }
  return e;
}

double energy_wifi(const DownloadSequence& seq, const UserProfile& p,
                   std::span<const UserProfile> profiles) {
  double e = 0.0;
  for (const auto& r : seq.records) {
    if (r.owner == seq.downloader) continue;
    e += p.w_data * r.bitrate * owner_profile(profiles, r.owner).segment_len;
  }
  return e;
}

WelfareBreakdown user_welfare(const DownloadSequence& dl, const ReceiveSequence& rx,
                              const UserProfile& p, std::span<const UserProfile> profiles) {
  WelfareBreakdown w;
  w.value = total_value(rx, p);
  w.loss_qdeg = qdeg_loss(rx, p);
  w.loss_rebuf = rebuf_loss(rx, p).first;
  w.energy_cell = energy_cell(dl, p, profiles);
  w.energy_wifi = energy_wifi(dl, p, profiles);
  w.compose();
  return w;
}

double social_welfare(const std::vector<DownloadSequence>& downloads,
                      std::span<const UserProfile> profiles) {
  const int users = static_cast<int>(profiles.size());
  const auto rx = build_receive_sequences(downloads, users);
  std::vector<DownloadSequence> dl(profiles.size());
  for (int n = 0; n < users; ++n) dl[static_cast<std::size_t>(n)].downloader = n;
  for (const auto& seq : downloads) {
    if (seq.downloader < 0 || seq.downloader >= users) {
      throw ModelError("downloader " + std::to_string(seq.downloader) + " has no profile");
    }
    auto& dst = dl[static_cast<std::size_t>(seq.downloader)].records;
    dst.insert(dst.end(), seq.records.begin(), seq.records.end());
  }
  double total = 0.0;
  for (int n = 0; n < users; ++n) {
    const auto i = static_cast<std::size_t>(n);
    total += user_welfare(dl[i], rx[i], profiles[i], profiles).welfare;
  }
  return total;
}

double estimated_download_time(const SchedulerView& view, const UserProfile& owner, int level) {
  return segment_volume(owner, level) / view.capacity;
}

double decision_welfare(const SchedulerView& view, UserId owner, int level) {
  const ViewUser* recv = view.find(owner);
  if (recv == nullptr) throw ModelError("owner " + std::to_string(owner) + " not in view");
  const UserProfile& up = *recv->profile;
  const double rate = up.ladder.at(level);
  const double volume = rate * up.segment_len;
  const double gamma = volume / view.capacity;
  const UserProfile& dp = *view.self().profile;

  double cost = dp.c_time * gamma + dp.c_data * volume;
  if (owner != view.decider) cost += dp.w_data * volume;

  double utility = value_fn(up.theta, rate) * up.segment_len;
  if (recv->last_bitrate) utility -= up.phi_qdeg * pos(*recv->last_bitrate - rate);
  if (recv->can_rebuffer()) utility -= up.phi_rebuf * pos(gamma - recv->buffer);

  for (const auto& m : view.users) {
    if (m.id == owner || !m.can_rebuffer()) continue;
    utility -= m.profile->phi_rebuf * pos(gamma - m.buffer);
  }
  return utility - cost;
}

}  // namespace coopstream
