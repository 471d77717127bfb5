#include "coopstream/slotted.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "coopstream/qoe.hpp"

namespace coopstream {

namespace {

double pos(double x) { return x > 0.0 ? x : 0.0; }
constexpr double kTol = 1e-9;

}  // namespace

SlottedInstance SlottedInstance::from_traces(const NetworkTraces& traces,
                                             std::vector<UserProfile> profiles,
                                             bool force_noncoop) {
  const double horizon = traces.capacity.horizon();
  const double whole = std::round(horizon);
  if (std::abs(horizon - whole) > kTol || whole < 1.0) {
    throw ModelError("slotted instance needs an integer horizon >= 1");
  }
  const int users = static_cast<int>(profiles.size());
  if (traces.capacity.users() != users || traces.mobility.users() != users) {
    throw ModelError("trace user count does not match profiles");
  }
  for (const auto& p : profiles) validate_profile(p);

  SlottedInstance inst;
  inst.profiles = std::move(profiles);
  inst.slots = static_cast<int>(whole);
  inst.capacity.assign(static_cast<std::size_t>(users),
                       std::vector<double>(static_cast<std::size_t>(inst.slots)));
  inst.together.assign(static_cast<std::size_t>(inst.slots),
                       std::vector<std::vector<char>>(
                           static_cast<std::size_t>(users),
                           std::vector<char>(static_cast<std::size_t>(users), 0)));
  for (int t = 0; t < inst.slots; ++t) {
    for (int n = 0; n < users; ++n) {
      inst.capacity[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] =
          integrate_capacity(traces.capacity, n, t, t + 1.0);
      for (int m = 0; m < users; ++m) {
        const bool ok = n == m || (!force_noncoop &&
                                   encountered_throughout(traces.mobility, n, m, t, t + 1.0));
        inst.together[static_cast<std::size_t>(t)][static_cast<std::size_t>(n)]
                     [static_cast<std::size_t>(m)] = ok ? 1 : 0;
      }
    }
  }
  return inst;
}

SlottedInstance SlottedInstance::refined(int halvings) const {
  if (halvings < 0) throw ModelError("refinement depth must be >= 0");
  SlottedInstance out = *this;
  const double scale = std::ldexp(1.0, -halvings);
  for (auto& p : out.profiles) p.segment_len *= scale;
  return out;
}

void SlottedPlan::normalize() {
  std::sort(entries.begin(), entries.end(), [](const PlanEntry& a, const PlanEntry& b) {
    return std::tie(a.slot, a.downloader, a.owner, a.level) <
           std::tie(b.slot, b.downloader, b.owner, b.level);
  });
  std::vector<PlanEntry> merged;
  for (const auto& e : entries) {
    if (!merged.empty()) {
      auto& last = merged.back();
      if (last.slot == e.slot && last.downloader == e.downloader && last.owner == e.owner &&
          last.level == e.level) {
        last.count += e.count;
        continue;
      }
    }
    merged.push_back(e);
  }
  std::erase_if(merged, [](const PlanEntry& e) { return e.count == 0; });
  entries = std::move(merged);
}

std::vector<std::string> plan_violations(const SlottedPlan& plan, const SlottedInstance& inst) {
  std::vector<std::string> bad;
  const int users = inst.users();
  const auto U = static_cast<std::size_t>(users);
  const auto T = static_cast<std::size_t>(inst.slots);
  if (plan.slots != inst.slots) bad.push_back("plan slot count differs from the instance");

  std::vector<std::vector<double>> moved(U, std::vector<double>(T, 0.0));
  std::vector<std::vector<int>> received(U, std::vector<int>(T, 0));
  for (const auto& e : plan.entries) {
    std::string tag = "entry (n=" + std::to_string(e.downloader) + ", m=" +
                      std::to_string(e.owner) + ", z=" + std::to_string(e.level) +
                      ", slot=" + std::to_string(e.slot) + ")";
    if (e.count < 0) {
      bad.push_back(tag + ": negative count");
      continue;
    }
    if (e.downloader < 0 || e.downloader >= users || e.owner < 0 || e.owner >= users ||
        e.slot < 0 || e.slot >= inst.slots) {
      bad.push_back(tag + ": index out of range");
      continue;
    }
    const UserProfile& op = inst.profiles[static_cast<std::size_t>(e.owner)];
    if (!op.ladder.contains_level(e.level)) {
      bad.push_back(tag + ": level out of range");
      continue;
    }
    if (e.count == 0) continue;
    if (!op.is_video_user) bad.push_back(tag + ": owner has no video");
    if (!inst.linked(e.slot, e.downloader, e.owner)) {
      bad.push_back(tag + ": users not encountered throughout the slot");
    }
    moved[static_cast<std::size_t>(e.downloader)][static_cast<std::size_t>(e.slot)] +=
        e.count * segment_volume(op, e.level);
    received[static_cast<std::size_t>(e.owner)][static_cast<std::size_t>(e.slot)] += e.count;
  }
  for (std::size_t n = 0; n < U; ++n) {
    for (std::size_t t = 0; t < T; ++t) {
      if (moved[n][t] > inst.capacity[n][t] + kTol) {
        bad.push_back("downloader " + std::to_string(n) + " slot " + std::to_string(t) +
                      ": volume exceeds slot capacity");
      }
    }
  }
  for (std::size_t m = 0; m < U; ++m) {
    const UserProfile& p = inst.profiles[m];
    double q = 0.0;
    int total = 0;
    for (std::size_t t = 0; t < T; ++t) {
      q = pos(q - 1.0) + received[m][t] * p.segment_len;
      total += received[m][t];
      if (q > p.buffer_cap + kTol) {
        bad.push_back("owner " + std::to_string(m) + " slot " + std::to_string(t) +
                      ": buffer exceeds cap");
      }
    }
    if (total > p.segment_count()) {
      bad.push_back("owner " + std::to_string(m) + ": more segments than the video holds");
    }
  }
  return bad;
}

SlottedEvaluation slotted_welfare(const SlottedPlan& plan, const SlottedInstance& inst) {
  const auto bad = plan_violations(plan, inst);
  if (!bad.empty()) throw ModelError("infeasible plan: " + bad.front());

  const auto U = static_cast<std::size_t>(inst.users());
  const auto T = static_cast<std::size_t>(inst.slots);
  // per owner and slot: count per level; per downloader and slot: volume
  std::vector<std::vector<std::map<int, int>>> got(U, std::vector<std::map<int, int>>(T));
  std::vector<std::vector<double>> moved(U, std::vector<double>(T, 0.0));
  std::vector<double> wifi(U, 0.0);
  for (const auto& e : plan.entries) {
    if (e.count == 0) continue;
    const auto n = static_cast<std::size_t>(e.downloader);
    const auto m = static_cast<std::size_t>(e.owner);
    const double volume = e.count * segment_volume(inst.profiles[m], e.level);
    got[m][static_cast<std::size_t>(e.slot)][e.level] += e.count;
    moved[n][static_cast<std::size_t>(e.slot)] += volume;
    if (n != m) wifi[n] += inst.profiles[n].w_data * volume;
  }

  SlottedEvaluation ev;
  ev.users.resize(U);
  for (std::size_t m = 0; m < U; ++m) {
    const UserProfile& p = inst.profiles[m];
    auto& w = ev.users[m];
    const int total = p.segment_count();
    double q = 0.0;
    int rec = 0;
    int high = 0;  // level of the highest bitrate in the last slot with receipts
    double pending = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const auto& levels = got[m][t];
      const double q_prev = q;
      int k = 0;
      for (const auto& [z, c] : levels) {
        k += c;
        w.value += c * p.segment_len * value_fn(p.theta, p.ladder.at(z));
      }
      const double stall = rec > 0 && rec < total ? p.phi_rebuf * pos(1.0 - q_prev) : 0.0;
      if (k > 0) {
        const int low = levels.begin()->first;
        if (high > 0) w.loss_qdeg += p.phi_qdeg * pos(p.ladder.at(high) - p.ladder.at(low));
        high = levels.rbegin()->first;
        w.loss_rebuf += pending + stall;
        pending = 0.0;
        q = pos(q_prev - 1.0) + k * p.segment_len;
      } else {
        if (inst.reset_degradation) high = 0;
        pending += stall;
        q = pos(q_prev - 1.0);
      }
      rec += k;
    }

    for (std::size_t t = 0; t < T; ++t) {
      const double x = moved[m][t];
      if (x <= 0.0) continue;
      w.energy_cell += p.c_time * x / inst.capacity[m][t] + p.c_data * x;
    }
    w.energy_wifi = wifi[m];
    w.compose();
    ev.total += w.welfare;
  }
  return ev;
}

std::vector<DownloadSequence> plan_to_schedule(const SlottedPlan& plan,
                                               const SlottedInstance& inst,
                                               const CapacityTrace& capacity) {
  SlottedPlan sorted = plan;
  sorted.normalize();
  const int users = inst.users();
  std::vector<DownloadRecord> all;
  for (int t = 0; t < inst.slots; ++t) {
    for (int n = 0; n < users; ++n) {
      std::vector<PlanEntry> mine;
      for (const auto& e : sorted.entries) {
        if (e.slot == t && e.downloader == n) mine.push_back(e);
      }
      std::stable_sort(mine.begin(), mine.end(), [&](const PlanEntry& a, const PlanEntry& b) {
        const double ra = inst.profiles[static_cast<std::size_t>(a.owner)].ladder.at(a.level);
        const double rb = inst.profiles[static_cast<std::size_t>(b.owner)].ladder.at(b.level);
        return ra < rb;
      });
      double clock = t;
      for (const auto& e : mine) {
        const UserProfile& op = inst.profiles[static_cast<std::size_t>(e.owner)];
        for (int c = 0; c < e.count; ++c) {
          const auto end = download_end_time(capacity, n, clock, segment_volume(op, e.level));
          if (!end) throw ModelError("plan volume exceeds the capacity trace");
          all.push_back({n, e.owner, e.level, op.ladder.at(e.level), clock, *end, 0});
          clock = *end;
        }
      }
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const DownloadRecord& a, const DownloadRecord& b) {
    return std::tie(a.t_end, a.downloader) < std::tie(b.t_end, b.downloader);
  });
  std::vector<int> next(static_cast<std::size_t>(users), 1);
  std::vector<DownloadSequence> out(static_cast<std::size_t>(users));
  for (int n = 0; n < users; ++n) out[static_cast<std::size_t>(n)].downloader = n;
  for (auto& r : all) {
    r.owner_seq_no = next[static_cast<std::size_t>(r.owner)]++;
    out[static_cast<std::size_t>(r.downloader)].records.push_back(r);
  }
  for (auto& seq : out) {
    std::sort(seq.records.begin(), seq.records.end(),
              [](const DownloadRecord& a, const DownloadRecord& b) { return a.t_start < b.t_start; });
  }
  return out;
}

void write_plan_csv(std::ostream& out, const SlottedPlan& plan) {
  SlottedPlan sorted = plan;
  sorted.normalize();
  out << "downloader,owner,level,slot,count\n";
  for (const auto& e : sorted.entries) {
    out << e.downloader << ',' << e.owner << ',' << e.level << ',' << e.slot << ',' << e.count
        << '\n';
  }
}

nlohmann::json to_json(const BoundRegion& region) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : region.entries) {
    entries.push_back({{"halvings", e.halvings},
                       {"welfare", e.welfare},
                       {"exact", e.exact},
                       {"nodes", e.nodes}});
  }
  return {{"lower", region.lower},
          {"upper_estimate", region.upper},
          {"exact", region.exact},
          {"monotone", region.monotone},
          {"entries", entries}};
}

}  // namespace coopstream
