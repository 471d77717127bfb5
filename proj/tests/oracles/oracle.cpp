#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "coopstream/qoe.hpp"

namespace oracle {

using namespace coopstream;

namespace {

constexpr double kTol = 1e-9;

double plus(double x) { return std::max(x, 0.0); }

struct Item {
  int owner;
  int level;
  double volume;
  int max_count;
};

// Everything downloader n may fetch in slot t.
std::vector<Item> items(const SlottedInstance& inst, int t, int n) {
  std::vector<Item> out;
  const double cap = inst.capacity[n][t];
  for (int m = 0; m < inst.users(); ++m) {
    const UserProfile& p = inst.profiles[m];
    if (!p.is_video_user || !inst.linked(t, n, m)) continue;
    for (int z = 1; z <= p.ladder.size(); ++z) {
      const double v = p.ladder.at(z) * p.segment_len;
      const int fit = static_cast<int>(std::floor((cap + kTol) / v));
      out.push_back({m, z, v, std::min(fit, p.segment_count())});
    }
  }
  return out;
}

// All count vectors over `its` whose volume fits `cap`.
std::vector<std::vector<int>> fillings(const std::vector<Item>& its, double cap) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(its.size(), 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double left) {
    if (i == its.size()) {
      out.push_back(cur);
      return;
    }
    for (int c = 0; c <= its[i].max_count; ++c) {
      const double need = c * its[i].volume;
      if (need > left + kTol) break;
      cur[i] = c;
      rec(i + 1, left - need);
    }
    cur[i] = 0;
  };
  rec(0, cap);
  return out;
}

struct Cell {
  int slot;
  int downloader;
  std::vector<Item> its;
  std::vector<std::vector<int>> options;
};

std::vector<Cell> cells(const SlottedInstance& inst) {
  std::vector<Cell> out;
  for (int t = 0; t < inst.slots; ++t) {
    for (int n = 0; n < inst.users(); ++n) {
      Cell c{t, n, items(inst, t, n), {}};
      c.options = fillings(c.its, inst.capacity[n][t]);
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

std::optional<double> slotted_welfare(const SlottedPlan& plan, const SlottedInstance& inst) {
  const int N = inst.users();
  const int T = inst.slots;
  // bitrates each owner receives per slot; volume per downloader and slot
  std::vector<std::vector<std::vector<double>>> got(N, std::vector<std::vector<double>>(T));
  std::vector<std::vector<double>> load(N, std::vector<double>(T, 0.0));
  double wifi = 0.0;
  for (const auto& e : plan.entries) {
    if (e.count < 0 || e.slot < 0 || e.slot >= T || e.owner < 0 || e.owner >= N ||
        e.downloader < 0 || e.downloader >= N) {
      return std::nullopt;
    }
    if (e.count == 0) continue;
    const UserProfile& op = inst.profiles[e.owner];
    if (!op.is_video_user || e.level < 1 || e.level > op.ladder.size()) return std::nullopt;
    if (!inst.linked(e.slot, e.downloader, e.owner)) return std::nullopt;
    const double r = op.ladder.levels()[e.level - 1];
    for (int c = 0; c < e.count; ++c) got[e.owner][e.slot].push_back(r);
    const double x = e.count * r * op.segment_len;
    load[e.downloader][e.slot] += x;
    if (e.owner != e.downloader) wifi += inst.profiles[e.downloader].w_data * x;
  }

  double total = -wifi;
  for (int n = 0; n < N; ++n) {
    const UserProfile& p = inst.profiles[n];
    for (int t = 0; t < T; ++t) {
      const double x = load[n][t];
      if (x > inst.capacity[n][t] + kTol) return std::nullopt;
      if (x > 0.0) total -= p.c_time * x / inst.capacity[n][t] + p.c_data * x;
    }
  }

  for (int m = 0; m < N; ++m) {
    const UserProfile& p = inst.profiles[m];
    const int video = p.segment_count();
    double q = 0.0;
    int seen = 0;
    std::optional<double> last_high;
    double owed = 0.0;  // stall accrued since the last receipt
    for (int t = 0; t < T; ++t) {
      auto& rs = got[m][t];
      const double before = q;
      if (seen > 0 && seen < video) owed += p.phi_rebuf * plus(1.0 - before);
      q = plus(before - 1.0) + static_cast<double>(rs.size()) * p.segment_len;
      if (q > p.buffer_cap + kTol) return std::nullopt;
      if (rs.empty()) {
        if (inst.reset_degradation) last_high.reset();
        continue;
      }
      std::sort(rs.begin(), rs.end());
      for (double r : rs) total += p.segment_len * std::log(1.0 + p.theta * r);
      if (last_high) total -= p.phi_qdeg * plus(*last_high - rs.front());
      last_high = rs.back();
      total -= owed;
      owed = 0.0;
      seen += static_cast<int>(rs.size());
    }
    if (seen > video) return std::nullopt;
  }
  return total;
}

std::int64_t candidate_plans(const SlottedInstance& inst, std::int64_t cap) {
  std::int64_t n = 1;
  for (const auto& c : cells(inst)) {
    const auto k = static_cast<std::int64_t>(c.options.size());
    if (n > cap / k) return cap + 1;
    n *= k;
  }
  return n;
}

std::optional<BruteForce> brute_force_slotted(const SlottedInstance& inst, std::int64_t limit) {
  if (candidate_plans(inst, limit) > limit) return std::nullopt;
  const auto cs = cells(inst);
  BruteForce out;
  out.best = -std::numeric_limits<double>::infinity();
  SlottedPlan plan;
  plan.slots = inst.slots;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == cs.size()) {
      ++out.visited;
      const auto w = oracle::slotted_welfare(plan, inst);
      if (w && *w > out.best) {
        out.best = *w;
        out.plan = plan;
      }
      return;
    }
    const Cell& c = cs[i];
    for (const auto& counts : c.options) {
      const std::size_t mark = plan.entries.size();
      for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] == 0) continue;
        plan.entries.push_back({c.downloader, c.its[j].owner, c.its[j].level, c.slot, counts[j]});
      }
      rec(i + 1);
      plan.entries.resize(mark);
    }
  };
  rec(0);
  out.plan.normalize();
  return out;
}

CapacityTrace slot_capacity_trace(const SlottedInstance& inst) {
  std::vector<std::vector<TracePiece<double>>> pieces(inst.users());
  for (int n = 0; n < inst.users(); ++n) {
    for (int t = 0; t < inst.slots; ++t) {
      pieces[n].push_back({static_cast<double>(t), t + 1.0, inst.capacity[n][t]});
    }
  }
  return CapacityTrace::from_pieces(std::move(pieces));
}

namespace {

// Latest start so that `volume` completes exactly at `end`.
std::optional<double> latest_start(const SlottedInstance& inst, double volume, double end) {
  double left = volume;
  double t = end;
  while (left > kTol) {
    const int slot = static_cast<int>(std::ceil(t - kTol)) - 1;
    if (slot < 0) return std::nullopt;
    const double rate = inst.capacity[0][slot];
    const double span = t - slot;
    if (rate > 0.0 && rate * span >= left - kTol) return t - left / rate;
    left -= rate * span;
    t = slot;
  }
  return t;
}

}  // namespace

double brute_force_segmented(const SlottedInstance& inst, const CapacityTrace& cap,
                             int max_segments) {
  const UserProfile& p = inst.profiles[0];
  const int video = std::min(p.segment_count(), max_segments);
  const double horizon = inst.slots;
  const std::vector<UserProfile> profiles{p};
  DownloadSequence dl;
  dl.downloader = 0;
  double best = 0.0;

  std::function<void(double)> rec = [&](double free_at) {
    ReceiveSequence rx;
    rx.owner = 0;
    rx.records = dl.records;
    best = std::max(best, user_welfare(dl, rx, p, profiles).welfare);
    if (static_cast<int>(dl.records.size()) == video) return;

    std::vector<double> starts{free_at};
    for (int t = static_cast<int>(std::ceil(free_at - kTol)); t < inst.slots; ++t) {
      if (t > free_at + kTol) starts.push_back(t);
    }
    for (int z = 1; z <= p.ladder.size(); ++z) {
      const double volume = p.ladder.at(z) * p.segment_len;
      std::vector<double> options = starts;
      for (int e = 1; e <= inst.slots; ++e) {
        const auto s = latest_start(inst, volume, e);
        if (s && *s >= free_at - kTol) options.push_back(std::max(*s, free_at));
      }
      for (double s : options) {
        const auto end = download_end_time(cap, 0, s, volume);
        if (!end || *end > horizon + kTol) continue;
        DownloadRecord r;
        r.downloader = 0;
        r.owner = 0;
        r.level = z;
        r.bitrate = p.ladder.at(z);
        r.t_start = s;
        r.t_end = *end;
        r.owner_seq_no = static_cast<int>(dl.records.size()) + 1;
        dl.records.push_back(r);
        ReceiveSequence probe;
        probe.records = dl.records;
        const auto q = buffer_trajectory(probe, p);
        if (q.back() <= p.buffer_cap + kTol) rec(*end);
        dl.records.pop_back();
      }
    }
  };
  rec(0.0);
  return best;
}

SlottedInstance random_instance(std::mt19937_64& rng, const GenLimits& lim) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto pick = [&](std::initializer_list<double> xs) {
    return *(xs.begin() + uni(0, static_cast<int>(xs.size()) - 1));
  };

  SlottedInstance inst;
  const int users = uni(1, lim.max_users);
  inst.slots = uni(1, lim.max_slots);
  inst.reset_degradation = uni(0, 3) == 0;

  std::vector<double> pool{0.5, 1.0, 1.5, 2.0};
  for (int n = 0; n < users; ++n) {
    UserProfile p;
    p.id = n;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<double> ladder(pool.begin(), pool.begin() + uni(1, lim.max_levels));
    std::sort(ladder.begin(), ladder.end());
    p.ladder = BitrateLadder(ladder);
    p.segment_len = pick({0.5, 1.0});
    p.buffer_cap = p.segment_len * uni(1, 4);
    p.is_video_user = n == 0 || uni(0, 9) < 7;
    p.video_len = p.is_video_user ? p.segment_len * uni(1, 3) : 0.0;
    p.theta = pick({0.5, 1.0, 2.0});
    p.phi_qdeg = pick({0.0, 0.5, 1.0});
    p.phi_rebuf = pick({0.0, 1.0, 2.0});
    p.c_time = pick({0.0, 0.2, 0.5});
    p.c_data = pick({0.0, 0.05, 0.1});
    p.w_data = pick({0.0, 0.05});
    inst.profiles.push_back(p);
  }
  inst.capacity.assign(users, std::vector<double>(inst.slots));
  for (auto& row : inst.capacity) {
    for (auto& h : row) h = pick({0.0, 0.5, 1.0, 1.5, 2.0, 3.0});
  }
  inst.together.assign(inst.slots, std::vector<std::vector<char>>(users, std::vector<char>(users)));
  for (int t = 0; t < inst.slots; ++t) {
    for (int n = 0; n < users; ++n) {
      inst.together[t][n][n] = 1;
      for (int m = n + 1; m < users; ++m) {
        const char on = uni(0, 1);
        inst.together[t][n][m] = on;
        inst.together[t][m][n] = on;
      }
    }
  }
  return inst;
}

RandomScenario random_scenario(std::uint64_t seed, int max_users, double max_horizon) {
  std::mt19937_64 rng(seed);
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SynthConfig sy;
  sy.users = uni(1, max_users);
  sy.horizon = real(5.0, max_horizon);
  sy.hotspots = uni(1, 3);
  sy.dwell_mean = real(2.0, 20.0);
  sy.transition_mean = uni(0, 3) == 0 ? 0.0 : real(0.5, 10.0);
  sy.cap_hi = real(0.0, 6.0);
  sy.cap_lo = uni(0, 2) == 0 ? 0.0 : real(0.0, sy.cap_hi);
  sy.cap_period = real(0.7, 10.0);
  sy.cap_jitter = real(0.0, 1.0);

  RandomScenario sc;
  sc.traces = synth_traces(sy, rng());
  const std::vector<double> full{0.2, 0.4, 0.7, 1.3, 2.3};
  for (int n = 0; n < sy.users; ++n) {
    UserProfile p;
    p.id = n;
    const int lo = uni(0, 2);
    const int hi = uni(lo, 4);
    p.ladder = BitrateLadder(std::vector<double>(full.begin() + lo, full.begin() + hi + 1));
    p.segment_len = std::vector<double>{0.5, 1.0, 2.0}[uni(0, 2)];
    p.buffer_cap = p.segment_len * uni(1, 10) + real(0.0, 1.0);
    p.is_video_user = uni(0, 4) != 0;
    p.video_len = p.is_video_user ? p.segment_len * uni(1, 40) : 0.0;
    p.theta = real(0.5, 2.0);
    p.phi_qdeg = real(0.0, 2.0);
    p.phi_rebuf = real(0.0, 3.0);
    p.c_time = real(0.0, 1.0);
    p.c_data = real(0.0, 0.2);
    p.w_data = real(0.0, 0.1);
    sc.profiles.push_back(p);
  }
  return sc;
}

}  // namespace oracle
