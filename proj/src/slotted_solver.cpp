#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <unordered_map>

#include "coopstream/qoe.hpp"
#include "coopstream/slotted.hpp"

namespace coopstream {

namespace {

constexpr double kTol = 1e-9;
double pos(double x) { return x > 0.0 ? x : 0.0; }

struct Group {
  std::size_t owner_slot;  // index into the solver's owner list
  UserId owner;
  int level;
  double volume;
  double value;  // playback value of one segment
};

struct Action {
  std::vector<int> counts;  // per group
  double energy = 0.0;
  std::vector<PlanEntry> entries;
  double score = 0.0;  // playback value minus energy
};

// Per owner: received, buffer, level of last high bitrate, pending stall.
struct OwnerDp {
  int received = 0;
  double buffer = 0.0;
  int high = 0;
  double pending = 0.0;
};

struct Memo {
  double value;
  int action;
};

class Solver {
 public:
  Solver(const SlottedInstance& inst, const SolverLimits& limits)
      : inst_(inst), limits_(limits) {
    for (int m = 0; m < inst.users(); ++m) {
      const auto& p = inst.profiles[static_cast<std::size_t>(m)];
      if (!p.is_video_user || p.segment_count() == 0) continue;
      const std::size_t slot = owners_.size();
      owners_.push_back(m);
      group_begin_.push_back(groups_.size());
      for (int z = 1; z <= p.ladder.size(); ++z) {
        groups_.push_back({slot, m, z, segment_volume(p, z),
                           value_fn(p.theta, p.ladder.at(z)) * p.segment_len});
      }
    }
    // cellular energy per Mbit for each downloader and slot
    rate_.assign(static_cast<std::size_t>(inst.users()),
                 std::vector<double>(static_cast<std::size_t>(inst.slots), 0.0));
    for (int n = 0; n < inst.users(); ++n) {
      const auto& p = inst.profiles[static_cast<std::size_t>(n)];
      for (int t = 0; t < inst.slots; ++t) {
        const double h = inst.capacity[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)];
        if (h > 0.0) {
          rate_[static_cast<std::size_t>(n)][static_cast<std::size_t>(t)] = p.c_time / h + p.c_data;
        }
      }
    }
    // best net gain of one segment per owner from slot t on, floored at 0
    const auto T = static_cast<std::size_t>(inst.slots);
    net_.assign(T + 1, std::vector<double>(owners_.size(), 0.0));
    for (std::size_t t = T; t-- > 0;) {
      for (std::size_t j = 0; j < owners_.size(); ++j) net_[t][j] = net_[t + 1][j];
      for (const Group& g : groups_) {
        for (int n = 0; n < inst.users(); ++n) {
          const double h = inst.capacity[static_cast<std::size_t>(n)][t];
          if (h <= kTol || g.volume > h + kTol || !inst.linked(static_cast<int>(t), n, g.owner)) continue;
          double cost = rate_[static_cast<std::size_t>(n)][t] * g.volume;
          if (n != g.owner) cost += inst.profiles[static_cast<std::size_t>(n)].w_data * g.volume;
          net_[t][g.owner_slot] = std::max(net_[t][g.owner_slot], g.value - cost);
        }
      }
    }

    for (int t = 0; t < inst.slots; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      auto acts = dominant(enumerate_slot(t));
      // upper bound on gain + optimistic(t + 1, after) - optimistic(t, before)
      auto headroom = [&](const Action& a) {
        double h = -a.energy;
        for (std::size_t g = 0; g < groups_.size(); ++g) {
          h += a.counts[g] * (groups_[g].value - net_[ts][groups_[g].owner_slot]);
        }
        return h;
      };
      std::stable_sort(acts.begin(), acts.end(), [&](const Action& x, const Action& y) {
        return headroom(x) > headroom(y);
      });
      std::vector<double> h;
      int idle = 0;
      for (std::size_t a = 0; a < acts.size(); ++a) {
        h.push_back(headroom(acts[a]));
        if (acts[a].entries.empty()) idle = static_cast<int>(a);
      }
      headroom_.push_back(std::move(h));
      idle_.push_back(idle);
      actions_.push_back(std::move(acts));
    }
    memo_.resize(static_cast<std::size_t>(inst.slots));
  }

  SlottedSolution solve() {
    std::vector<OwnerDp> root(owners_.size());
    SlottedSolution sol;
    sol.welfare = search(0, root);
    sol.exact = !exhausted_;
    sol.nodes = nodes_;
    sol.plan.slots = inst_.slots;

    std::vector<OwnerDp> state = root;
    for (int t = 0; t < inst_.slots; ++t) {
      const auto it = memo_[static_cast<std::size_t>(t)].find(key(state));
      if (it == memo_[static_cast<std::size_t>(t)].end()) break;
      const Action& a = actions_[static_cast<std::size_t>(t)][static_cast<std::size_t>(it->second.action)];
      for (auto e : a.entries) {
        e.slot = t;
        sol.plan.entries.push_back(e);
      }
      std::vector<OwnerDp> next;
      apply(state, a, next);
      state = std::move(next);
    }
    sol.plan.normalize();
    return sol;
  }

 private:
  // All aggregate receipt vectors feasible in slot t, each with its cheapest
  // assignment to downloaders. Index 0 is the empty action.
  std::vector<Action> enumerate_slot(int t) {
    const int users = inst_.users();
    const auto ts = static_cast<std::size_t>(t);
    std::vector<UserId> links;  // downloaders with capacity this slot
    for (int n = 0; n < users; ++n) {
      if (inst_.capacity[static_cast<std::size_t>(n)][ts] > kTol) links.push_back(n);
    }

    // per owner: every composition over its levels that could fit
    std::vector<std::vector<std::vector<int>>> options(owners_.size());
    double total_room = 0.0;
    for (UserId n : links) total_room += inst_.capacity[static_cast<std::size_t>(n)][ts];
    for (std::size_t j = 0; j < owners_.size(); ++j) {
      const UserId m = owners_[j];
      const auto& p = inst_.profiles[static_cast<std::size_t>(m)];
      double reach = 0.0;
      for (UserId n : links) {
        if (inst_.linked(t, n, m)) reach += inst_.capacity[static_cast<std::size_t>(n)][ts];
      }
      const int most = std::min(static_cast<int>(std::floor(p.buffer_cap / p.segment_len + kTol)),
                                p.segment_count());
      std::vector<int> c(static_cast<std::size_t>(p.ladder.size()), 0);
      auto rec = [&](auto&& self, int z, int used, double volume) -> void {
        if (z > p.ladder.size()) {
          options[j].push_back(c);
          return;
        }
        const double v = segment_volume(p, z);
        for (int k = 0; used + k <= most && volume + k * v <= reach + kTol; ++k) {
          c[static_cast<std::size_t>(z - 1)] = k;
          self(self, z + 1, used + k, volume + k * v);
        }
        c[static_cast<std::size_t>(z - 1)] = 0;
      };
      rec(rec, 1, 0, 0.0);
    }

    std::vector<Action> out;
    out.push_back({std::vector<int>(groups_.size(), 0), 0.0, {}});
    std::vector<int> counts(groups_.size(), 0);
    auto combine = [&](auto&& self, std::size_t j, double volume) -> void {
      if (j == owners_.size()) {
        bool any = false;
        for (int c : counts) any = any || c > 0;
        if (!any) return;
        Action a;
        if (cheapest_assignment(t, links, counts, a)) out.push_back(std::move(a));
        return;
      }
      const std::size_t first = group_begin_[j];
      for (const auto& c : options[j]) {
        double v = 0.0;
        for (std::size_t z = 0; z < c.size(); ++z) v += c[z] * groups_[first + z].volume;
        if (volume + v > total_room + kTol) continue;
        for (std::size_t z = 0; z < c.size(); ++z) counts[first + z] = c[z];
        self(self, j + 1, volume + v);
      }
      for (std::size_t z = 0; z < options[j].front().size(); ++z) counts[first + z] = 0;
    };
    if (!links.empty()) combine(combine, 0, 0.0);
    return out;
  }

  // Minimum-energy split of the receipts in `counts` over the downloaders,
  // respecting slot capacity and encounters. Energy is linear in each
  // downloader's volume, so a DP over groups keyed by capacity use is exact.
  bool cheapest_assignment(int t, const std::vector<UserId>& links,
                           const std::vector<int>& counts, Action& out) const {
    const auto ts = static_cast<std::size_t>(t);
    const std::size_t L = links.size();
    struct Partial {
      std::vector<double> used;
      double energy;
      std::vector<PlanEntry> entries;
    };
    std::vector<Partial> layer{{std::vector<double>(L, 0.0), 0.0, {}}};

    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (counts[g] == 0) continue;
      const Group& grp = groups_[g];
      std::vector<std::size_t> eligible;
      for (std::size_t i = 0; i < L; ++i) {
        if (inst_.linked(t, links[i], grp.owner)) eligible.push_back(i);
      }
      if (eligible.empty()) return false;

      std::map<std::vector<long long>, Partial> next;
      std::vector<int> split(eligible.size(), 0);
      for (const auto& part : layer) {
        auto rec = [&](auto&& self, std::size_t e, int left) -> void {
          if (e + 1 == eligible.size()) {
            split[e] = left;
          } else {
            for (int k = 0; k <= left; ++k) {
              split[e] = k;
              self(self, e + 1, left - k);
            }
            return;
          }
          Partial np = part;
          for (std::size_t i = 0; i < eligible.size(); ++i) {
            if (split[i] == 0) continue;
            const std::size_t li = eligible[i];
            const UserId n = links[li];
            const double x = split[i] * grp.volume;
            np.used[li] += x;
            if (np.used[li] > inst_.capacity[static_cast<std::size_t>(n)][ts] + kTol) return;
            np.energy += x * rate_[static_cast<std::size_t>(n)][ts];
            if (n != grp.owner) np.energy += x * inst_.profiles[static_cast<std::size_t>(n)].w_data;
            np.entries.push_back({n, grp.owner, grp.level, t, split[i]});
          }
          std::vector<long long> k(L);
          for (std::size_t i = 0; i < L; ++i) k[i] = std::llround(np.used[i] * 1e9);
          auto it = next.find(k);
          if (it == next.end()) {
            next.emplace(std::move(k), std::move(np));
          } else if (np.energy < it->second.energy) {
            it->second = std::move(np);
          }
        };
        rec(rec, 0, counts[g]);
      }
      if (next.empty()) return false;
      layer.clear();
      for (auto& [k, part] : next) layer.push_back(std::move(part));
    }

    const Partial* best = &layer.front();
    for (const auto& part : layer) {
      if (part.energy < best->energy) best = &part;
    }
    out.counts = counts;
    out.energy = best->energy;
    out.entries = best->entries;
    return true;
  }

  // Applies an action to a state. Returns the slot's welfare contribution,
  // or NaN if the action is infeasible from this state.
  double apply(const std::vector<OwnerDp>& from, const Action& a,
               std::vector<OwnerDp>& to) const {
    to = from;
    double gain = -a.energy;
    for (std::size_t j = 0; j < owners_.size(); ++j) {
      const auto& p = inst_.profiles[static_cast<std::size_t>(owners_[j])];
      const int total = p.segment_count();
      const OwnerDp& s = from[j];
      OwnerDp& d = to[j];
      int k = 0;
      int low = 0;
      int high = 0;
      double value = 0.0;
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].owner_slot != j || a.counts[g] == 0) continue;
        k += a.counts[g];
        value += a.counts[g] * groups_[g].value;
        if (low == 0) low = groups_[g].level;
        high = groups_[g].level;
      }
      const double stall = s.received > 0 && s.received < total ? p.phi_rebuf * pos(1.0 - s.buffer) : 0.0;
      if (k > 0) {
        if (s.received + k > total) return std::numeric_limits<double>::quiet_NaN();
        d.buffer = pos(s.buffer - 1.0) + k * p.segment_len;
        if (d.buffer > p.buffer_cap + kTol) return std::numeric_limits<double>::quiet_NaN();
        gain += value;
        if (s.high > 0) gain -= p.phi_qdeg * pos(p.ladder.at(s.high) - p.ladder.at(low));
        gain -= s.pending + stall;
        d.pending = 0.0;
        d.high = high;
        d.received = s.received + k;
      } else {
        d.buffer = pos(s.buffer - 1.0);
        d.pending = s.pending + stall;
        if (inst_.reset_degradation) d.high = 0;
      }
      if (d.received == total) d.pending = 0.0;
    }
    return gain;
  }

  // Future welfare can not exceed, per owner, the segments it can still
  // take (video left, buffer room plus one second of drain per slot) times
  // the best net gain of one segment.
  double optimistic(int t, const std::vector<OwnerDp>& s) const {
    const auto ts = static_cast<std::size_t>(t);
    const double slots_left = inst_.slots - t;
    double v = 0.0;
    for (std::size_t j = 0; j < owners_.size(); ++j) {
      if (net_[ts][j] <= 0.0) continue;
      const auto& p = inst_.profiles[static_cast<std::size_t>(owners_[j])];
      const int room = static_cast<int>(
          std::floor((p.buffer_cap - s[j].buffer + slots_left) / p.segment_len + kTol));
      const int take = std::min(p.segment_count() - s[j].received, room);
      if (take > 0) v += take * net_[ts][j];
    }
    return v;
  }

  // Two actions with the same count, lowest and highest level per owner
  // move any state to the same next state, and their gains differ by a
  // constant. Keep the better one of each such class.
  std::vector<Action> dominant(std::vector<Action> acts) const {
    std::map<std::vector<int>, std::size_t> best;
    std::vector<Action> out;
    for (auto& a : acts) {
      std::vector<int> sig;
      double score = -a.energy;
      for (std::size_t j = 0; j < owners_.size(); ++j) {
        int k = 0, low = 0, high = 0;
        for (std::size_t g = group_begin_[j]; g < groups_.size() && groups_[g].owner_slot == j; ++g) {
          if (a.counts[g] == 0) continue;
          k += a.counts[g];
          score += a.counts[g] * groups_[g].value;
          if (low == 0) low = groups_[g].level;
          high = groups_[g].level;
        }
        sig.insert(sig.end(), {k, low, high});
      }
      a.score = score;
      auto [it, fresh] = best.try_emplace(sig, out.size());
      if (fresh) {
        out.push_back(std::move(a));
      } else if (score > out[it->second].score) {
        out[it->second] = std::move(a);
      }
    }
    return out;
  }

  static std::string key(const std::vector<OwnerDp>& s) {
    std::string k;
    k.reserve(s.size() * (2 * sizeof(int) + 2 * sizeof(double)));
    for (const auto& o : s) {
      k.append(reinterpret_cast<const char*>(&o.received), sizeof o.received);
      k.append(reinterpret_cast<const char*>(&o.buffer), sizeof o.buffer);
      k.append(reinterpret_cast<const char*>(&o.high), sizeof o.high);
      k.append(reinterpret_cast<const char*>(&o.pending), sizeof o.pending);
    }
    return k;
  }

  double search(int t, const std::vector<OwnerDp>& state) {
    if (t == inst_.slots) return 0.0;
    auto& memo = memo_[static_cast<std::size_t>(t)];
    std::string k = key(state);
    if (auto it = memo.find(k); it != memo.end()) return it->second.value;

    const auto ts = static_cast<std::size_t>(t);
    const auto& acts = actions_[ts];
    const double opt = optimistic(t, state);
    double best = -std::numeric_limits<double>::infinity();
    int best_action = idle_[ts];
    std::vector<OwnerDp> next;
    // actions are sorted by their state-independent headroom, so the first
    // one that cannot beat `best` ends the scan
    for (std::size_t a = 0; a < acts.size(); ++a) {
      if (opt + headroom_[ts][a] <= best) break;
      if (exhausted_ && static_cast<int>(a) != idle_[ts]) continue;
      const double gain = apply(state, acts[a], next);
      if (std::isnan(gain) || gain + optimistic(t + 1, next) <= best) continue;
      if (++nodes_ > limits_.node_budget) exhausted_ = true;
      const double v = gain + search(t + 1, next);
      if (v > best) {
        best = v;
        best_action = static_cast<int>(a);
      }
    }
    memo.emplace(std::move(k), Memo{best, best_action});
    return best;
  }

  const SlottedInstance& inst_;
  SolverLimits limits_;
  std::vector<UserId> owners_;
  std::vector<std::vector<double>> net_;  // [slot][owner]
  std::vector<Group> groups_;
  std::vector<std::size_t> group_begin_;
  std::vector<std::vector<double>> rate_;
  std::vector<std::vector<Action>> actions_;
  std::vector<std::vector<double>> headroom_;
  std::vector<int> idle_;
  std::vector<std::unordered_map<std::string, Memo>> memo_;
  std::int64_t nodes_ = 0;
  bool exhausted_ = false;
};

}  // namespace

SlottedSolution solve_slotted(const SlottedInstance& inst, const SolverLimits& limits) {
  for (const auto& p : inst.profiles) validate_profile(p);
  return Solver(inst, limits).solve();
}

BoundRegion bound_region(const SlottedInstance& inst, int refine, const SolverLimits& limits) {
  if (refine < 0) throw ModelError("refinement depth must be >= 0");
  BoundRegion region;
  for (int k = 0; k <= refine; ++k) {
    const auto sol = solve_slotted(inst.refined(k), limits);
    region.entries.push_back({k, sol.welfare, sol.exact, sol.nodes});
    region.exact = region.exact && sol.exact;
    if (k > 0 && sol.welfare < region.entries[static_cast<std::size_t>(k - 1)].welfare - kTol) {
      region.monotone = false;
    }
  }
  region.lower = region.entries.front().welfare;
  region.upper = region.entries.back().welfare;
  return region;
}

}  // namespace coopstream
