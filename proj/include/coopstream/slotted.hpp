#pragma once

// Virtual time-slotted system: every download starts and completes inside
// one unit-length slot. Used to bracket the segmented system's optimum.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopstream/model.hpp"
#include "coopstream/traces.hpp"

namespace coopstream {

// Slot t covers [t, t + 1) seconds; slots are 0-based.
struct SlottedInstance {
  std::vector<UserProfile> profiles;
  int slots = 0;
  std::vector<std::vector<double>> capacity;             // [n][t], Mbit per slot
  std::vector<std::vector<std::vector<char>>> together;  // [t][n][m]
  // Forget the last received bitrate across a slot without receipts, so the
  // next receipt is never charged a degradation loss.
  bool reset_degradation = false;

  int users() const { return static_cast<int>(profiles.size()); }
  bool linked(int slot, UserId n, UserId m) const {
    return together[static_cast<std::size_t>(slot)][static_cast<std::size_t>(n)]
                   [static_cast<std::size_t>(m)] != 0;
  }

  // Traces must have an integer horizon.
  static SlottedInstance from_traces(const NetworkTraces& traces,
                                     std::vector<UserProfile> profiles,
                                     bool force_noncoop = false);

  // Same instance with every segment length divided by 2^halvings. Video
  // lengths and buffer caps are unchanged.
  SlottedInstance refined(int halvings) const;
};

struct PlanEntry {
  UserId downloader = 0;
  UserId owner = 0;
  int level = 1;
  int slot = 0;
  int count = 0;

  bool operator==(const PlanEntry&) const = default;
};

struct SlottedPlan {
  int slots = 0;
  std::vector<PlanEntry> entries;

  // Sorts by (slot, downloader, owner, level), merges duplicates and drops
  // zero counts.
  void normalize();
};

struct SlottedEvaluation {
  std::vector<WelfareBreakdown> users;
  double total = 0.0;
};

// One line per violated constraint; empty when the plan is feasible.
std::vector<std::string> plan_violations(const SlottedPlan& plan, const SlottedInstance& inst);

// Throws ModelError if the plan is infeasible.
SlottedEvaluation slotted_welfare(const SlottedPlan& plan, const SlottedInstance& inst);

// Lays each downloader's segments of a slot back to back from the slot
// start at full link rate, lowest bitrate first. Owner sequence numbers
// follow completion order.
std::vector<DownloadSequence> plan_to_schedule(const SlottedPlan& plan,
                                               const SlottedInstance& inst,
                                               const CapacityTrace& capacity);

struct SolverLimits {
  std::int64_t node_budget = 20'000'000;
};

struct SlottedSolution {
  SlottedPlan plan;
  double welfare = 0.0;
  bool exact = true;
  std::int64_t nodes = 0;
};

// Exact optimum by depth-first search over slots with memoized states and
// an optimistic bound. When the node budget runs out the rest of the search
// only idles, and the result is flagged inexact.
SlottedSolution solve_slotted(const SlottedInstance& inst, const SolverLimits& limits = {});

struct BoundEntry {
  int halvings = 0;
  double welfare = 0.0;
  bool exact = true;
  std::int64_t nodes = 0;
};

struct BoundRegion {
  std::vector<BoundEntry> entries;  // halvings 0..K
  double lower = 0.0;               // optimum at the original segment lengths
  double upper = 0.0;               // optimum after K halvings, proxy upper bound
  bool exact = true;
  bool monotone = true;             // nondecreasing with slack 1e-9
};

BoundRegion bound_region(const SlottedInstance& inst, int refine,
                         const SolverLimits& limits = {});

nlohmann::json to_json(const BoundRegion& region);
void write_plan_csv(std::ostream& out, const SlottedPlan& plan);

}  // namespace coopstream
