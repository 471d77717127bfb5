#pragma once

// Brute-force references for the slotted solver and the segmented optimum,
// plus random instance generators shared by the unit and acceptance tests.
// Nothing here calls into the solver.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "coopstream/slotted.hpp"
#include "coopstream/traces.hpp"

namespace oracle {

using coopstream::SlottedInstance;
using coopstream::SlottedPlan;

// Welfare of a plan re-derived from the slotted model definition, or
// nullopt if the plan breaks a constraint.
std::optional<double> slotted_welfare(const SlottedPlan& plan, const SlottedInstance& inst);

// Number of plans the exhaustive search visits: per slot and downloader,
// every count vector over (linked owner, level) that fits the slot capacity.
// Saturates at `cap`.
std::int64_t candidate_plans(const SlottedInstance& inst, std::int64_t cap);

struct BruteForce {
  double best = 0.0;
  SlottedPlan plan;
  std::int64_t visited = 0;
};

// Exhaustive maximum over all candidate plans; nullopt when there are more
// than `limit` of them.
std::optional<BruteForce> brute_force_slotted(const SlottedInstance& inst, std::int64_t limit);

// Best segmented welfare for a single-user instance with at most
// `max_segments` segments, over every level choice and every start time in
// {previous end, next integer, latest start ending on an integer}.
double brute_force_segmented(const SlottedInstance& inst, const coopstream::CapacityTrace& cap,
                             int max_segments);

// Capacity trace that is constant on each unit slot with the instance's
// per-slot volume.
coopstream::CapacityTrace slot_capacity_trace(const SlottedInstance& inst);

struct GenLimits {
  int max_users = 3;
  int max_slots = 4;
  int max_levels = 2;
};

// Small random slotted instance with mixed coefficients, some idle helpers
// and random links.
SlottedInstance random_instance(std::mt19937_64& rng, const GenLimits& lim = {});

// Random traces and profiles for the segmented engine: N users, horizon T.
struct RandomScenario {
  coopstream::NetworkTraces traces;
  std::vector<coopstream::UserProfile> profiles;
};
RandomScenario random_scenario(std::uint64_t seed, int max_users, double max_horizon);

}  // namespace oracle
