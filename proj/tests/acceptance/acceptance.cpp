// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "coopstream/harness.hpp"
#include "coopstream/qoe.hpp"
#include "coopstream/scheduler.hpp"
#include "coopstream/sim.hpp"
#include "coopstream/slotted.hpp"
#include "oracle.hpp"

using namespace coopstream;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<std::unique_ptr<Scheduler>> all_schedulers() {
  std::vector<std::unique_ptr<Scheduler>> v;
  v.push_back(make_lyapunov({}));
  v.push_back(make_lyapunov({1.0, false}));
  v.push_back(make_buffer_based({}));
  v.push_back(make_prediction_based({}));
  v.push_back(make_greedy_noncoop({}));
  return v;
}

Outcome constraint_audit() {
  const auto scheds = all_schedulers();
  int runs = 0;
  int violations = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto sc = oracle::random_scenario(seed, 5, 60.0);
    for (const auto& s : scheds) {
      for (bool noncoop : {false, true}) {
        const auto r = run(sc.traces, sc.profiles, *s, {noncoop, {}});
        const auto bad = audit_run(r, sc.traces, sc.profiles, noncoop);
        ++runs;
        violations += static_cast<int>(bad.size());
        if (!bad.empty() && first.empty()) {
          first = "seed " + std::to_string(seed) + " " + s->name() + ": " + bad.front();
        }
      }
    }
  }
  return {violations == 0,
          std::to_string(runs) + " runs, " + std::to_string(violations) + " violations" +
              (first.empty() ? "" : " (" + first + ")")};
}

Outcome solver_oracle() {
  std::mt19937_64 rng(1);
  int compared = 0, mismatches = 0;
  std::int64_t largest = 0;
  for (int i = 0; i < 5000 && compared < 60; ++i) {
    const auto inst = oracle::random_instance(rng, {3, 4, 2});
    const auto plans = oracle::candidate_plans(inst, 200'001);
    if (plans > 200'000) continue;
    const auto bf = oracle::brute_force_slotted(inst, 200'000);
    const auto s = solve_slotted(inst);
    if (!bf || !s.exact || std::abs(s.welfare - bf->best) > 1e-9 * std::max(1.0, std::abs(bf->best))) {
      ++mismatches;
    }
    largest = std::max(largest, plans);
    ++compared;
  }
  return {compared >= 50 && mismatches == 0,
          std::to_string(compared) + " instances (up to " + std::to_string(largest) +
              " plans), " + std::to_string(mismatches) + " mismatches"};
}

Outcome refinement_monotone() {
  std::mt19937_64 rng(2);
  int solvable = 0, broken = 0;
  for (int i = 0; i < 200 && solvable < 40; ++i) {
    const auto inst = oracle::random_instance(rng, {2, 4, 2});
    const auto region = bound_region(inst, 2, {5'000'000});
    if (!region.exact) continue;
    ++solvable;
    for (std::size_t k = 1; k < region.entries.size(); ++k) {
      if (region.entries[k].welfare - region.entries[k - 1].welfare < -1e-9) ++broken;
    }
  }
  return {solvable >= 30 && broken == 0,
          std::to_string(solvable) + " exact instances, " + std::to_string(broken) +
              " decreasing steps"};
}

ScenarioConfig micro_config(const std::string& mobility, int users) {
  ScenarioConfig cfg;
  cfg.users = 4;
  cfg.video_fraction = 0.75;
  cfg.mobility = mobility;
  cfg.capacity_hi = 3.0;
  cfg.capacity_period = 2.0;
  cfg.bound = true;
  cfg.bound_users = users;
  cfg.bound_horizon = 6.0;
  return cfg;
}

Outcome sandwich() {
  const auto scheds = all_schedulers();
  int instances = 0, above = 0, exceed_lower = 0;
  double worst = -1e300;
  for (const std::string mobility : {"dense-short", "full-coop"}) {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      const auto cfg = micro_config(mobility, 2);
      const auto mi = micro_instance(cfg, make_scenario(cfg, seed));
      if (!mi) continue;
      const auto inst = SlottedInstance::from_traces(mi->traces, mi->profiles, mi->force_noncoop);
      const auto region = bound_region(inst, 2, {cfg.bound_node_budget});
      if (!region.exact) continue;
      ++instances;
      for (const auto& s : scheds) {
        const double w = run(mi->traces, mi->profiles, *s, {mi->force_noncoop, {}}).social_welfare;
        worst = std::max(worst, w - region.upper);
        if (w > region.upper + 1e-6) ++above;
        if (w > region.lower + 1e-9) ++exceed_lower;
      }
    }
  }
  std::ostringstream os;
  os << instances << " exact micro instances, " << above << " runs above the refined bound"
     << " (max W' - bound " << worst << "), " << exceed_lower
     << " runs above the unrefined optimum";
  return {instances >= 30 && above == 0, os.str()};
}

Outcome lyapunov_dominance() {
  bool ok = true;
  std::ostringstream os;
  for (double hi : {0.7, 2.5, 5.0, 8.0}) {
    ScenarioConfig cfg;
    cfg.users = 10;
    cfg.video_fraction = 0.6;
    cfg.mobility = "dense-short";
    cfg.capacity_lo = 0.0;
    cfg.capacity_hi = hi;
    cfg.repetitions = 20;
    cfg.schedulers = {"lyapunov", "buffer", "prediction"};
    const auto rep = run_experiment(cfg);
    const double lyap = rep.schedulers[0].social_welfare.mean;
    os << "[0," << hi << "]:";
    for (const auto& s : rep.schedulers) {
      double coop = 0.0, alone = 0.0;
      for (const auto& r : s.runs) {
        coop += r.avg_bitrate;
        alone += r.avg_bitrate_noncoop;
      }
      coop /= static_cast<double>(s.runs.size());
      alone /= static_cast<double>(s.runs.size());
      if (s.social_welfare.mean > lyap) ok = false;
      if (coop < alone) ok = false;
      char buf[128];
      std::snprintf(buf, sizeof buf, " %s W=%.1f r=%.3f/%.3f", s.scheduler.c_str(),
                    s.social_welfare.mean, coop, alone);
      os << buf;
    }
    os << ";";
  }
  return {ok, os.str()};
}

Outcome lambda_gap() {
  double gap_hi = 0.0, gap_lo = 0.0;
  int paired = 0;
  for (std::uint64_t seed = 1; seed <= 40 && paired < 30; ++seed) {
    auto cfg = micro_config("full-coop", 2);
    const auto mi = micro_instance(cfg, make_scenario(cfg, seed));
    if (!mi) continue;
    const auto inst = SlottedInstance::from_traces(mi->traces, mi->profiles, mi->force_noncoop);
    const auto region = bound_region(inst, 2, {cfg.bound_node_budget});
    if (!region.exact || region.upper <= 0.0) continue;
    const auto low = make_lyapunov({0.1, cfg.skip_unprofitable});
    const auto high = make_lyapunov({100.0, cfg.skip_unprofitable});
    const RunConfig rc{mi->force_noncoop, {}};
    gap_lo += 1.0 - run(mi->traces, mi->profiles, *low, rc).social_welfare / region.upper;
    gap_hi += 1.0 - run(mi->traces, mi->profiles, *high, rc).social_welfare / region.upper;
    ++paired;
  }
  if (paired > 0) {
    gap_lo /= paired;
    gap_hi /= paired;
  }
  std::ostringstream os;
  os << paired << " paired seeds, mean gap " << gap_hi << " at lambda 100 vs " << gap_lo
     << " at lambda 0.1";
  return {paired >= 20 && gap_hi <= gap_lo, os.str()};
}

UserProfile golden_profile(UserId id) {
  UserProfile p;
  p.id = id;
  p.ladder = BitrateLadder({0.2, 0.4, 0.7, 1.3, 2.3});
  p.is_video_user = true;
  p.video_len = 100.0;
  return p;
}

Outcome goldens() {
  int failed = 0, total = 0;
  std::string first;
  auto expect = [&](const std::string& what, double got, double want) {
    ++total;
    if (std::abs(got - want) > 1e-9) {
      ++failed;
      if (first.empty()) first = what;
    }
  };

  const UserProfile p = golden_profile(0);
  const std::vector<UserProfile> one{p};
  DownloadRecord top{0, 0, 5, 2.3, 0.0, 2.0, 1};
  DownloadSequence dl{0, {top}};
  ReceiveSequence rx{0, {top}};
  expect("value", total_value(rx, p), 2.0 * std::log(3.3));
  expect("cell energy", energy_cell(dl, p, one), 1.46);
  expect("welfare", user_welfare(dl, rx, p, one).welfare, 0.92784493694487);

  ReceiveSequence drop{0, {{0, 0, 5, 2.3, 0, 0, 1}, {0, 0, 3, 0.7, 1, 1, 2}, {0, 0, 4, 1.3, 2, 2, 3}}};
  expect("degradation", qdeg_loss(drop, p), 1.6);
  ReceiveSequence gap{0, {{0, 0, 1, 0.2, 0, 0, 1}, {0, 0, 1, 0.2, 7, 7, 2}}};
  expect("stall", rebuf_loss(gap, p).first, 5.0);

  std::vector<UserProfile> pair{golden_profile(0), golden_profile(1)};
  for (auto& q : pair) q.theta = q.phi_qdeg = q.phi_rebuf = q.c_time = q.c_data = q.w_data = 0.0;
  SchedulerView v;
  v.capacity = 2.3;
  for (UserId n = 0; n < 2; ++n) {
    ViewUser u;
    u.id = n;
    u.profile = &pair[static_cast<std::size_t>(n)];
    u.buffer = 10.0;
    u.remaining = 10;
    u.started = true;
    v.users.push_back(u);
  }
  expect("helper drift", lyapunov_objective(v, 0, 5, 0.0), 62.0);
  SchedulerView alone = v;
  alone.users.pop_back();
  expect("self drift", lyapunov_objective(alone, 0, 5, 0.0), 0.0);

  v.capacity = 2.0;
  v.users[0].buffer = 39.5;
  v.users[1].buffer = 39.0;
  const auto wait = lyapunov_decide(v, {10.0, false});
  expect("wait timer", std::holds_alternative<Wait>(wait) ? std::get<Wait>(wait).duration : -1.0,
         1.0);

  UserProfile sp = golden_profile(0);
  sp.ladder = BitrateLadder({0.7, 2.3});
  sp.segment_len = 1.0;
  sp.phi_qdeg = sp.phi_rebuf = sp.w_data = 0.0;
  SlottedInstance inst;
  inst.profiles = {sp};
  inst.slots = 1;
  inst.capacity = {{5.0}};
  inst.together = {{{1}}};
  expect("slotted welfare", slotted_welfare(SlottedPlan{1, {{0, 0, 2, 0, 1}}}, inst).total,
         0.73392246847243);

  return {failed == 0, std::to_string(total - failed) + "/" + std::to_string(total) +
                           " goldens within 1e-9" + (first.empty() ? "" : ", first miss: " + first)};
}

Outcome determinism() {
  ScenarioConfig cfg;
  cfg.users = 6;
  cfg.horizon = 200.0;
  cfg.video_len = 150.0;
  cfg.repetitions = 3;
  cfg.bound = true;
  cfg.schedulers = {"lyapunov", "buffer", "prediction", "greedy-noncoop"};
  std::ostringstream a, b;
  write_summary_csv(a, sweep(cfg, "capacity_hi", {"1", "4"}));
  write_summary_csv(b, sweep(cfg, "capacity_hi", {"1", "4"}));
  return {a.str() == b.str(), std::to_string(a.str().size()) + " bytes compared"};
}

Outcome coordination() {
  const double horizon = 400.0;
  std::vector<TraceRow<double>> rows{
      {0, 0.0, 25.0, 3.5},  {0, 25.0, 75.0, 0.0},  {0, 75.0, horizon, 3.5},
      {1, 0.0, 50.0, 3.5},  {1, 50.0, 100.0, 0.0}, {1, 100.0, horizon, 3.5},
      {2, 0.0, horizon, 3.5}};
  NetworkTraces tr{CapacityTrace::from_rows(rows), colocated_mobility(3, horizon)};
  std::vector<UserProfile> ps;
  for (UserId n = 0; n < 3; ++n) {
    UserProfile p = golden_profile(n);
    p.ladder = BitrateLadder({0.5, 1.0, 2.2, 5.0});
    p.segment_len = 10.0;
    p.buffer_cap = 40.0;
    p.video_len = 200.0;
    ps.push_back(p);
  }
  const auto sched = make_lyapunov({});

  RunConfig on;
  const auto r = run(tr, ps, *sched, on);
  auto received_in = [&](const SimResult& res, UserId m, double from, double to) {
    int k = 0;
    for (const auto& rec : res.receives[static_cast<std::size_t>(m)].records) {
      if (rec.t_end > from && rec.t_end <= to && rec.downloader != m) ++k;
    }
    return k;
  };
  const int during0 = received_in(r, 0, 25.0, 75.0);
  const int during1 = received_in(r, 1, 50.0, 100.0);

  double last_end = 0.0;
  for (const auto& seq : r.downloads) {
    for (const auto& rec : seq.records) last_end = std::max(last_end, rec.t_end);
  }
  const double last_ready = r.ready_timeline.empty() ? 0.0 : r.ready_timeline.back().first;
  const bool halted = last_ready <= last_end + on.coordination.sleep_window + 1e-9 &&
                      last_end + on.coordination.sleep_window < horizon;

  RunConfig off;
  off.coordination.sleep_enabled = false;
  const auto awake = run(tr, ps, *sched, off);
  const double awake_last = awake.ready_timeline.empty() ? 0.0 : awake.ready_timeline.back().first;
  const bool keeps_going = awake.messages.ready > r.messages.ready && awake_last > last_end +
                                                                      on.coordination.sleep_window;
  const bool audits = audit_run(r, tr, ps).empty() && audit_run(awake, tr, ps).empty();

  std::ostringstream os;
  os << "outage receipts " << during0 << "/" << during1 << ", last download " << last_end
     << " s, last READY " << last_ready << " s (" << r.messages.ready << " total, "
     << r.messages.sleeps << " sleeps, " << r.messages.awakes << " awakes), without sleep "
     << awake.messages.ready << " READY until " << awake_last << " s";
  return {during0 > 0 && during1 > 0 && halted && keeps_going && audits, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1 constraint audit", constraint_audit},
      {"C2 solver vs brute force", solver_oracle},
      {"C3 refinement monotonicity", refinement_monotone},
      {"C4 online welfare below the refined bound", sandwich},
      {"C5 lyapunov dominance and cooperation gain", lyapunov_dominance},
      {"C6 gap shrinks with lambda", lambda_gap},
      {"C7 arithmetic goldens", goldens},
      {"C8 determinism", determinism},
      {"C9 coordination accounting", coordination},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
