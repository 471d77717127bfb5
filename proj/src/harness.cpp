#include "coopstream/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "coopstream/scheduler.hpp"
#include "coopstream/sim.hpp"
#include "coopstream/slotted.hpp"

namespace coopstream {

namespace {

UserProfile base_profile(const ScenarioConfig& cfg, UserId id) {
  UserProfile p;
  p.id = id;
  p.ladder = BitrateLadder(cfg.ladder);
  p.segment_len = cfg.segment_len;
  p.buffer_cap = cfg.buffer_cap;
  p.theta = cfg.theta;
  p.phi_qdeg = cfg.phi_qdeg;
  p.phi_rebuf = cfg.phi_rebuf;
  p.c_time = cfg.c_time;
  p.c_data = cfg.c_data;
  p.w_time = cfg.w_time;
  p.w_data = cfg.w_data;
  return p;
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, const ScenarioConfig& cfg,
                                          double delta_th, double Delta_th) {
  LyapunovConfig lc{cfg.lambda, cfg.skip_unprofitable};
  BaselineConfig bc{delta_th, Delta_th, cfg.prediction_window};
  if (name == "lyapunov") return make_lyapunov(lc);
  if (name == "buffer") return make_buffer_based(bc);
  if (name == "prediction") return make_prediction_based(bc);
  if (name == "greedy-noncoop") return make_greedy_noncoop(lc);
  throw ConfigError("unknown scheduler '" + name + "'");
}

RunConfig run_config(const ScenarioConfig& cfg, bool noncoop) {
  RunConfig rc;
  rc.force_noncoop = noncoop;
  rc.coordination.sleep_window = cfg.sleep_window;
  rc.coordination.ready_retry = cfg.ready_retry;
  rc.coordination.sleep_enabled = cfg.sleep_enabled;
  return rc;
}

double mean_video_bitrate(const SimResult& r, std::span<const UserProfile> profiles) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (!profiles[i].is_video_user) continue;
    sum += r.users[i].avg_bitrate;
    ++n;
  }
  return n ? sum / n : 0.0;
}

double mean_video_rebuf(const SimResult& r, std::span<const UserProfile> profiles) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    if (!profiles[i].is_video_user) continue;
    sum += r.users[i].rebuf_s;
    ++n;
  }
  return n ? sum / n : 0.0;
}

std::optional<double> relative_gain(double value, double reference) {
  if (reference == 0.0) return std::nullopt;
  return (value - reference) / std::abs(reference);
}

Stat summarize(const std::vector<double>& v) {
  Stat s;
  s.samples = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

template <typename F>
Stat summarize_by(const std::vector<RepetitionResult>& runs, F get) {
  std::vector<double> v;
  for (const auto& r : runs) {
    if (auto x = get(r)) v.push_back(*x);
  }
  return summarize(v);
}

void aggregate(SchedulerReport& rep) {
  using R = RepetitionResult;
  rep.avg_bitrate = summarize_by(rep.runs, [](const R& r) { return std::optional(r.avg_bitrate); });
  rep.bitrate_gain = summarize_by(rep.runs, [](const R& r) { return r.bitrate_gain; });
  rep.social_welfare =
      summarize_by(rep.runs, [](const R& r) { return std::optional(r.social_welfare); });
  rep.welfare_gain = summarize_by(rep.runs, [](const R& r) { return r.welfare_gain; });
  rep.rebuf_s = summarize_by(rep.runs, [](const R& r) { return std::optional(r.rebuf_s); });
  rep.gap_ratio = summarize_by(rep.runs, [](const R& r) { return r.gap_ratio; });
  rep.ready = summarize_by(rep.runs,
                           [](const R& r) { return std::optional(static_cast<double>(r.ready)); });
  rep.ack = summarize_by(rep.runs,
                         [](const R& r) { return std::optional(static_cast<double>(r.ack)); });
}

std::string record_path(const std::string& dir, const std::string& scenario,
                        const std::string& sched, int rep, const char* mode) {
  return (std::filesystem::path(dir) /
          (scenario + "_" + sched + "_r" + std::to_string(rep) + "_" + mode + ".csv"))
      .string();
}

void dump_records(const std::string& path, const SimResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_records_csv(out, r);
}

SchedulerReport run_scheduler(const ScenarioConfig& cfg, const std::string& name,
                              const std::vector<Scenario>& scenarios,
                              const std::vector<std::optional<BoundRegion>>& bounds,
                              const std::vector<std::optional<MicroInstance>>& micros,
                              double delta_th, double Delta_th, const std::string& records_dir) {
  SchedulerReport rep;
  rep.scheduler = name;
  rep.delta_th = delta_th;
  rep.Delta_th = Delta_th;
  const auto sched = make_scheduler(name, cfg, delta_th, Delta_th);
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& sc = scenarios[i];
    const SimResult coop = run(sc.traces, sc.profiles, *sched, run_config(cfg, sc.force_noncoop));
    const SimResult alone = run(sc.traces, sc.profiles, *sched, run_config(cfg, true));

    RepetitionResult r;
    r.seed = cfg.seed + i;
    r.avg_bitrate = mean_video_bitrate(coop, sc.profiles);
    r.avg_bitrate_noncoop = mean_video_bitrate(alone, sc.profiles);
    if (r.avg_bitrate_noncoop > 0.0) r.bitrate_gain = r.avg_bitrate / r.avg_bitrate_noncoop - 1.0;
    r.social_welfare = coop.social_welfare;
    r.social_welfare_noncoop = alone.social_welfare;
    r.welfare_gain = relative_gain(r.social_welfare, r.social_welfare_noncoop);
    r.rebuf_s = mean_video_rebuf(coop, sc.profiles);
    r.ready = coop.messages.ready;
    r.ack = coop.messages.ack;
    for (const auto& u : coop.users) r.downloads_for_others += u.downloads_for_others;

    if (bounds[i] && micros[i]) {
      const auto& mi = *micros[i];
      const SimResult small = run(mi.traces, mi.profiles, *sched, run_config(cfg, mi.force_noncoop));
      r.micro_welfare = small.social_welfare;
      r.micro_bound = bounds[i]->upper;
      if (bounds[i]->exact && bounds[i]->upper > 0.0) {
        r.gap_ratio = 1.0 - small.social_welfare / bounds[i]->upper;
      }
    }
    if (cfg.write_records && !records_dir.empty()) {
      const int rr = static_cast<int>(i);
      dump_records(record_path(records_dir, cfg.name, name, rr, "coop"), coop);
      dump_records(record_path(records_dir, cfg.name, name, rr, "noncoop"), alone);
    }
    rep.runs.push_back(std::move(r));
  }
  aggregate(rep);
  return rep;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string fixed(const Stat& s) { return s.samples ? fixed(s.mean) : ""; }

nlohmann::json stat_json(const Stat& s) {
  if (s.samples == 0) return nullptr;
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"samples", s.samples}};
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

Scenario make_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Scenario sc;
  int users = cfg.users;
  if (cfg.mobility == "csv") {
    try {
      sc.traces.capacity = read_capacity_csv_file(cfg.capacity_csv);
      sc.traces.mobility = read_mobility_csv_file(cfg.mobility_csv);
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
    users = sc.traces.capacity.users();
    if (sc.traces.mobility.users() != users ||
        std::abs(sc.traces.mobility.horizon() - sc.traces.capacity.horizon()) > kTimeEps) {
      throw ConfigError("capacity and mobility CSVs disagree on users or horizon");
    }
  } else {
    SynthConfig sy;
    sy.users = users;
    sy.horizon = cfg.horizon;
    sy.hotspots = cfg.hotspots;
    sy.dwell_mean = cfg.dwell_mean;
    sy.transition_mean = cfg.transition_mean;
    sy.cap_lo = cfg.capacity_lo;
    sy.cap_hi = cfg.capacity_hi;
    sy.cap_period = cfg.capacity_period;
    sy.cap_jitter = cfg.capacity_jitter;
    if (cfg.mobility == "dense-short" || cfg.mobility == "sparse-long") {
      sy = apply_mobility_preset(sy, cfg.mobility);
    }
    try {
      sc.traces = synth_traces(sy, seed);
    } catch (const ModelError& e) {
      throw ConfigError(e.what());
    }
    if (cfg.mobility == "full-coop") sc.traces.mobility = colocated_mobility(users, cfg.horizon);
    sc.force_noncoop = cfg.mobility == "non-coop";
  }

  // video users: a seeded random subset of the requested size
  const int videos = static_cast<int>(std::lround(cfg.video_fraction * users));
  std::vector<int> order(static_cast<std::size_t>(users));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int i = users - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<bool> video(static_cast<std::size_t>(users), false);
  for (int i = 0; i < videos; ++i) video[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  for (int n = 0; n < users; ++n) {
    UserProfile p = base_profile(cfg, n);
    p.is_video_user = video[static_cast<std::size_t>(n)];
    p.video_len = p.is_video_user ? cfg.video_len : 0.0;
    sc.profiles.push_back(p);
  }
  return sc;
}

std::optional<MicroInstance> micro_instance(const ScenarioConfig& cfg, const Scenario& sc) {
  const int users = std::min(cfg.bound_users, static_cast<int>(sc.profiles.size()));
  const double horizon = std::min(cfg.bound_horizon, std::floor(sc.traces.capacity.horizon()));
  if (horizon < 1.0) return std::nullopt;
  // Snap the network to the unit slot grid (slot-average capacity, location
  // at the slot start) so the online run and the slotted bound see the same
  // links.
  const int slots = static_cast<int>(horizon);
  std::vector<std::vector<TracePiece<double>>> cap(static_cast<std::size_t>(users));
  std::vector<std::vector<TracePiece<int>>> mob(static_cast<std::size_t>(users));
  for (int n = 0; n < users; ++n) {
    for (int t = 0; t < slots; ++t) {
      const double from = t;
      const double to = t + 1.0;
      cap[static_cast<std::size_t>(n)].push_back(
          {from, to, integrate_capacity(sc.traces.capacity, n, from, to)});
      mob[static_cast<std::size_t>(n)].push_back({from, to, sc.traces.mobility.value_at(n, from)});
    }
  }
  MicroInstance mi;
  mi.traces.capacity = CapacityTrace::from_pieces(std::move(cap));
  mi.traces.mobility = MobilityTrace::from_pieces(std::move(mob));
  mi.force_noncoop = sc.force_noncoop;
  const int levels = std::min(cfg.bound_max_levels, static_cast<int>(cfg.ladder.size()));
  std::vector<double> ladder(cfg.ladder.begin(), cfg.ladder.begin() + levels);
  bool any_video = false;
  for (int n = 0; n < users; ++n) {
    UserProfile p = sc.profiles[static_cast<std::size_t>(n)];
    p.ladder = BitrateLadder(ladder);
    p.segment_len = cfg.bound_segment_len;
    p.buffer_cap = cfg.bound_buffer_cap;
    p.video_len = p.is_video_user ? cfg.bound_video_len : 0.0;
    any_video = any_video || p.is_video_user;
    mi.profiles.push_back(p);
  }
  if (!any_video) return std::nullopt;
  return mi;
}

ExperimentReport run_experiment(const ScenarioConfig& cfg, const std::string& records_dir) {
  cfg.validate();
  ExperimentReport report;
  report.scenario = cfg.name;
  report.config = cfg;

  std::vector<Scenario> scenarios;
  std::vector<std::optional<MicroInstance>> micros;
  std::vector<std::optional<BoundRegion>> bounds;
  for (int r = 0; r < cfg.repetitions; ++r) {
    scenarios.push_back(make_scenario(cfg, cfg.seed + static_cast<std::uint64_t>(r)));
    micros.push_back(cfg.bound ? micro_instance(cfg, scenarios.back()) : std::nullopt);
    if (micros.back()) {
      const auto& mi = *micros.back();
      const auto inst = SlottedInstance::from_traces(mi.traces, mi.profiles, mi.force_noncoop);
      bounds.push_back(bound_region(inst, cfg.refine, SolverLimits{cfg.bound_node_budget}));
    } else {
      bounds.push_back(std::nullopt);
    }
  }

  for (const auto& name : cfg.schedulers) {
    const bool baseline = name == "buffer" || name == "prediction";
    if (!(baseline && cfg.baseline_tune)) {
      report.schedulers.push_back(run_scheduler(cfg, name, scenarios, bounds, micros, cfg.delta_th,
                                                cfg.Delta_th, records_dir));
      continue;
    }
    // pick the thresholds with the best mean welfare, as a tuned baseline
    std::optional<SchedulerReport> best;
    for (double d : {0.25, 0.5, 0.75}) {
      for (double D : {2.0, 4.0, 8.0}) {
        auto rep = run_scheduler(cfg, name, scenarios, bounds, micros, d, D, "");
        if (!best || rep.social_welfare.mean > best->social_welfare.mean) best = std::move(rep);
      }
    }
    if (cfg.write_records && !records_dir.empty()) {
      best = run_scheduler(cfg, name, scenarios, bounds, micros, best->delta_th, best->Delta_th,
                           records_dir);
    }
    report.schedulers.push_back(std::move(*best));
  }
  return report;
}

std::vector<ExperimentReport> sweep(const ScenarioConfig& base, const std::string& axis,
                                    const std::vector<std::string>& values,
                                    const std::string& records_dir) {
  if (values.empty()) {
    // still reject an unknown axis
    ScenarioConfig probe = base;
    set_config_value(probe, axis, "0");
  }
  std::vector<ExperimentReport> out;
  for (const auto& v : values) {
    ScenarioConfig cfg = base;
    set_config_value(cfg, axis, v);
    cfg.name = base.name + "_" + axis + "=" + v;
    out.push_back(run_experiment(cfg, records_dir));
  }
  return out;
}

nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json scheds = nlohmann::json::array();
  for (const auto& s : r.schedulers) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& x : s.runs) {
      runs.push_back({{"seed", x.seed},
                      {"avg_bitrate_mbps", x.avg_bitrate},
                      {"avg_bitrate_noncoop_mbps", x.avg_bitrate_noncoop},
                      {"bitrate_gain", opt_json(x.bitrate_gain)},
                      {"social_welfare", x.social_welfare},
                      {"social_welfare_noncoop", x.social_welfare_noncoop},
                      {"welfare_gain", opt_json(x.welfare_gain)},
                      {"rebuf_s", x.rebuf_s},
                      {"micro_instance_gap", opt_json(x.gap_ratio)},
                      {"micro_welfare", opt_json(x.micro_welfare)},
                      {"micro_bound", opt_json(x.micro_bound)},
                      {"ready", x.ready},
                      {"ack", x.ack},
                      {"downloads_for_others", x.downloads_for_others}});
    }
    scheds.push_back({{"scheduler", s.scheduler},
                      {"delta_th", s.delta_th},
                      {"Delta_th", s.Delta_th},
                      {"avg_bitrate_mbps", stat_json(s.avg_bitrate)},
                      {"bitrate_gain", stat_json(s.bitrate_gain)},
                      {"social_welfare", stat_json(s.social_welfare)},
                      {"welfare_gain", stat_json(s.welfare_gain)},
                      {"rebuf_s", stat_json(s.rebuf_s)},
                      {"micro_instance_gap", stat_json(s.gap_ratio)},
                      {"ready", stat_json(s.ready)},
                      {"ack", stat_json(s.ack)},
                      {"runs", runs}});
  }
  std::ostringstream cfg;
  print_config(cfg, r.config);
  return {{"scenario", r.scenario}, {"config", cfg.str()}, {"schedulers", scheds}};
}

void write_summary_csv(std::ostream& out, const std::vector<ExperimentReport>& reports) {
  out << "scenario,scheduler,avg_bitrate_mbps,bitrate_gain,social_welfare,welfare_gain,rebuf_s,"
         "gap_ratio\n";
  for (const auto& r : reports) {
    for (const auto& s : r.schedulers) {
      out << r.scenario << ',' << s.scheduler << ',' << fixed(s.avg_bitrate) << ','
          << fixed(s.bitrate_gain) << ',' << fixed(s.social_welfare) << ','
          << fixed(s.welfare_gain) << ',' << fixed(s.rebuf_s) << ',' << fixed(s.gap_ratio)
          << '\n';
    }
  }
}

}  // namespace coopstream
