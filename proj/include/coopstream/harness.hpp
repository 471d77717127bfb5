#pragma once

// Experiment runner: scenario generation, paired cooperative/non-cooperative
// scheduler runs, optional micro-instance bound gap, and report export.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopstream/model.hpp"
#include "coopstream/traces.hpp"

namespace coopstream {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int users = 10;
  double video_fraction = 0.6;
  double capacity_lo = 0.0;
  double capacity_hi = 5.0;
  double capacity_period = 10.0;
  double capacity_jitter = 0.5;
  // dense-short, sparse-long, synthetic, full-coop, non-coop or csv
  std::string mobility = "dense-short";
  int hotspots = 2;
  double dwell_mean = 20.0;
  double transition_mean = 10.0;
  std::string capacity_csv;
  std::string mobility_csv;

  double horizon = 600.0;
  double video_len = 500.0;
  double segment_len = 2.0;
  double buffer_cap = 40.0;
  std::vector<double> ladder{0.2, 0.4, 0.7, 1.3, 2.3};
  double theta = 1.0;
  double phi_qdeg = 1.0;
  double phi_rebuf = 1.0;
  double c_time = 0.5;
  double c_data = 0.1;
  double w_time = 0.0;
  double w_data = 0.05;

  std::vector<std::string> schedulers{"lyapunov", "buffer", "prediction"};
  double lambda = 100.0;
  bool skip_unprofitable = true;
  double delta_th = 0.5;
  double Delta_th = 4.0;
  int prediction_window = 3;
  bool baseline_tune = false;

  double sleep_window = 10.0;
  double ready_retry = 1.0;
  bool sleep_enabled = true;

  std::uint64_t seed = 1;
  int repetitions = 1;
  bool write_records = false;

  bool bound = false;
  int refine = 2;
  int bound_users = 2;
  double bound_horizon = 6.0;
  double bound_video_len = 2.0;
  double bound_segment_len = 1.0;
  double bound_buffer_cap = 2.0;
  int bound_max_levels = 2;
  std::int64_t bound_node_budget = 20'000'000;

  void validate() const;  // throws ConfigError
};

// `key = value` lines; `#` starts a comment. Unknown keys are errors.
ScenarioConfig parse_config(std::istream& in);
ScenarioConfig parse_config_file(const std::string& path);
void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value);
void print_config(std::ostream& out, const ScenarioConfig& cfg);

struct Stat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single value
  int samples = 0;      // values that were available
};

struct RepetitionResult {
  std::uint64_t seed = 0;
  double avg_bitrate = 0.0;
  double avg_bitrate_noncoop = 0.0;
  std::optional<double> bitrate_gain;
  double social_welfare = 0.0;
  double social_welfare_noncoop = 0.0;
  std::optional<double> welfare_gain;
  double rebuf_s = 0.0;  // mean per video user
  std::optional<double> gap_ratio;
  std::optional<double> micro_welfare;  // online welfare on the micro instance
  std::optional<double> micro_bound;    // slotted optimum after `refine` halvings
  std::int64_t ready = 0;
  std::int64_t ack = 0;
  std::int64_t downloads_for_others = 0;
};

struct SchedulerReport {
  std::string scheduler;
  double delta_th = 0.0;  // baseline thresholds actually used
  double Delta_th = 0.0;
  std::vector<RepetitionResult> runs;
  Stat avg_bitrate, bitrate_gain, social_welfare, welfare_gain, rebuf_s, gap_ratio;
  Stat ready, ack;
};

struct ExperimentReport {
  std::string scenario;
  ScenarioConfig config;
  std::vector<SchedulerReport> schedulers;
};

// Draws the network and profiles for one repetition.
struct Scenario {
  NetworkTraces traces;
  std::vector<UserProfile> profiles;
  bool force_noncoop = false;
};
Scenario make_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

// Prefix of a scenario (first bound_users users, first bound_horizon
// seconds, floored to whole slots) with the bound_* profile settings, small
// enough for the exact slotted solver. Traces are made piecewise constant
// on unit slots. nullopt when it has no video user.
struct MicroInstance {
  NetworkTraces traces;
  std::vector<UserProfile> profiles;
  bool force_noncoop = false;
};
std::optional<MicroInstance> micro_instance(const ScenarioConfig& cfg, const Scenario& sc);

// `records_dir` non-empty with write_records set: one record CSV per run.
ExperimentReport run_experiment(const ScenarioConfig& cfg, const std::string& records_dir = "");
std::vector<ExperimentReport> sweep(const ScenarioConfig& base, const std::string& axis,
                                    const std::vector<std::string>& values,
                                    const std::string& records_dir = "");

nlohmann::json to_json(const ExperimentReport& r);
void write_summary_csv(std::ostream& out, const std::vector<ExperimentReport>& reports);

}  // namespace coopstream
