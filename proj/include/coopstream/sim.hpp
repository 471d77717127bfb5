#pragma once

// Event-driven simulation of the segmented cooperative download operation.

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopstream/coordination.hpp"
#include "coopstream/model.hpp"
#include "coopstream/qoe.hpp"
#include "coopstream/scheduler.hpp"
#include "coopstream/traces.hpp"

namespace coopstream {

// A scheduler asked for something the model forbids.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  bool force_noncoop = false;  // nobody encounters anybody else
  CoordinationConfig coordination;
};

// A download cut short because downloader and owner separated.
struct AbortedDownload {
  UserId downloader = 0;
  UserId owner = 0;
  int level = 1;
  double t_start = 0.0;
  double t_abort = 0.0;
  double energy = 0.0;  // cellular energy spent before the abort
};

struct UserMetrics {
  WelfareBreakdown welfare;     // aborted-download energy included in energy_cell
  double avg_bitrate = 0.0;     // mean bitrate of received segments, Mbps
  double rebuf_s = 0.0;         // stall seconds observed during playback
  int segments_received = 0;
  int downloads_for_others = 0;
};

struct SimResult {
  double horizon = 0.0;
  std::vector<DownloadSequence> downloads;  // indexed by downloader
  std::vector<ReceiveSequence> receives;    // indexed by owner
  std::vector<RebufferLog> rebuffer_logs;   // stalls observed by the engine
  std::vector<AbortedDownload> aborted;
  int discarded_at_horizon = 0;
  std::vector<UserMetrics> users;
  double social_welfare = 0.0;
  MessageStats messages;
  std::vector<std::pair<double, std::int64_t>> ready_timeline;
};

// Deterministic for fixed inputs. Throws SimError if the scheduler returns
// an infeasible decision and ModelError on invalid inputs.
SimResult run(const NetworkTraces& traces, std::span<const UserProfile> profiles,
              const Scheduler& scheduler, const RunConfig& cfg = {});

// Buffer of an owner `elapsed` seconds after a receipt that left it at
// `after_receipt`, and the stall accumulated over that time.
struct Playback {
  double buffer = 0.0;
  double stall = 0.0;
};
Playback advance_playback(double after_receipt, double elapsed);

nlohmann::json to_json(const SimResult& r);
void write_records_csv(std::ostream& out, const SimResult& r);

// Independent re-check of a finished run. Returns one line per violation.
std::vector<std::string> audit_run(const SimResult& r, const NetworkTraces& traces,
                                   std::span<const UserProfile> profiles,
                                   bool force_noncoop = false);

}  // namespace coopstream
